"""Floating random walk capacitance extraction."""

try:
    from ._core import (
        analytic_plate_capacitance,
        expected_steps_uniform,
        extract_file,
        extract_json,
        reference_capacitance_file,
        run_cli,
        transit_tv,
        __version__,
    )
except ImportError:
    # Development builds put the extension on sys.path directly instead of
    # inside the package.
    from _core import (
        analytic_plate_capacitance,
        expected_steps_uniform,
        extract_file,
        extract_json,
        reference_capacitance_file,
        run_cli,
        transit_tv,
        __version__,
    )

__all__ = [
    "analytic_plate_capacitance",
    "expected_steps_uniform",
    "extract_file",
    "extract_json",
    "reference_capacitance_file",
    "run_cli",
    "transit_tv",
    "__version__",
]
