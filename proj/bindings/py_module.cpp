#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "frwcap/cli.hpp"
#include "frwcap/engine.hpp"
#include "frwcap/geometry.hpp"
#include "frwcap/microwalk.hpp"
#include "frwcap/oracle.hpp"
#include "frwcap/sgf.hpp"

namespace py = pybind11;
using namespace frwcap;

namespace {

Config config_from_kwargs(const py::kwargs& kw, int& threads) {
  Config cfg;
  threads = 0;
  for (const auto& item : kw) {
    const std::string key = py::cast<std::string>(item.first);
    const py::handle val = item.second;
    if (key == "grid_n")
      cfg.grid_n = py::cast<int>(val);
    else if (key == "expansion")
      cfg.expansion = py::cast<double>(val);
    else if (key == "mode")
      cfg.mode = parse_mode(py::cast<std::string>(val));
    else if (key == "tol")
      cfg.rel_std_tol = py::cast<double>(val);
    else if (key == "min_walks")
      cfg.min_walks = py::cast<long>(val);
    else if (key == "max_walks")
      cfg.max_walks = py::cast<long>(val);
    else if (key == "batch")
      cfg.batch = py::cast<long>(val);
    else if (key == "seed")
      cfg.seed = py::cast<uint64_t>(val);
    else if (key == "snap_tol")
      cfg.snap_tol = py::cast<double>(val);
    else if (key == "hop_cap")
      cfg.hop_cap = py::cast<long>(val);
    else if (key == "gaussian_gap_fraction")
      cfg.gaussian_gap_fraction = py::cast<double>(val);
    else if (key == "world_margin")
      cfg.world_margin = py::cast<double>(val);
    else if (key == "threads")
      threads = py::cast<int>(val);
    else
      throw py::value_error("unknown option: " + key);
  }
  cfg.validate();
  return cfg;
}

py::dict result_to_dict(const CapacitanceResult& r) {
  py::list terms;
  for (const TerminalEstimate& t : r.terminals) {
    py::dict e;
    e["conductor_id"] = t.conductor_id;
    e["capacitance_farads"] = t.value;
    e["std_err_farads"] = t.std_err;
    e["walks_landed"] = t.walks_landed;
    terms.append(e);
  }
  py::dict first;
  first["stratified"] = r.dispatch.first_stratified;
  first["shrunk"] = r.dispatch.first_shrunk;
  first["layered"] = r.dispatch.first_layered;
  first["homogenized"] = r.dispatch.first_homogenized;
  py::dict sub;
  sub["cached"] = r.dispatch.cached;
  sub["microwalk"] = r.dispatch.microwalk;
  sub["microwalk_e"] = r.dispatch.microwalk_e;
  sub["fdm"] = r.dispatch.fdm;
  py::dict dispatch;
  dispatch["first"] = first;
  dispatch["subsequent"] = sub;
  py::dict cache;
  cache["hits"] = r.cache_hits;
  cache["misses"] = r.cache_misses;

  py::dict d;
  d["master_id"] = r.master_id;
  d["terminals"] = terms;
  d["walks"] = r.walks;
  d["converged"] = r.converged;
  d["aborted"] = r.aborted;
  d["resampled"] = r.resampled;
  d["dispatch_stats"] = dispatch;
  d["cache"] = cache;
  d["t_mw_seconds"] = r.t_mw_seconds;
  d["t_total_seconds"] = r.t_total_seconds;
  return d;
}

py::dict extract_structure(const Structure& s, const Config& cfg,
                           int threads) {
  CapacitanceResult res;
  {
    py::gil_scoped_release release;
    res = extract(s, cfg, threads);
  }
  return result_to_dict(res);
}

py::dict reference_to_dict(const ReferenceSolution& ref) {
  py::list ids;
  for (int id : ref.terminal_ids) ids.append(id);
  py::list rows;
  for (int i = 0; i < ref.capacitance.rows(); ++i) {
    py::list row;
    for (int j = 0; j < ref.capacitance.cols(); ++j)
      row.append(ref.capacitance(i, j));
    rows.append(row);
  }
  py::dict d;
  d["terminal_ids"] = ids;
  d["capacitance_farads"] = rows;
  d["residual"] = ref.residual;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "floating random walk capacitance extraction";

  m.def(
      "extract_json",
      [](const std::string& text, const py::kwargs& kw) {
        int threads = 0;
        const Config cfg = config_from_kwargs(kw, threads);
        return extract_structure(parse_structure(text, cfg.world_margin),
                                 cfg, threads);
      },
      py::arg("structure_json"),
      "Extract the master conductor's capacitance row from a structure "
      "given as JSON text. Keyword options mirror the CLI flags.");

  m.def(
      "extract_file",
      [](const std::string& path, const py::kwargs& kw) {
        int threads = 0;
        const Config cfg = config_from_kwargs(kw, threads);
        return extract_structure(
            parse_structure_file(path, cfg.world_margin), cfg, threads);
      },
      py::arg("path"),
      "Extract the master conductor's capacitance row from a structure "
      "file.");

  m.def(
      "reference_capacitance_file",
      [](const std::string& path, int resolution, double world_margin) {
        const Structure s = parse_structure_file(path, world_margin);
        ReferenceSolution ref;
        {
          py::gil_scoped_release release;
          ref = reference_capacitance(s, resolution);
        }
        return reference_to_dict(ref);
      },
      py::arg("path"), py::arg("resolution") = 48,
      py::arg("world_margin") = 5.0,
      "Dense finite-difference capacitance matrix of the whole structure.");

  m.def("analytic_plate_capacitance", &analytic_plate_capacitance,
        py::arg("layers"), py::arg("area_m2"),
        "Series-stack parallel-plate capacitance; layers are (thickness_nm, "
        "eps_r) pairs.");

  m.def(
      "transit_tv",
      [](int n, uint64_t grid_seed, long samples, uint64_t sample_seed) {
        py::gil_scoped_release release;
        SplitMix64 grid_rng(grid_seed, 0);
        const DielectricGrid grid = random_voxel_grid(n, grid_rng);
        const DiscreteSGF sgf = solve_sgf(assemble_system(grid), false);
        MicroWalkScratch scratch;
        SplitMix64 rng(sample_seed, 1);
        const auto sampler = [&](SplitMix64& r) {
          return microwalk_transit(grid, r, scratch).panel;
        };
        return compare_distribution(sgf.probs, sampler, samples, rng)
            .tv_distance;
      },
      py::arg("n"), py::arg("grid_seed"), py::arg("samples"),
      py::arg("sample_seed"),
      "Total variation distance between sampled lattice transits and the "
      "exact surface distribution on a random grid.");

  m.def(
      "expected_steps_uniform",
      [](int n) {
        py::gil_scoped_release release;
        Structure u;
        u.world = {{-1e6, -1e6, -1e6}, {1e6, 1e6, 1e6}};
        return expected_steps(
            assemble_system(build_grid(u, {{0, 0, 0}, n / 2.0}, n)));
      },
      py::arg("n"),
      "Expected lattice steps per transit on a uniform dielectric cube.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int rc;
        {
          py::gil_scoped_release release;
          rc = run_cli(args, out, err);
        }
        return py::make_tuple(rc, out.str(), err.str());
      },
      py::arg("args"),
      "Run the command-line interface in-process; returns (exit_code, "
      "stdout, stderr).");

  m.attr("__version__") = "1.0.0";
}
