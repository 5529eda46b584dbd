#pragma once

#include <Eigen/SparseCore>

#include <array>
#include <cstdint>
#include <vector>

#include "frwcap/geometry.hpp"
#include "frwcap/rng.hpp"

namespace frwcap {

// Lattice conventions shared by the FD assembly, MicroWalk and the oracles.
//
// Nodes are voxel centers. Boundary nodes live on the cube surface at the
// outer-face centers of boundary-layer voxels (half-pitch spacing), so a
// transition's continuation point is the panel center.
//
// Directions: 0:-x 1:+x 2:-y 3:+y 4:-z 5:+z.
// Surface panels: 6 faces x n^2, panel = (face*n + v)*n + u where (u,v) are
// the in-face voxel coordinates ((j,k) for x faces, (i,k) for y, (i,j) for z).
// Conductor-face panels (masked grids) are appended after the 6n^2 surface
// panels, ordered by (free voxel index, direction).

inline constexpr int kDirOpposite[6] = {1, 0, 3, 2, 5, 4};
inline constexpr int kDirAxis[6] = {0, 0, 1, 1, 2, 2};
inline constexpr int kDirSign[6] = {-1, +1, -1, +1, -1, +1};

inline Vec3i dir_step(int dir) {
  Vec3i d;
  d[kDirAxis[dir]] = kDirSign[dir];
  return d;
}

inline int surface_panel_index(int n, int face, int u, int v) {
  return (face * n + v) * n + u;
}

// panel for a boundary-layer voxel exiting through `dir` (must point out of
// the lattice)
int surface_panel_of(int n, const Vec3i& voxel, int dir);

// inverse of surface_panel_index; returns {face, u, v}
std::array<int, 3> decode_surface_panel(int n, int panel);

// continuous coordinates of a surface panel center
Vec3 surface_panel_center(const Cube& cube, int n, int panel);

// panel center offsets within its face in units of the cube half-width,
// each in (-1, 1)
std::array<double, 2> surface_panel_offsets(int n, int panel);

// The node where transits start and SGFs are evaluated: ((n-1)/2)^3. For odd
// n this is the exact cube center. Even-n cubes are expected to be placed by
// the caller so that the walk point coincides with this node (see
// transit_cube in microwalk.hpp).
inline Vec3i start_node(int n) {
  const int c = (n - 1) / 2;
  return {c, c, c};
}

struct PanelInfo {
  Vec3 center;             // continuous absorption point
  int32_t conductor = -1;  // -1 for cube-surface panels
  int8_t face = -1;        // surface: face 0..5; conductor: direction 0..5
};

// Finite-difference system of one transition cube. Interior nodes are the
// non-conductor voxels; row r of a_ii has diagonal sum(alpha) and
// off-diagonals -alpha_i for interior neighbors, where alpha_i =
// eps_i/(eps_i+eps_v) for interior neighbors and 1 for boundary panels
// (a_ib entries). s_ii = diag(eps)*a_ii stored symmetric by construction;
// it is positive definite, which is what the solver relies on.
struct FDSystem {
  int n = 0;
  Cube cube;
  Eigen::SparseMatrix<double> a_ii;
  Eigen::SparseMatrix<double> a_ib;
  Eigen::SparseMatrix<double> s_ii;
  Eigen::VectorXd eps_interior;
  Eigen::VectorXd alpha_row_sum;      // diagonal of a_ii
  int center_row = -1;                // row of start_node(n)
  std::vector<int32_t> row_of_node;   // grid linear index -> row, -1 masked
  std::vector<int32_t> node_of_row;
  std::vector<PanelInfo> panels;      // surface panels first
  int surface_panels = 0;             // 6 n^2

  int interior_count() const { return static_cast<int>(node_of_row.size()); }
  int panel_count() const { return static_cast<int>(panels.size()); }
};

// Builds the FD system of the grid. Masked grids exclude conductor voxels
// from the interior and expose their faces as absorbing panels tagged with
// the conductor id. Throws when no interior node remains or when the start
// node is masked.
FDSystem assemble_system(const DielectricGrid& grid);

struct SolverOptions {
  double rel_tol = 1e-10;
  int max_iter_factor = 20;  // cap = factor * unknowns
};

class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, double residual)
      : std::runtime_error(what), residual(residual) {}
  double residual = 0;
};

// Discrete surface Green's function: exit distribution over the panels for a
// walk starting at the start node, plus central-difference directional
// derivative kernels used by first-transition weights. Kernels are stored in
// 1/nm at the pitch they were solved at; rescale by (pitch/other_pitch) to
// evaluate on a geometrically similar cube of different size.
struct DiscreteSGF {
  int n = 0;
  double pitch = 1.0;  // nm per voxel at solve time
  int surface_panels = 0;
  std::vector<double> probs;
  std::vector<double> cdf;                        // inclusive prefix sums
  std::array<std::vector<double>, 3> grad_kernels;  // empty if not solved

  bool has_kernels() const { return !grad_kernels[0].empty(); }
};

// Solves probs = e_c^T a_ii^-1 a_ib via one adjoint solve (s_ii z = e_c,
// y = eps .* z, probs = a_ib^T y) and, when requested, the three kernel
// rows (e_{c+a} - e_{c-a})^T a_ii^-1 a_ib / (2*pitch). Uses diagonally
// preconditioned conjugate gradients with a direct factorization fallback;
// throws SolveError when both fail or normalization is violated.
DiscreteSGF solve_sgf(const FDSystem& sys, bool with_kernels = true,
                      const SolverOptions& opts = {});

// Expected number of micro-steps before absorption for a walk started at
// the start node: e_c^T a_ii^-1 d with d the row-sum vector, which is the
// fundamental-matrix identity e_c^T (I-Q)^-1 1 of the absorbing chain whose
// step probabilities are alpha_i / sum(alpha).
double expected_steps(const FDSystem& sys, const SolverOptions& opts = {});

// CDF inversion; u in [0,1)
int sample_panel(const DiscreteSGF& sgf, double u);

template <class Rng>
int sample_panel(const DiscreteSGF& sgf, Rng& rng) {
  return sample_panel(sgf, rng.uniform());
}

}  // namespace frwcap
