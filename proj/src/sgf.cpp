#include "frwcap/sgf.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <optional>

namespace frwcap {

int surface_panel_of(int n, const Vec3i& voxel, int dir) {
  int u, v;
  switch (kDirAxis[dir]) {
    case 0:
      u = voxel.y;
      v = voxel.z;
      break;
    case 1:
      u = voxel.x;
      v = voxel.z;
      break;
    default:
      u = voxel.x;
      v = voxel.y;
      break;
  }
  return surface_panel_index(n, dir, u, v);
}

std::array<int, 3> decode_surface_panel(int n, int panel) {
  const int face = panel / (n * n);
  const int rem = panel % (n * n);
  return {face, rem % n, rem / n};
}

Vec3 surface_panel_center(const Cube& cube, int n, int panel) {
  const auto [face, u, v] = decode_surface_panel(n, panel);
  const int axis = kDirAxis[face];
  const double h = cube.half_width, pitch = 2.0 * h / n;
  Vec3 p;
  p[axis] = cube.center[axis] + kDirSign[face] * h;
  const int b1 = axis == 0 ? 1 : 0;
  const int b2 = axis == 2 ? 1 : 2;
  p[b1] = cube.center[b1] - h + (u + 0.5) * pitch;
  p[b2] = cube.center[b2] - h + (v + 0.5) * pitch;
  return p;
}

std::array<double, 2> surface_panel_offsets(int n, int panel) {
  const auto [face, u, v] = decode_surface_panel(n, panel);
  (void)face;
  return {(u + 0.5) * 2.0 / n - 1.0, (v + 0.5) * 2.0 / n - 1.0};
}

FDSystem assemble_system(const DielectricGrid& grid) {
  const int n = grid.n;
  const int nvox = n * n * n;

  FDSystem sys;
  sys.n = n;
  sys.cube = grid.cube;
  sys.surface_panels = 6 * n * n;

  sys.row_of_node.assign(nvox, -1);
  for (int idx = 0; idx < nvox; ++idx) {
    if (!grid.has_mask() || grid.conductor_mask[idx] < 0) {
      sys.row_of_node[idx] = static_cast<int32_t>(sys.node_of_row.size());
      sys.node_of_row.push_back(idx);
    }
  }
  const int rows = sys.interior_count();
  if (rows == 0)
    throw std::invalid_argument("assemble_system: no interior nodes");

  const Vec3i c = start_node(n);
  sys.center_row = sys.row_of_node[grid.index(c.x, c.y, c.z)];
  if (sys.center_row < 0)
    throw std::invalid_argument("assemble_system: start node is masked");

  sys.panels.reserve(sys.surface_panels);
  for (int p = 0; p < sys.surface_panels; ++p) {
    PanelInfo info;
    info.center = surface_panel_center(grid.cube, n, p);
    info.face = static_cast<int8_t>(decode_surface_panel(n, p)[0]);
    sys.panels.push_back(info);
  }

  sys.eps_interior.resize(rows);
  sys.alpha_row_sum.resize(rows);
  std::vector<Eigen::Triplet<double>> t_ii, t_s, t_ib;
  t_ii.reserve(static_cast<size_t>(rows) * 7);
  t_s.reserve(static_cast<size_t>(rows) * 7);
  t_ib.reserve(static_cast<size_t>(rows) * 2);

  const double pitch = grid.pitch();
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int idx = grid.index(i, j, k);
        const int r = sys.row_of_node[idx];
        if (r < 0) continue;
        const double eps_v = grid.eps[idx];
        sys.eps_interior[r] = eps_v;

        double row_sum = 0;
        for (int dir = 0; dir < 6; ++dir) {
          const Vec3i d = dir_step(dir);
          const int ni = i + d.x, nj = j + d.y, nk = k + d.z;
          if (ni < 0 || ni >= n || nj < 0 || nj >= n || nk < 0 || nk >= n) {
            const int panel = surface_panel_of(n, {i, j, k}, dir);
            t_ib.emplace_back(r, panel, 1.0);
            row_sum += 1.0;
            continue;
          }
          const int nidx = grid.index(ni, nj, nk);
          const int nr = sys.row_of_node[nidx];
          if (nr < 0) {  // conductor voxel: absorbing panel on the face
            const int panel = static_cast<int>(sys.panels.size());
            PanelInfo info;
            Vec3 fc = grid.voxel_center(i, j, k);
            fc[kDirAxis[dir]] += kDirSign[dir] * pitch / 2;
            info.center = fc;
            info.conductor = grid.conductor_mask[nidx];
            info.face = static_cast<int8_t>(dir);
            sys.panels.push_back(info);
            t_ib.emplace_back(r, panel, 1.0);
            row_sum += 1.0;
            continue;
          }
          const double eps_i = grid.eps[nidx];
          const double alpha = eps_i / (eps_i + eps_v);
          t_ii.emplace_back(r, nr, -alpha);
          // (eps_v*eps_i)/(eps_v+eps_i) is bit-symmetric in (v,i), keeping
          // s_ii exactly symmetric
          t_s.emplace_back(r, nr, -(eps_v * eps_i) / (eps_v + eps_i));
          row_sum += alpha;
        }
        t_ii.emplace_back(r, r, row_sum);
        t_s.emplace_back(r, r, eps_v * row_sum);
        sys.alpha_row_sum[r] = row_sum;
      }

  sys.a_ii.resize(rows, rows);
  sys.a_ii.setFromTriplets(t_ii.begin(), t_ii.end());
  sys.s_ii.resize(rows, rows);
  sys.s_ii.setFromTriplets(t_s.begin(), t_s.end());
  sys.a_ib.resize(rows, sys.panel_count());
  sys.a_ib.setFromTriplets(t_ib.begin(), t_ib.end());
  sys.a_ii.makeCompressed();
  sys.s_ii.makeCompressed();
  sys.a_ib.makeCompressed();
  return sys;
}

namespace {

// CG with Jacobi preconditioning, direct Cholesky as fallback. The adjoint
// trick: a_ii^T y = b is solved as s_ii z = b, y = eps .* z, valid because
// s_ii = diag(eps) a_ii is symmetric positive definite.
class SpdSolver {
 public:
  SpdSolver(const FDSystem& sys, const SolverOptions& opts) : sys_(sys) {
    cg_.setTolerance(opts.rel_tol);
    cg_.setMaxIterations(
        static_cast<Eigen::Index>(opts.max_iter_factor) * sys.s_ii.rows());
    cg_.compute(sys.s_ii);
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) {
    if (!force_direct_) {
      Eigen::VectorXd x = cg_.solve(rhs);
      last_residual_ = cg_.error();
      if (cg_.info() == Eigen::Success) return x;
    }
    return solve_direct(rhs);
  }

  Eigen::VectorXd solve_direct(const Eigen::VectorXd& rhs) {
    force_direct_ = true;
    if (!ldlt_) {
      ldlt_.emplace();
      ldlt_->compute(sys_.s_ii);
      if (ldlt_->info() != Eigen::Success)
        throw SolveError("transition cube solve failed: factorization error",
                         last_residual_);
    }
    Eigen::VectorXd x = ldlt_->solve(rhs);
    last_residual_ = (sys_.s_ii * x - rhs).norm() /
                     std::max(rhs.norm(), 1e-300);
    return x;
  }

  // y solving a_ii^T y = b
  Eigen::VectorXd adjoint(const Eigen::VectorXd& b) {
    return sys_.eps_interior.cwiseProduct(solve(b));
  }

  double last_residual() const { return last_residual_; }
  bool using_direct() const { return force_direct_; }

 private:
  const FDSystem& sys_;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                           Eigen::Lower | Eigen::Upper>
      cg_;
  std::optional<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
  double last_residual_ = 0;
  bool force_direct_ = false;
};

Eigen::VectorXd unit_vector(int size, int at) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(size);
  e[at] = 1.0;
  return e;
}

// interior row of the node displaced from the start node by `delta` along
// `axis`; -1 when outside the lattice or masked
int neighbor_row(const FDSystem& sys, int axis, int delta) {
  Vec3i c = start_node(sys.n);
  c[axis] += delta;
  if (c[axis] < 0 || c[axis] >= sys.n) return -1;
  const int idx = (c.z * sys.n + c.y) * sys.n + c.x;
  return sys.row_of_node[idx];
}

}  // namespace

DiscreteSGF solve_sgf(const FDSystem& sys, bool with_kernels,
                      const SolverOptions& opts) {
  const int rows = sys.interior_count();
  const int panels = sys.panel_count();
  SpdSolver solver(sys, opts);

  DiscreteSGF sgf;
  sgf.n = sys.n;
  sgf.pitch = 2.0 * sys.cube.half_width / sys.n;
  sgf.surface_panels = sys.surface_panels;

  const Eigen::VectorXd e_c = unit_vector(rows, sys.center_row);
  Eigen::VectorXd p;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const Eigen::VectorXd y = attempt == 0
        ? solver.adjoint(e_c)
        : sys.eps_interior.cwiseProduct(solver.solve_direct(e_c));
    p = sys.a_ib.transpose() * y;
    const double sum_err = std::abs(p.sum() - 1.0);
    if (sum_err <= 1e-9 && p.minCoeff() >= -1e-9) break;
    if (attempt == 1 || solver.using_direct())
      throw SolveError("transition cube solve failed normalization check",
                       sum_err);
  }

  sgf.probs.resize(panels);
  sgf.cdf.resize(panels);
  double run = 0;
  for (int b = 0; b < panels; ++b) {
    sgf.probs[b] = std::max(p[b], 0.0);
    run += sgf.probs[b];
    sgf.cdf[b] = run;
  }

  if (with_kernels) {
    for (int axis = 0; axis < 3; ++axis) {
      const int rp = neighbor_row(sys, axis, +1);
      const int rm = neighbor_row(sys, axis, -1);
      auto& kernel = sgf.grad_kernels[axis];
      kernel.assign(panels, 0.0);
      Eigen::VectorXd rhs;
      double denom;
      if (rp >= 0 && rm >= 0) {
        rhs = unit_vector(rows, rp) - unit_vector(rows, rm);
        denom = 2.0 * sgf.pitch;
      } else if (rp >= 0) {
        rhs = unit_vector(rows, rp) - e_c;
        denom = sgf.pitch;
      } else if (rm >= 0) {
        rhs = e_c - unit_vector(rows, rm);
        denom = sgf.pitch;
      } else {
        continue;  // n=1: no interior neighbors, zero kernel
      }
      const Eigen::VectorXd row = sys.a_ib.transpose() * solver.adjoint(rhs);
      for (int b = 0; b < panels; ++b) kernel[b] = row[b] / denom;
    }
  }
  return sgf;
}

double expected_steps(const FDSystem& sys, const SolverOptions& opts) {
  SpdSolver solver(sys, opts);
  // a_ii t = d  <=>  s_ii t = eps .* d, with d the row sums; one step is
  // taken per chain transition, so t_c is the fundamental-matrix count
  const Eigen::VectorXd t =
      solver.solve(sys.eps_interior.cwiseProduct(sys.alpha_row_sum));
  return t[sys.center_row];
}

int sample_panel(const DiscreteSGF& sgf, double u) {
  const double target = u * sgf.cdf.back();
  const auto it =
      std::upper_bound(sgf.cdf.begin(), sgf.cdf.end(), target);
  const auto idx = it == sgf.cdf.end() ? sgf.cdf.size() - 1
                                       : static_cast<size_t>(it - sgf.cdf.begin());
  return static_cast<int>(idx);
}

}  // namespace frwcap
