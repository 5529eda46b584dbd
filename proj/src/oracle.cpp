#include "frwcap/oracle.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "frwcap/constants.hpp"
#include "frwcap/sgf.hpp"

namespace frwcap {

std::vector<double> exact_absorption_row(const DielectricGrid& grid,
                                         int cap) {
  const int n = grid.n;
  if (n > cap)
    throw std::invalid_argument("exact_absorption_row: n exceeds cost cap");

  // interior enumeration, deliberately re-derived rather than reusing the
  // sparse assembly
  const int nvox = n * n * n;
  std::vector<int> row(nvox, -1);
  std::vector<int> node;
  for (int idx = 0; idx < nvox; ++idx) {
    if (!grid.has_mask() || grid.conductor_mask[idx] < 0) {
      row[idx] = static_cast<int>(node.size());
      node.push_back(idx);
    }
  }
  const int rows = static_cast<int>(node.size());
  if (rows == 0) throw std::invalid_argument("grid has no interior nodes");

  // conductor panels in (node, direction) order, after the 6n^2 surface ones
  int panels = 6 * n * n;
  std::vector<int> cond_panel(static_cast<size_t>(nvox) * 6, -1);
  for (int r = 0; r < rows; ++r) {
    const int idx = node[r];
    const int i = idx % n, j = (idx / n) % n, k = idx / (n * n);
    for (int dir = 0; dir < 6; ++dir) {
      const Vec3i d = dir_step(dir);
      const int ni = i + d.x, nj = j + d.y, nk = k + d.z;
      if (ni < 0 || ni >= n || nj < 0 || nj >= n || nk < 0 || nk >= n)
        continue;
      if (row[grid.index(ni, nj, nk)] < 0)
        cond_panel[static_cast<size_t>(idx) * 6 + dir] = panels++;
    }
  }

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, rows);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(rows, panels);
  for (int r = 0; r < rows; ++r) {
    const int idx = node[r];
    const int i = idx % n, j = (idx / n) % n, k = idx / (n * n);
    const double eps_v = grid.eps[idx];
    double diag = 0;
    for (int dir = 0; dir < 6; ++dir) {
      const Vec3i d = dir_step(dir);
      const int ni = i + d.x, nj = j + d.y, nk = k + d.z;
      if (ni < 0 || ni >= n || nj < 0 || nj >= n || nk < 0 || nk >= n) {
        B(r, surface_panel_of(n, {i, j, k}, dir)) += 1.0;
        diag += 1.0;
        continue;
      }
      const int nidx = grid.index(ni, nj, nk);
      if (row[nidx] < 0) {
        B(r, cond_panel[static_cast<size_t>(idx) * 6 + dir]) += 1.0;
        diag += 1.0;
        continue;
      }
      const double a = grid.eps[nidx] / (grid.eps[nidx] + eps_v);
      A(r, row[nidx]) -= a;
      diag += a;
    }
    A(r, r) = diag;
  }

  const Vec3i c = start_node(n);
  const int crow = row[grid.index(c.x, c.y, c.z)];
  if (crow < 0) throw std::invalid_argument("start node is masked");

  Eigen::VectorXd e = Eigen::VectorXd::Zero(rows);
  e[crow] = 1.0;
  const Eigen::VectorXd y = A.transpose().partialPivLu().solve(e);
  const Eigen::VectorXd p = B.transpose() * y;
  return {p.data(), p.data() + p.size()};
}

// ---------------------------------------------------------------------------

ReferenceSolution reference_capacitance(const Structure& s, int resolution) {
  if (resolution < 16)
    throw std::invalid_argument("reference_capacitance: resolution < 16");
  const long nvox = static_cast<long>(resolution) * resolution * resolution;
  if (nvox > 3'500'000)
    throw std::invalid_argument(
        "reference_capacitance: resolution too large, lower it");

  const int R = resolution;
  const Vec3 lo = s.world.lo;
  const Vec3 ext = s.world.hi - s.world.lo;
  const double h[3] = {ext.x / R, ext.y / R, ext.z / R};
  // face coefficient prefactors: area / spacing, per face normal axis
  const double fpre[3] = {h[1] * h[2] / h[0], h[0] * h[2] / h[1],
                          h[0] * h[1] / h[2]};

  auto vindex = [R](int i, int j, int k) { return (k * R + j) * R + i; };

  ReferenceSolution ref;
  ref.resolution = R;
  for (const auto& c : s.conductors) ref.terminal_ids.push_back(c.id);
  const int terms = static_cast<int>(ref.terminal_ids.size());

  std::vector<double> veps(nvox);
  std::vector<int32_t> vterm(nvox, -1);
  std::vector<int32_t> vrow(nvox, -1);
  long rows = 0;
  for (int k = 0; k < R; ++k)
    for (int j = 0; j < R; ++j)
      for (int i = 0; i < R; ++i) {
        const Vec3 p{lo.x + (i + 0.5) * h[0], lo.y + (j + 0.5) * h[1],
                     lo.z + (k + 0.5) * h[2]};
        const long idx = vindex(i, j, k);
        veps[idx] = s.permittivity_at(p);
        if (const auto id = s.conductor_at(p, 0.0)) {
          for (int t = 0; t < terms; ++t)
            if (ref.terminal_ids[t] == *id) vterm[idx] = t;
        } else {
          vrow[idx] = static_cast<int32_t>(rows++);
        }
      }
  if (rows == 0)
    throw std::invalid_argument("reference_capacitance: no free voxels");

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(rows) * 7);
  // Dirichlet couplings used twice: excitation rhs and charge integration
  struct TermFace {
    int32_t row;
    int32_t term;
    double coeff;
  };
  std::vector<TermFace> term_faces;

  for (int k = 0; k < R; ++k)
    for (int j = 0; j < R; ++j)
      for (int i = 0; i < R; ++i) {
        const long idx = vindex(i, j, k);
        const int32_t r = vrow[idx];
        if (r < 0) continue;
        const double ev = veps[idx];
        double diag = 0;
        for (int dir = 0; dir < 6; ++dir) {
          const int axis = kDirAxis[dir];
          int nc[3] = {i, j, k};
          nc[axis] += kDirSign[dir];
          if (nc[axis] < 0 || nc[axis] >= R) {
            // grounded world wall on the voxel face, half spacing
            diag += 2.0 * fpre[axis] * ev;
            continue;
          }
          const long nidx = vindex(nc[0], nc[1], nc[2]);
          if (vterm[nidx] >= 0) {
            // conductor surface on the shared face, half spacing
            const double g = 2.0 * fpre[axis] * ev;
            diag += g;
            term_faces.push_back({r, vterm[nidx], g});
            continue;
          }
          const double en = veps[nidx];
          const double g = fpre[axis] * 2.0 * ev * en / (ev + en);
          diag += g;
          trip.emplace_back(r, vrow[nidx], -g);
        }
        trip.emplace_back(r, r, diag);
      }

  Eigen::SparseMatrix<double> A(rows, rows);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  trip.clear();
  trip.shrink_to_fit();

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                           Eigen::Lower | Eigen::Upper>
      cg;
  cg.setTolerance(1e-9);
  cg.setMaxIterations(200l * R);
  cg.compute(A);

  ref.capacitance.resize(terms, terms);
  for (int t = 0; t < terms; ++t) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
    for (const auto& f : term_faces)
      if (f.term == t) rhs[f.row] += f.coeff;
    const Eigen::VectorXd phi = cg.solve(rhs);
    if (cg.info() != Eigen::Success)
      throw std::runtime_error(
          "reference_capacitance: solver failed to converge, lower the "
          "resolution");
    ref.residual = std::max(ref.residual, cg.error());

    // Q_i = sum over faces (conductor i | free v) of g * (V_i - phi_v)
    Eigen::VectorXd q = Eigen::VectorXd::Zero(terms);
    for (const auto& f : term_faces) {
      const double v_term = f.term == t ? 1.0 : 0.0;
      q[f.term] += f.coeff * (v_term - phi[f.row]);
    }
    ref.capacitance.col(t) = q * (kEps0 * kMetersPerNm);
  }
  return ref;
}

// ---------------------------------------------------------------------------

namespace {

// chi-square quantile via the Wilson-Hilferty cube approximation
double chi2_critical(int dof, double z) {
  const double d = static_cast<double>(dof);
  const double t = 1.0 - 2.0 / (9.0 * d) + z * std::sqrt(2.0 / (9.0 * d));
  return d * t * t * t;
}

}  // namespace

DistributionReport compare_distribution(
    const std::vector<double>& exact,
    const std::function<int(SplitMix64&)>& sampler, long n_samples,
    SplitMix64& rng) {
  if (n_samples < 10'000)
    throw std::invalid_argument("compare_distribution: too few samples");

  DistributionReport rep;
  rep.exact = exact;
  rep.samples = n_samples;

  std::vector<long> counts(exact.size(), 0);
  for (long i = 0; i < n_samples; ++i) {
    const int b = sampler(rng);
    counts.at(static_cast<size_t>(b))++;
  }
  rep.empirical.resize(exact.size());
  double tv = 0;
  for (size_t b = 0; b < exact.size(); ++b) {
    rep.empirical[b] = static_cast<double>(counts[b]) / n_samples;
    tv += std::abs(rep.empirical[b] - exact[b]);
  }
  rep.tv_distance = tv / 2;

  // pool consecutive bins until each group expects >= 5 counts; an
  // undersized tail is merged into the preceding group
  std::vector<std::array<double, 2>> groups;  // (observed, expected)
  double exp_acc = 0, obs_acc = 0;
  for (size_t b = 0; b < exact.size(); ++b) {
    exp_acc += exact[b] * n_samples;
    obs_acc += static_cast<double>(counts[b]);
    if (exp_acc >= 5.0) {
      groups.push_back({obs_acc, exp_acc});
      exp_acc = obs_acc = 0;
    }
  }
  if (exp_acc > 0 || obs_acc > 0) {
    if (!groups.empty()) {
      groups.back()[0] += obs_acc;
      groups.back()[1] += exp_acc;
    } else {
      groups.push_back({obs_acc, std::max(exp_acc, 1e-12)});
    }
  }
  double chi2 = 0;
  for (const auto& [obs, exp] : groups)
    chi2 += (obs - exp) * (obs - exp) / exp;
  rep.pooled_bins = static_cast<int>(groups.size());
  rep.gof_statistic = chi2;
  rep.gof_critical = chi2_critical(std::max(rep.pooled_bins - 1, 1),
                                   3.090232306167813);
  return rep;
}

double analytic_plate_capacitance(
    const std::vector<std::pair<double, double>>& layers, double area_m2) {
  if (layers.empty())
    throw std::invalid_argument("analytic_plate_capacitance: no layers");
  double sum = 0;  // sum of d_k / eps_k in meters
  for (const auto& [d_nm, eps] : layers) {
    if (!(d_nm > 0) || !(eps > 0))
      throw std::invalid_argument(
          "analytic_plate_capacitance: nonpositive layer");
    sum += d_nm * kMetersPerNm / eps;
  }
  return kEps0 * area_m2 / sum;
}

// ---------------------------------------------------------------------------

namespace {

double exp_eps(SplitMix64& rng) {
  // rate 0.1 (mean 10); guarded away from zero
  return std::max(-10.0 * std::log1p(-rng.uniform()), 1e-9);
}

DielectricGrid blank_grid(int n) {
  DielectricGrid g;
  g.n = n;
  g.cube = {{0, 0, 0}, n / 2.0};
  g.eps.assign(static_cast<size_t>(n) * n * n, 1.0);
  return g;
}

}  // namespace

DielectricGrid random_voxel_grid(int n, SplitMix64& rng) {
  DielectricGrid g = blank_grid(n);
  for (auto& e : g.eps) e = exp_eps(rng);
  classify_grid(g);
  return g;
}

DielectricGrid random_block_grid(int n, int blocks, SplitMix64& rng) {
  DielectricGrid g = blank_grid(n);
  for (int b = 0; b < blocks; ++b) {
    int lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
      const int x = static_cast<int>(rng.uniform() * n);
      const int y = static_cast<int>(rng.uniform() * n);
      lo[a] = std::min(std::min(x, y), n - 1);
      hi[a] = std::min(std::max(x, y), n - 1);
    }
    const double eps = exp_eps(rng);
    for (int k = lo[2]; k <= hi[2]; ++k)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int i = lo[0]; i <= hi[0]; ++i) g.eps[g.index(i, j, k)] = eps;
  }
  classify_grid(g);
  return g;
}

}  // namespace frwcap
