#pragma once

#include <Eigen/Dense>

#include <functional>
#include <utility>
#include <vector>

#include "frwcap/geometry.hpp"
#include "frwcap/rng.hpp"

namespace frwcap {

// Center-node row of the absorption matrix a_ii^-1 a_ib, computed with a
// dense LU solve assembled by an independent code path. Panel indexing
// follows the shared convention in sgf.hpp. Intended as the ground truth for
// the sparse solver and for MicroWalk exit distributions.
std::vector<double> exact_absorption_row(const DielectricGrid& grid,
                                         int cap = 12);

// Full-domain finite-volume capacitance reference: the world box is
// voxelized resolution^3, conductor voxels are pinned to terminal potentials
// (Dirichlet on the staircase surface at half spacing, like the world wall),
// one solve per terminal, charges integrated over the tight conductor shell.
struct ReferenceSolution {
  int resolution = 0;
  std::vector<int> terminal_ids;   // structure declaration order
  Eigen::MatrixXd capacitance;     // farads; column t = excitation of t
  double residual = 0;             // worst solver residual
};
ReferenceSolution reference_capacitance(const Structure& s, int resolution);

// Empirical-vs-exact comparison: total variation distance plus a chi-square
// statistic over bins pooled to expected count >= 5, with the 1e-3
// significance critical value for the pooled degrees of freedom.
struct DistributionReport {
  std::vector<double> exact;
  std::vector<double> empirical;
  double tv_distance = 0;
  double gof_statistic = 0;
  double gof_critical = 0;
  int pooled_bins = 0;
  long samples = 0;
  bool gof_pass() const { return gof_statistic <= gof_critical; }
};
DistributionReport compare_distribution(
    const std::vector<double>& exact,
    const std::function<int(SplitMix64&)>& sampler, long n_samples,
    SplitMix64& rng);

// Series-stack parallel-plate value: C = eps0 * area / sum(d_k / eps_k).
// Layers are (thickness in nm, relative permittivity); area in m^2.
double analytic_plate_capacitance(
    const std::vector<std::pair<double, double>>& layers, double area_m2);

// Test-fixture generators. Permittivities are drawn from an exponential
// distribution with rate 0.1 (mean 10). Grids sit on a unit-pitch cube
// centered at the origin.
DielectricGrid random_voxel_grid(int n, SplitMix64& rng);
DielectricGrid random_block_grid(int n, int blocks, SplitMix64& rng);

}  // namespace frwcap
