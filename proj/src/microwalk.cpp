#include "frwcap/microwalk.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace frwcap {

void MicroWalkScratch::prepare(int n_in) {
  if (n != n_in) {
    n = n_in;
    const size_t total =
        static_cast<size_t>(n_in) * static_cast<size_t>(n_in) * n_in;
    recs.assign(total, NodeRec{});
    eps.assign(total, 0.0);
    cond.assign(total, -1);
    voxel_stamp.assign(total, 0);
    epoch = 0;
  }
  ++epoch;
}

namespace {

Vec3 lattice_voxel_center(const Cube& cube, int n, const Vec3i& v) {
  const double h = cube.half_width, p = 2.0 * h / n;
  return {cube.center.x - h + (v.x + 0.5) * p,
          cube.center.y - h + (v.y + 0.5) * p,
          cube.center.z - h + (v.z + 0.5) * p};
}

// Field backed by a materialized grid.
struct GridField {
  const DielectricGrid& g;

  double free_eps(int idx, const Vec3i&) const { return g.eps[idx]; }
  int32_t conductor_id(int idx, const Vec3i&) const {
    return g.has_mask() ? g.conductor_mask[idx] : -1;
  }
};

// Field that classifies voxels against the structure on first touch and
// caches the result in the scratch arrays for the rest of the transit.
struct LazyField {
  const Structure& s;
  const Cube& cube;
  int n;
  MicroWalkScratch& scr;
  bool conductors;

  void classify(int idx, const Vec3i& v) const {
    if (scr.voxel_stamp[idx] == scr.epoch) return;
    const Vec3 c = lattice_voxel_center(cube, n, v);
    int32_t id = -1;
    if (conductors) {
      if (auto hit = s.conductor_at(c, 0.0)) id = *hit;
    }
    scr.cond[idx] = id;
    scr.eps[idx] = id >= 0 ? 1.0 : s.permittivity_at(c);
    scr.voxel_stamp[idx] = scr.epoch;
  }

  double free_eps(int idx, const Vec3i& v) const {
    classify(idx, v);
    return scr.eps[idx];
  }
  int32_t conductor_id(int idx, const Vec3i& v) const {
    classify(idx, v);
    return scr.cond[idx];
  }
};

// The absorbing-chain simulation shared by all transit flavors. One uniform
// draw per step; direction chosen by a cumulative scan over the six alphas
// in direction order, defaulting to the last direction so FP rounding at the
// top of the scan cannot fall off the end.
template <class Field>
Exit walk_lattice(const Cube& cube, int n, const Field& field,
                  SplitMix64& rng, MicroWalkScratch& scr, int step_cap) {
  scr.prepare(n);
  if (step_cap <= 0) step_cap = 1000 * n * n;

  Vec3i node = start_node(n);
  int idx = (node.z * n + node.y) * n + node.x;
  if (field.conductor_id(idx, node) >= 0)
    throw EngulfedStart("transit start voxel lies inside a conductor");

  for (int step = 1; step <= step_cap; ++step) {
    MicroWalkScratch::NodeRec& rec = scr.recs[idx];
    if (!scr.memoize || rec.stamp != scr.epoch) {
      const double ev = field.free_eps(idx, node);
      double sum = 0;
      for (int d = 0; d < 6; ++d) {
        Vec3i nb = node;
        const int a = kDirAxis[d];
        nb[a] += kDirSign[d];
        double alpha = 1.0;  // cube-surface and conductor faces absorb
        if (nb[a] >= 0 && nb[a] < n) {
          const int nidx = (nb.z * n + nb.y) * n + nb.x;
          if (field.conductor_id(nidx, nb) < 0) {
            const double en = field.free_eps(nidx, nb);
            alpha = en / (en + ev);
          }
        }
        rec.alpha[d] = alpha;
        sum += alpha;
      }
      rec.sum = sum;
      rec.stamp = scr.epoch;
    }

    const double target = rng.uniform() * rec.sum;
    double acc = 0;
    int dir = 5;
    for (int d = 0; d < 5; ++d) {
      acc += rec.alpha[d];
      if (target < acc) {
        dir = d;
        break;
      }
    }

    Vec3i nb = node;
    const int a = kDirAxis[dir];
    nb[a] += kDirSign[dir];
    if (nb[a] < 0 || nb[a] >= n) {
      Exit e;
      e.kind = Exit::Kind::Surface;
      e.panel = surface_panel_of(n, node, dir);
      e.point = surface_panel_center(cube, n, e.panel);
      e.voxel = node;
      e.dir = dir;
      e.steps = step;
      return e;
    }
    const int nidx = (nb.z * n + nb.y) * n + nb.x;
    const int32_t cid = field.conductor_id(nidx, nb);
    if (cid >= 0) {
      Exit e;
      e.kind = Exit::Kind::Conductor;
      e.conductor_id = cid;
      Vec3 p = lattice_voxel_center(cube, n, node);
      p[a] += kDirSign[dir] * cube.half_width / n;
      e.point = p;
      e.voxel = node;
      e.dir = dir;
      e.steps = step;
      return e;
    }
    node = nb;
    idx = nidx;
  }
  throw std::runtime_error("microwalk transit exceeded " +
                           std::to_string(step_cap) + " steps at n=" +
                           std::to_string(n) + "; the lattice is malformed");
}

}  // namespace

std::array<double, 6> neighbor_weights(const DielectricGrid& grid,
                                       const Vec3i& node) {
  const int n = grid.n;
  for (int a = 0; a < 3; ++a)
    if (node[a] < 0 || node[a] >= n)
      throw std::invalid_argument("neighbor_weights: node outside lattice");
  if (grid.conductor(node.x, node.y, node.z) >= 0)
    throw std::invalid_argument("neighbor_weights: node is a conductor voxel");

  const double ev = grid.eps_at(node.x, node.y, node.z);
  std::array<double, 6> beta;
  double sum = 0;
  for (int d = 0; d < 6; ++d) {
    Vec3i nb = node;
    const int a = kDirAxis[d];
    nb[a] += kDirSign[d];
    double alpha = 1.0;
    if (nb[a] >= 0 && nb[a] < n && grid.conductor(nb.x, nb.y, nb.z) < 0) {
      const double en = grid.eps_at(nb.x, nb.y, nb.z);
      alpha = en / (en + ev);
    }
    beta[d] = alpha;
    sum += alpha;
  }
  for (double& b : beta) b /= sum;
  return beta;
}

Exit microwalk_transit(const DielectricGrid& grid, SplitMix64& rng,
                       MicroWalkScratch& scratch, int step_cap) {
  GridField field{grid};
  return walk_lattice(grid.cube, grid.n, field, rng, scratch, step_cap);
}

Exit microwalk_transit(const DielectricGrid& grid, SplitMix64& rng) {
  MicroWalkScratch scratch;
  return microwalk_transit(grid, rng, scratch, 0);
}

Exit microwalk_transit_lazy(const Structure& s, const Cube& cube, int n,
                            SplitMix64& rng, MicroWalkScratch& scratch,
                            int step_cap) {
  LazyField field{s, cube, n, scratch, /*conductors=*/false};
  return walk_lattice(cube, n, field, rng, scratch, step_cap);
}

Exit microwalk_e_transit(const Structure& s, const Vec3& center,
                         double base_half_width, double expansion, int n,
                         SplitMix64& rng, MicroWalkScratch& scratch,
                         int step_cap) {
  if (expansion < 1.0)
    throw std::invalid_argument("microwalk_e_transit: expansion must be >= 1");
  const double wall = s.world.chebyshev_to_wall(center);
  const double half = std::min(expansion * base_half_width, wall);
  if (!(half > 0))
    throw std::invalid_argument(
        "microwalk_e_transit: center is on or outside the world wall");
  const Cube cube = transit_cube(center, half, n);
  LazyField field{s, cube, n, scratch, /*conductors=*/true};
  return walk_lattice(cube, n, field, rng, scratch, step_cap);
}

Exit microwalk_e_transit(const Structure& s, const Vec3& center,
                         double base_half_width, double expansion, int n,
                         SplitMix64& rng) {
  MicroWalkScratch scratch;
  return microwalk_e_transit(s, center, base_half_width, expansion, n, rng,
                             scratch, 0);
}

}  // namespace frwcap
