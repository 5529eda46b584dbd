#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "frwcap/geometry.hpp"
#include "frwcap/rng.hpp"
#include "frwcap/sgf.hpp"

namespace frwcap {

// Outcome of one lattice transit. Surface exits continue the macro walk at
// the panel center; conductor exits (expanded cubes only) terminate it.
// voxel/dir identify the face the walk was absorbed through, letting tests
// map conductor exits onto the panel indices of the assembled system.
struct Exit {
  enum class Kind : uint8_t { Surface, Conductor };
  Kind kind = Kind::Surface;
  int panel = -1;          // surface exits: shared panel index
  int conductor_id = -1;   // conductor exits
  Vec3 point;
  Vec3i voxel;             // interior voxel the walk exited from
  int dir = -1;
  int steps = 0;
};

// Thrown by expanded transits when the start voxel is inside a conductor at
// lattice resolution; the caller falls back to a non-expanded transit.
class EngulfedStart : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Places the walk lattice so the walk point sits exactly on start_node(n).
// Odd n: the cube is centered on the point. Even n: the cube is shifted by
// half a pitch and shrunk to n/(n+1) of the half-width, which keeps it
// inside the original conductor-free region (touching its +faces).
inline Cube transit_cube(const Vec3& p, double half_width, int n) {
  if (n % 2 == 1) return {p, half_width};
  const double delta = half_width / (n + 1);
  const double h = (half_width - delta) * (1.0 - 1e-12);
  return {{p.x + delta, p.y + delta, p.z + delta}, h};
}

// Per-thread reusable state: per-node alpha records and the lazily fetched
// voxel field, both invalidated by epoch stamps at the start of a transit.
// memoize=false recomputes alphas on every visit; the values are identical
// bit for bit, so trajectories do not change (verified by tests).
class MicroWalkScratch {
 public:
  void prepare(int n);

  struct NodeRec {
    std::array<double, 6> alpha;
    double sum;
    uint64_t stamp;
  };

  int n = 0;
  bool memoize = true;
  uint64_t epoch = 0;
  std::vector<NodeRec> recs;
  std::vector<double> eps;
  std::vector<int32_t> cond;
  std::vector<uint64_t> voxel_stamp;
};

// beta_i = alpha_i / sum(alpha) at an interior node of a materialized grid
std::array<double, 6> neighbor_weights(const DielectricGrid& grid,
                                       const Vec3i& node);

// One absorbing-chain transit over a materialized grid, starting at
// start_node(n). The exit panel distribution equals solve_sgf probs. A zero
// step_cap means the default 1000*n^2; exceeding it throws (it indicates a
// lattice construction bug, not a statistical fluke).
Exit microwalk_transit(const DielectricGrid& grid, SplitMix64& rng,
                       MicroWalkScratch& scratch, int step_cap = 0);
Exit microwalk_transit(const DielectricGrid& grid, SplitMix64& rng);

// Expanded-cube transit: the cube grows to min(expansion*base_half_width,
// world wall distance), conductors inside become absorbing at voxel
// staircase resolution, and the dielectric field is fetched lazily (only
// voxels the walk touches are classified). Surface exits continue the walk;
// conductor exits terminate it. Throws EngulfedStart when the start voxel
// is conductor at lattice resolution.
Exit microwalk_e_transit(const Structure& s, const Vec3& center,
                         double base_half_width, double expansion, int n,
                         SplitMix64& rng, MicroWalkScratch& scratch,
                         int step_cap = 0);
Exit microwalk_e_transit(const Structure& s, const Vec3& center,
                         double base_half_width, double expansion, int n,
                         SplitMix64& rng);

// Lazy transit over a conductor-free cube (the plain MicroWalk hot path used
// by the walk engine; distributionally identical to microwalk_transit on the
// materialized grid of the same cube).
Exit microwalk_transit_lazy(const Structure& s, const Cube& cube, int n,
                            SplitMix64& rng, MicroWalkScratch& scratch,
                            int step_cap = 0);

}  // namespace frwcap
