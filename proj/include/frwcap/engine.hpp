#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "frwcap/geometry.hpp"
#include "frwcap/microwalk.hpp"
#include "frwcap/rng.hpp"
#include "frwcap/sgf.hpp"
#include "frwcap/sgf_cache.hpp"

namespace frwcap {

// How transitions over general (non-stratified) cubes are performed.
// Stratified and uniform cubes always go through the SGF cache; FDM solves
// the cube system on the spot, MW walks the lattice, MWE walks an expanded
// lattice that may swallow conductors. The HYBRID names are the dispatch
// spelled out; MW and MWE alone behave identically to their HYBRID forms.
enum class Mode { FDM, MW, MWE, HybridMW, HybridMWE };

Mode parse_mode(const std::string& name);
std::string mode_name(Mode mode);

struct Config {
  int grid_n = 24;
  double expansion = 5.0;
  Mode mode = Mode::HybridMWE;
  double rel_std_tol = 0.01;
  long min_walks = 4096;
  long max_walks = 4000000;
  int batch = 1024;
  uint64_t seed = 1;
  double snap_tol = 1e-4;  // relative to the Gaussian shell half-width
  long hop_cap = 10000;
  double gaussian_gap_fraction = 0.5;
  double world_margin = 5.0;

  void validate() const;  // throws std::invalid_argument
};

// Closed box shell around the master conductor, strictly between it and
// every other conductor and the world wall.
struct GaussianSurface {
  Box box;
  double area_m2 = 0;
  std::array<double, 6> face_cdf{};  // cumulative area fractions, dir order
};
GaussianSurface gaussian_surface(const Structure& s, double gap_fraction);

struct GaussianSample {
  Vec3 point;
  int axis = 0;   // outward normal axis of the sampled face
  int sign = 1;   // outward normal sign
};
GaussianSample sample_gaussian(const GaussianSurface& g, SplitMix64& rng);

struct WalkEvent {
  enum class Kind { Continue, Terminate, TerminateGround };
  Kind kind = Kind::TerminateGround;
  Vec3 point;            // Continue: next point on the transition cube surface
  int conductor_id = -1;  // Terminate
};

// Branch tallies. The first-transition ladder and the subsequent-transition
// dispatch each account for every transition exactly once.
struct DispatchStats {
  uint64_t first_stratified = 0;
  uint64_t first_shrunk = 0;
  uint64_t first_layered = 0;
  uint64_t first_homogenized = 0;
  uint64_t cached = 0;
  uint64_t microwalk = 0;
  uint64_t microwalk_e = 0;
  uint64_t fdm = 0;

  uint64_t first_total() const {
    return first_stratified + first_shrunk + first_layered + first_homogenized;
  }
  uint64_t subsequent_total() const {
    return cached + microwalk + microwalk_e + fdm;
  }
  DispatchStats& operator+=(const DispatchStats& o);
};

struct TerminalEstimate {
  int conductor_id = -1;  // -1 is the virtual ground (world wall)
  double value = 0;       // Maxwell capacitance entry, farads
  double std_err = 0;     // farads
  uint64_t walks_landed = 0;
};

struct CapacitanceResult {
  int master_id = 0;
  std::vector<TerminalEstimate> terminals;  // declaration order, ground last
  uint64_t walks = 0;
  bool converged = false;
  uint64_t aborted = 0;    // hop-cap or resample-cap walks, folded into ground
  uint64_t resampled = 0;  // degenerate Gaussian points that were redrawn
  DispatchStats dispatch;
  uint64_t cache_hits = 0;
  uint64_t cache_misses = 0;
  double t_mw_seconds = 0;
  double t_total_seconds = 0;

  const TerminalEstimate* find_terminal(int conductor_id) const;
  const TerminalEstimate& self() const;  // the master entry
};

struct FirstTransition {
  Vec3 point;
  double weight = 0;  // farads
  int branch = 0;     // ladder branch taken, mirrors DispatchStats order
};

// One extraction run: owns the Gaussian surface, termination tolerances and
// terminal bookkeeping. Geometry, config and the SGF cache are shared
// read-only/concurrently; per-walk state lives in the caller's rng+scratch.
class Engine {
 public:
  // cache may be shared across engines/runs; null means engine-private
  Engine(const Structure& s, const Config& cfg,
         StratifiedSgfCache* cache = nullptr);

  const GaussianSurface& surface() const { return surface_; }
  double snap_distance() const { return snap_; }
  StratifiedSgfCache& cache() { return *cache_; }

  // Weighted first transition by the stratification ladder: direct profile,
  // largest stratified concentric shrink (>= 0.3x), slice-homogenized along
  // the most varying axis, whole-cube homogenized. Returns nullopt when the
  // free cube is degenerate (caller redraws the Gaussian point).
  std::optional<FirstTransition> first_transition(const GaussianSample& g,
                                                  SplitMix64& rng,
                                                  DispatchStats& stats) const;

  // One subsequent transition: snap-terminate on conductors or the world
  // wall, serve stratified cubes from the cache, dispatch general cubes per
  // the mode. t_mw, when given, accumulates lattice-walk seconds.
  WalkEvent transition(const Vec3& point, SplitMix64& rng,
                       MicroWalkScratch& scratch, DispatchStats& stats,
                       double* t_mw = nullptr) const;

  // Full extraction. threads <= 0 reads FRWCAP_THREADS (default 1).
  // Single-thread runs with a fixed seed are bit-reproducible; multi-thread
  // runs of the same seed produce byte-identical estimates as well because
  // per-walk contributions are merged in walk order.
  CapacitanceResult extract(int threads = 0);

 private:
  struct WalkOut {
    int slot = 0;
    double weight = 0;
    uint8_t aborted = 0;
  };

  WalkOut run_walk(uint64_t walk_index, MicroWalkScratch& scratch,
                   DispatchStats& stats, double& t_mw,
                   uint64_t& resampled) const;
  int slot_of(int conductor_id) const;

  const Structure& s_;
  Config cfg_;
  std::unique_ptr<StratifiedSgfCache> owned_cache_;
  StratifiedSgfCache* cache_;
  GaussianSurface surface_;
  double snap_ = 0;
  int master_slot_ = 0;
  int ground_slot_ = 0;
};

CapacitanceResult extract(const Structure& s, const Config& cfg,
                          int threads = 0,
                          StratifiedSgfCache* cache = nullptr);

}  // namespace frwcap
