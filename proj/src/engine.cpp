#include "frwcap/engine.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>
#include <utility>

#include "frwcap/constants.hpp"

namespace frwcap {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Chebyshev distance between two disjoint boxes: the largest per-axis gap.
double box_gap(const Box& a, const Box& b) {
  double gap = 0;
  for (int ax = 0; ax < 3; ++ax) {
    const double g =
        std::max(a.lo[ax] - b.hi[ax], b.lo[ax] - a.hi[ax]);
    gap = std::max(gap, g);
  }
  return std::max(gap, 0.0);
}

int env_threads() {
  const char* v = std::getenv("FRWCAP_THREADS");
  if (!v || !*v) return 1;
  const long n = std::strtol(v, nullptr, 10);
  return static_cast<int>(std::clamp(n, 1L, 256L));
}

}  // namespace

Mode parse_mode(const std::string& name) {
  std::string u(name);
  std::transform(u.begin(), u.end(), u.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  if (u == "FDM") return Mode::FDM;
  if (u == "MW") return Mode::MW;
  if (u == "MWE") return Mode::MWE;
  if (u == "HYBRID-MW") return Mode::HybridMW;
  if (u == "HYBRID-MWE") return Mode::HybridMWE;
  throw std::invalid_argument("unknown mode: " + name);
}

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::FDM: return "FDM";
    case Mode::MW: return "MW";
    case Mode::MWE: return "MWE";
    case Mode::HybridMW: return "HYBRID-MW";
    case Mode::HybridMWE: return "HYBRID-MWE";
  }
  return "?";
}

void Config::validate() const {
  if (grid_n < 2) throw std::invalid_argument("grid_n must be >= 2");
  if (!(expansion >= 1.0))
    throw std::invalid_argument("expansion must be >= 1");
  if (!(rel_std_tol > 0.0 && rel_std_tol < 1.0))
    throw std::invalid_argument("rel_std_tol must lie in (0,1)");
  if (min_walks < 1 || max_walks < min_walks)
    throw std::invalid_argument("need 1 <= min_walks <= max_walks");
  if (batch < 1) throw std::invalid_argument("batch must be >= 1");
  if (!(snap_tol > 0.0)) throw std::invalid_argument("snap_tol must be > 0");
  if (hop_cap < 1) throw std::invalid_argument("hop_cap must be >= 1");
  if (!(gaussian_gap_fraction > 0.0 && gaussian_gap_fraction < 1.0))
    throw std::invalid_argument("gaussian_gap_fraction must lie in (0,1)");
}

GaussianSurface gaussian_surface(const Structure& s, double gap_fraction) {
  if (!(gap_fraction > 0.0 && gap_fraction < 1.0))
    throw ValidationError("gaussian gap fraction must lie in (0,1)");
  const Conductor* master = s.find_conductor(s.master_id);
  if (!master) throw ValidationError("master conductor not found");

  double gap = std::numeric_limits<double>::infinity();
  for (int ax = 0; ax < 3; ++ax) {
    gap = std::min(gap, master->box.lo[ax] - s.world.lo[ax]);
    gap = std::min(gap, s.world.hi[ax] - master->box.hi[ax]);
  }
  for (const Conductor& c : s.conductors) {
    if (c.id == s.master_id) continue;
    gap = std::min(gap, box_gap(master->box, c.box));
  }
  if (!(gap > 0.0))
    throw ValidationError("master touches another conductor or the wall");

  GaussianSurface g;
  const double inflate = gap_fraction * gap;
  for (int ax = 0; ax < 3; ++ax) {
    g.box.lo[ax] = master->box.lo[ax] - inflate;
    g.box.hi[ax] = master->box.hi[ax] + inflate;
  }

  const double ex = g.box.hi.x - g.box.lo.x;
  const double ey = g.box.hi.y - g.box.lo.y;
  const double ez = g.box.hi.z - g.box.lo.z;
  const std::array<double, 6> face_nm2 = {ey * ez, ey * ez, ex * ez,
                                          ex * ez, ex * ey, ex * ey};
  double total = 0;
  for (int f = 0; f < 6; ++f) total += face_nm2[f];
  double acc = 0;
  for (int f = 0; f < 6; ++f) {
    acc += face_nm2[f] / total;
    g.face_cdf[f] = acc;
  }
  g.face_cdf[5] = 1.0;
  g.area_m2 = total * kMetersPerNm * kMetersPerNm;
  return g;
}

GaussianSample sample_gaussian(const GaussianSurface& g, SplitMix64& rng) {
  const double u = rng.uniform();
  int face = 5;
  for (int f = 0; f < 5; ++f) {
    if (u < g.face_cdf[f]) {
      face = f;
      break;
    }
  }
  const int axis = kDirAxis[face];
  const int b1 = (axis == 0) ? 1 : 0;
  const int b2 = (axis == 2) ? 1 : 2;

  GaussianSample out;
  out.axis = axis;
  out.sign = kDirSign[face];
  out.point[axis] = (out.sign < 0) ? g.box.lo[axis] : g.box.hi[axis];
  out.point[b1] =
      g.box.lo[b1] + rng.uniform() * (g.box.hi[b1] - g.box.lo[b1]);
  out.point[b2] =
      g.box.lo[b2] + rng.uniform() * (g.box.hi[b2] - g.box.lo[b2]);
  return out;
}

DispatchStats& DispatchStats::operator+=(const DispatchStats& o) {
  first_stratified += o.first_stratified;
  first_shrunk += o.first_shrunk;
  first_layered += o.first_layered;
  first_homogenized += o.first_homogenized;
  cached += o.cached;
  microwalk += o.microwalk;
  microwalk_e += o.microwalk_e;
  fdm += o.fdm;
  return *this;
}

const TerminalEstimate* CapacitanceResult::find_terminal(
    int conductor_id) const {
  for (const TerminalEstimate& t : terminals)
    if (t.conductor_id == conductor_id) return &t;
  return nullptr;
}

const TerminalEstimate& CapacitanceResult::self() const {
  const TerminalEstimate* t = find_terminal(master_id);
  if (!t) throw std::logic_error("result has no master terminal");
  return *t;
}

Engine::Engine(const Structure& s, const Config& cfg, StratifiedSgfCache* cache)
    : s_(s), cfg_(cfg) {
  cfg_.validate();
  s_.validate();
  if (cache) {
    cache_ = cache;
  } else {
    owned_cache_ = std::make_unique<StratifiedSgfCache>();
    cache_ = owned_cache_.get();
  }
  surface_ = gaussian_surface(s_, cfg_.gaussian_gap_fraction);
  const Vec3 he = surface_.box.half_extent();
  snap_ = cfg_.snap_tol * std::max({he.x, he.y, he.z});

  master_slot_ = 0;
  for (size_t i = 0; i < s_.conductors.size(); ++i)
    if (s_.conductors[i].id == s_.master_id) master_slot_ = static_cast<int>(i);
  ground_slot_ = static_cast<int>(s_.conductors.size());
}

int Engine::slot_of(int conductor_id) const {
  for (size_t i = 0; i < s_.conductors.size(); ++i)
    if (s_.conductors[i].id == conductor_id) return static_cast<int>(i);
  return ground_slot_;
}

std::optional<FirstTransition> Engine::first_transition(
    const GaussianSample& g, SplitMix64& rng, DispatchStats& stats) const {
  if (s_.conductor_at(g.point, snap_)) return std::nullopt;
  const FreeCube free = s_.max_free_cube(g.point);
  if (!(free.half_width > snap_)) return std::nullopt;

  const int n = cfg_.grid_n;
  Cube cube = transit_cube(g.point, free.half_width, n);
  std::optional<ProfileKey> key;
  int branch = 0;

  if (auto prof = stratified_profile(s_, cube, n)) {
    key = profile_key(*prof, n);
    branch = 0;
  }
  if (!key) {
    // largest concentric shrink that turns the cube stratified, down to 0.3x
    for (int i = 19; i >= 6; --i) {
      const Cube c = transit_cube(g.point, 0.05 * i * free.half_width, n);
      if (auto prof = stratified_profile(s_, c, n)) {
        key = profile_key(*prof, n);
        cube = c;
        branch = 1;
        break;
      }
    }
  }
  if (!key) {
    // homogenize slices along the axis with the largest between-slice
    // variance; equal slice means degrade to the whole-cube average
    const DielectricGrid grid = build_grid(s_, cube, n);
    std::array<std::vector<double>, 3> slice;
    for (int ax = 0; ax < 3; ++ax) slice[ax].assign(n, 0.0);
    size_t idx = 0;
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i, ++idx) {
          const double e = grid.eps[idx];
          slice[0][i] += e;
          slice[1][j] += e;
          slice[2][k] += e;
        }
    int best_axis = 0;
    double best_var = -1.0;
    for (int ax = 0; ax < 3; ++ax) {
      double mean = 0;
      for (double& v : slice[ax]) {
        v /= double(n) * n;
        mean += v;
      }
      mean /= n;
      double var = 0;
      for (double v : slice[ax]) var += (v - mean) * (v - mean);
      if (var > best_var) {
        best_var = var;
        best_axis = ax;
      }
    }
    key = profile_key(n, best_axis, slice[best_axis]);
    branch = 2;
    bool uniform = true;
    for (double v : key->layers)
      if (v != key->layers[0]) uniform = false;
    if (uniform) branch = 3;
  }

  switch (branch) {
    case 0: ++stats.first_stratified; break;
    case 1: ++stats.first_shrunk; break;
    case 2: ++stats.first_layered; break;
    default: ++stats.first_homogenized; break;
  }

  const std::shared_ptr<const DiscreteSGF> sgf = cache_->get(*key);
  const int panel = sample_panel(*sgf, rng);
  const double pitch_nm = 2.0 * cube.half_width / n;
  // cached kernels live on the canonical unit-pitch lattice
  const double kern_per_m =
      sgf->grad_kernels[g.axis][panel] * (sgf->pitch / pitch_nm) / kMetersPerNm;
  const double eps_r = s_.permittivity_at(g.point);

  FirstTransition out;
  out.branch = branch;
  out.point = surface_panel_center(cube, n, panel);
  out.weight = -surface_.area_m2 * kEps0 * eps_r * g.sign * kern_per_m /
               sgf->probs[panel];
  return out;
}

WalkEvent Engine::transition(const Vec3& point, SplitMix64& rng,
                             MicroWalkScratch& scratch, DispatchStats& stats,
                             double* t_mw) const {
  if (auto id = s_.conductor_at(point, snap_))
    return {WalkEvent::Kind::Terminate, point, *id};
  if (s_.world.chebyshev_to_wall(point) <= snap_)
    return {WalkEvent::Kind::TerminateGround, point, -1};

  const FreeCube free = s_.max_free_cube(point);
  const int n = cfg_.grid_n;
  const Cube cube = transit_cube(point, free.half_width, n);

  if (auto prof = stratified_profile(s_, cube, n)) {
    ++stats.cached;
    const auto sgf = cache_->get(profile_key(*prof, n));
    const int panel = sample_panel(*sgf, rng);
    return {WalkEvent::Kind::Continue, surface_panel_center(cube, n, panel),
            -1};
  }

  switch (cfg_.mode) {
    case Mode::FDM: {
      ++stats.fdm;
      const DiscreteSGF sgf =
          solve_sgf(assemble_system(build_grid(s_, cube, n)), false);
      const int panel = sample_panel(sgf, rng);
      return {WalkEvent::Kind::Continue, surface_panel_center(cube, n, panel),
              -1};
    }
    case Mode::MW:
    case Mode::HybridMW: {
      ++stats.microwalk;
      const auto t0 = Clock::now();
      const Exit e = microwalk_transit_lazy(s_, cube, n, rng, scratch);
      if (t_mw) *t_mw += seconds_since(t0);
      return {WalkEvent::Kind::Continue, e.point, -1};
    }
    case Mode::MWE:
    case Mode::HybridMWE: {
      ++stats.microwalk_e;
      const auto t0 = Clock::now();
      WalkEvent ev;
      try {
        const Exit e = microwalk_e_transit(s_, point, free.half_width,
                                           cfg_.expansion, n, rng, scratch);
        if (e.kind == Exit::Kind::Conductor)
          ev = {WalkEvent::Kind::Terminate, e.point, e.conductor_id};
        else
          ev = {WalkEvent::Kind::Continue, e.point, -1};
      } catch (const EngulfedStart&) {
        // start voxel swallowed by the expanded lattice: the plain cube is
        // conductor-free by construction, so walk it instead
        const Exit e = microwalk_transit_lazy(s_, cube, n, rng, scratch);
        ev = {WalkEvent::Kind::Continue, e.point, -1};
      }
      if (t_mw) *t_mw += seconds_since(t0);
      return ev;
    }
  }
  throw std::logic_error("unreachable mode");
}

Engine::WalkOut Engine::run_walk(uint64_t walk_index,
                                 MicroWalkScratch& scratch,
                                 DispatchStats& stats, double& t_mw,
                                 uint64_t& resampled) const {
  SplitMix64 rng(cfg_.seed, walk_index);

  std::optional<FirstTransition> first;
  for (int attempt = 0; attempt < 100 && !first; ++attempt) {
    const GaussianSample g = sample_gaussian(surface_, rng);
    first = first_transition(g, rng, stats);
    if (!first) ++resampled;
  }
  if (!first) return {ground_slot_, 0.0, 1};

  Vec3 p = first->point;
  for (long hop = 0; hop < cfg_.hop_cap; ++hop) {
    const WalkEvent ev = transition(p, rng, scratch, stats, &t_mw);
    if (ev.kind == WalkEvent::Kind::Terminate)
      return {slot_of(ev.conductor_id), first->weight, 0};
    if (ev.kind == WalkEvent::Kind::TerminateGround)
      return {ground_slot_, first->weight, 0};
    p = ev.point;
  }
  return {ground_slot_, first->weight, 1};
}

CapacitanceResult Engine::extract(int threads) {
  const auto t_start = Clock::now();
  const int nt = threads > 0 ? threads : env_threads();
  const size_t nslots = s_.conductors.size() + 1;

  std::vector<double> sum(nslots, 0.0), sumsq(nslots, 0.0);
  std::vector<uint64_t> landed(nslots, 0);
  DispatchStats dispatch;
  double t_mw = 0;
  uint64_t walks = 0, aborted = 0, resampled = 0;
  bool converged = false;

  const auto estimate = [&](size_t slot) {
    const double w = static_cast<double>(walks);
    const double mean = sum[slot] / w;
    double se = 0;
    if (walks > 1) {
      const double var =
          std::max(0.0, (sumsq[slot] - sum[slot] * sum[slot] / w) / (w - 1));
      se = std::sqrt(var / w);
    }
    return std::pair<double, double>(mean, se);
  };

  const auto converged_now = [&]() {
    const auto [self, self_se] = estimate(master_slot_);
    if (!(self > 0)) return false;
    if (self_se > cfg_.rel_std_tol * self) return false;
    // largest-magnitude coupling, re-picked on the current estimates
    size_t big = nslots;
    double big_abs = 0;
    for (size_t k = 0; k < nslots; ++k) {
      if (static_cast<int>(k) == master_slot_) continue;
      const double a = std::fabs(sum[k] / static_cast<double>(walks));
      if (a > big_abs) {
        big_abs = a;
        big = k;
      }
    }
    if (big == nslots) return true;  // nothing coupled yet resolves trivially
    const auto [v, se] = estimate(big);
    return se <= cfg_.rel_std_tol * std::fabs(v);
  };

  std::vector<WalkOut> outs;
  std::vector<DispatchStats> ds(nt);
  std::vector<double> tm(nt, 0.0);
  std::vector<uint64_t> rs(nt, 0);

  while (walks < static_cast<uint64_t>(cfg_.max_walks)) {
    const uint64_t bsz = std::min<uint64_t>(
        cfg_.batch, static_cast<uint64_t>(cfg_.max_walks) - walks);
    outs.assign(bsz, WalkOut{});

    if (nt == 1) {
      MicroWalkScratch scratch;
      for (uint64_t i = 0; i < bsz; ++i)
        outs[i] = run_walk(walks + i, scratch, ds[0], tm[0], rs[0]);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errs(nt);
      pool.reserve(nt);
      const uint64_t chunk = bsz / nt, extra = bsz % nt;
      uint64_t lo = 0;
      for (int t = 0; t < nt; ++t) {
        const uint64_t hi = lo + chunk + (static_cast<uint64_t>(t) < extra);
        pool.emplace_back(
            [this, t, lo, hi, walks, &outs, &ds, &tm, &rs, &errs]() {
              try {
                MicroWalkScratch scratch;
                for (uint64_t i = lo; i < hi; ++i)
                  outs[i] = run_walk(walks + i, scratch, ds[t], tm[t], rs[t]);
              } catch (...) {
                errs[t] = std::current_exception();
              }
            });
        lo = hi;
      }
      for (std::thread& th : pool) th.join();
      for (const std::exception_ptr& e : errs)
        if (e) std::rethrow_exception(e);
    }

    // fold per-walk results in walk order so estimates do not depend on the
    // thread count
    for (const WalkOut& o : outs) {
      sum[o.slot] += o.weight;
      sumsq[o.slot] += o.weight * o.weight;
      ++landed[o.slot];
      aborted += o.aborted;
    }
    walks += bsz;

    if (walks >= static_cast<uint64_t>(cfg_.min_walks) && converged_now()) {
      converged = true;
      break;
    }
  }

  for (int t = 0; t < nt; ++t) {
    dispatch += ds[t];
    t_mw += tm[t];
    resampled += rs[t];
  }

  CapacitanceResult res;
  res.master_id = s_.master_id;
  res.walks = walks;
  res.converged = converged;
  res.aborted = aborted;
  res.resampled = resampled;
  res.dispatch = dispatch;
  const StratifiedSgfCache::Stats cs = cache_->stats();
  res.cache_hits = cs.hits;
  res.cache_misses = cs.misses;
  res.terminals.reserve(nslots);
  for (size_t k = 0; k < nslots; ++k) {
    TerminalEstimate te;
    te.conductor_id =
        (k < s_.conductors.size()) ? s_.conductors[k].id : -1;
    const auto [v, se] = estimate(k);
    te.value = v;
    te.std_err = se;
    te.walks_landed = landed[k];
    res.terminals.push_back(te);
  }
  res.t_mw_seconds = t_mw;
  res.t_total_seconds = seconds_since(t_start);
  return res;
}

CapacitanceResult extract(const Structure& s, const Config& cfg, int threads,
                          StratifiedSgfCache* cache) {
  Engine engine(s, cfg, cache);
  return engine.extract(threads);
}

}  // namespace frwcap
