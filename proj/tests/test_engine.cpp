#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "frwcap/engine.hpp"
#include "frwcap/oracle.hpp"

using namespace frwcap;

namespace {

// Two 1000x1000 plates 200 nm apart in vacuum, master at the bottom.
Structure plate_scene() {
  Structure s;
  s.conductors.push_back({1, {{0, 0, -50}, {1000, 1000, 0}}});
  s.conductors.push_back({2, {{0, 0, 200}, {1000, 1000, 250}}});
  s.world = {{-2000, -2000, -2000}, {3000, 3000, 3000}};
  s.master_id = 1;
  return s;
}

// Same plates with two dielectric films filling the gap, so every walk cube
// is uniform or z-stratified and all modes share trajectories.
Structure layered_plate_scene() {
  Structure s = plate_scene();
  s.dielectrics.push_back({{{-2000, -2000, 0}, {3000, 3000, 80}}, 3.9});
  s.dielectrics.push_back({{{-2000, -2000, 80}, {3000, 3000, 200}}, 7.5});
  return s;
}

// Single 100 nm master cube with room around it for hand-placed probes.
Structure probe_scene() {
  Structure s;
  s.conductors.push_back({1, {{0, 0, 0}, {100, 100, 100}}});
  s.world = {{-2000, -2000, -2000}, {3000, 3000, 3000}};
  s.master_id = 1;
  return s;
}

double rel_diff(double a, double b) {
  return std::fabs(a - b) / std::max(std::fabs(a), std::fabs(b));
}

// Recover the panel index from an exit point on the cube surface.
int panel_of_point(const Cube& cube, int n, const Vec3& q) {
  const double h = cube.half_width;
  const double pitch = 2.0 * h / n;
  int face = -1;
  for (int d = 0; d < 6 && face < 0; ++d) {
    const int ax = kDirAxis[d];
    const double plane = cube.center[ax] + kDirSign[d] * h;
    if (std::fabs(q[ax] - plane) <= 1e-9 * h) face = d;
  }
  REQUIRE(face >= 0);
  const int ax = kDirAxis[face];
  const int u_ax = (ax == 0) ? 1 : 0;
  const int v_ax = (ax == 2) ? 1 : 2;
  const auto coord = [&](int a) {
    const double lo = cube.center[a] - h;
    return std::clamp(static_cast<int>(std::floor((q[a] - lo) / pitch)), 0,
                      n - 1);
  };
  return surface_panel_index(n, face, coord(u_ax), coord(v_ax));
}

}  // namespace

TEST_SUITE_BEGIN("engine");

TEST_CASE("config validation rejects bad knobs") {
  Config ok;
  CHECK_NOTHROW(ok.validate());

  Config c = ok;
  c.grid_n = 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ok;
  c.expansion = 0.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ok;
  c.rel_std_tol = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ok;
  c.rel_std_tol = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ok;
  c.min_walks = 10;
  c.max_walks = 5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ok;
  c.batch = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ok;
  c.hop_cap = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ok;
  c.gaussian_gap_fraction = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ok;
  c.gaussian_gap_fraction = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  CHECK(parse_mode("hybrid-mwe") == Mode::HybridMWE);
  CHECK(parse_mode("FDM") == Mode::FDM);
  CHECK_THROWS_AS(parse_mode("nope"), std::invalid_argument);
  CHECK(mode_name(Mode::HybridMW) == "HYBRID-MW");
}

TEST_CASE("gaussian surface sits halfway to the nearest obstacle") {
  SUBCASE("conductor-limited gap") {
    const Structure s = plate_scene();
    const GaussianSurface g = gaussian_surface(s, 0.5);
    // nearest obstacle is plate 2, 200 nm above; inflate by 100 everywhere
    CHECK(g.box.lo.x == doctest::Approx(-100));
    CHECK(g.box.lo.z == doctest::Approx(-150));
    CHECK(g.box.hi.x == doctest::Approx(1100));
    CHECK(g.box.hi.z == doctest::Approx(100));
    const double ex = 1200, ez = 250;
    const double area_nm2 = 2 * ex * ex + 4 * ex * ez;
    CHECK(g.area_m2 == doctest::Approx(area_nm2 * 1e-18).epsilon(1e-12));
    CHECK(g.face_cdf[5] == 1.0);
    for (int f = 1; f < 6; ++f) CHECK(g.face_cdf[f] > g.face_cdf[f - 1]);
    // shell avoids the other plate and stays in the world
    CHECK(!g.box.intersects_open(s.conductors[1].box));
    CHECK(s.world.contains_box(g.box));
  }

  SUBCASE("wall-limited gap") {
    Structure s = probe_scene();
    s.world = {{-300, -300, -300}, {400, 400, 400}};
    const GaussianSurface g = gaussian_surface(s, 0.5);
    // nearest wall is 300 away on every side, so inflate by 150
    CHECK(g.box.lo.x == doctest::Approx(-150));
    CHECK(g.box.hi.x == doctest::Approx(250));
  }

  SUBCASE("diagonal neighbor uses the largest per-axis gap") {
    Structure s = probe_scene();
    s.conductors.push_back({2, {{140, 120, 0}, {240, 220, 100}}});
    const GaussianSurface g = gaussian_surface(s, 0.5);
    // per-axis gaps are (40, 20, 0); Chebyshev separation is 40
    CHECK(g.box.hi.x == doctest::Approx(120));
    CHECK(!g.box.intersects_open(s.conductors[1].box));
  }

  SUBCASE("rejects degenerate setups") {
    Structure s = probe_scene();
    CHECK_THROWS_AS(gaussian_surface(s, 0.0), ValidationError);
    CHECK_THROWS_AS(gaussian_surface(s, 1.0), ValidationError);
    s.conductors.push_back({2, {{100, 0, 0}, {200, 100, 100}}});
    CHECK_THROWS_AS(gaussian_surface(s, 0.5), ValidationError);  // touching
    Structure w = probe_scene();
    w.world = {{0, -300, -300}, {400, 400, 400}};
    CHECK_THROWS_AS(gaussian_surface(w, 0.5), ValidationError);  // on wall
  }
}

TEST_CASE("gaussian sampling matches face areas and lands on the shell") {
  Structure s = probe_scene();
  // stretch the master so the shell faces have distinct areas
  s.conductors[0].box = {{0, 0, 0}, {100, 300, 700}};
  const GaussianSurface g = gaussian_surface(s, 0.5);

  const double ex = g.box.hi.x - g.box.lo.x;
  const double ey = g.box.hi.y - g.box.lo.y;
  const double ez = g.box.hi.z - g.box.lo.z;
  const double areas[6] = {ey * ez, ey * ez, ex * ez, ex * ez, ex * ey,
                           ex * ey};
  const double total = 2 * (ey * ez + ex * ez + ex * ey);

  SplitMix64 rng(404, 0);
  const int kN = 60000;
  int counts[6] = {0};
  for (int i = 0; i < kN; ++i) {
    const GaussianSample smp = sample_gaussian(g, rng);
    REQUIRE(smp.axis >= 0);
    REQUIRE(smp.axis < 3);
    const int face = 2 * smp.axis + (smp.sign > 0 ? 1 : 0);
    ++counts[face];
    // the fixed coordinate sits exactly on the face plane
    const double plane =
        (smp.sign < 0) ? g.box.lo[smp.axis] : g.box.hi[smp.axis];
    CHECK(smp.point[smp.axis] == plane);
    for (int a = 0; a < 3; ++a) {
      if (a == smp.axis) continue;
      CHECK(smp.point[a] >= g.box.lo[a]);
      CHECK(smp.point[a] <= g.box.hi[a]);
    }
  }
  for (int f = 0; f < 6; ++f) {
    const double p = areas[f] / total;
    const double sigma = std::sqrt(p * (1 - p) / kN);
    CHECK(std::fabs(double(counts[f]) / kN - p) <= 4 * sigma);
  }
}

TEST_CASE("first transition walks the stratification ladder") {
  const int n = 10;
  Config cfg;
  cfg.grid_n = n;
  SplitMix64 rng(7, 0);

  SUBCASE("uniform and stratified cubes take the direct branch") {
    const Structure s = layered_plate_scene();
    Engine eng(s, cfg);
    DispatchStats ds;
    // a point on the top face of the shell sees the z-film stack
    const GaussianSample g{{500.0, 500.0, eng.surface().box.hi.z}, 2, +1};
    const auto ft = eng.first_transition(g, rng, ds);
    REQUIRE(ft.has_value());
    CHECK(ft->branch == 0);
    CHECK(ds.first_stratified == 1);
    CHECK(std::isfinite(ft->weight));
    CHECK(ft->weight != 0.0);
  }

  SUBCASE("concentric shrink rescues a blocked cube") {
    Structure s = probe_scene();
    s.dielectrics.push_back({{{280, -400, -400}, {400, 500, 500}}, 4.0});
    s.dielectrics.push_back({{{150, -400, 120}, {250, 500, 260}}, 8.0});
    Engine eng(s, cfg);
    DispatchStats ds;
    const GaussianSample g{{200.0, 50.0, 50.0}, 0, +1};
    const auto ft = eng.first_transition(g, rng, ds);
    REQUIRE(ft.has_value());
    CHECK(ft->branch == 1);
    CHECK(ds.first_shrunk == 1);
  }

  SUBCASE("persistent cross-axis variation falls to slice homogenization") {
    Structure s = probe_scene();
    s.dielectrics.push_back({{{180, -400, 78}, {220, 500, 400}}, 5.0});
    Engine eng(s, cfg);
    DispatchStats ds;
    const GaussianSample g{{200.0, 50.0, 50.0}, 0, +1};
    const auto ft = eng.first_transition(g, rng, ds);
    REQUIRE(ft.has_value());
    CHECK(ft->branch == 2);
    CHECK(ds.first_layered == 1);
  }

  SUBCASE("balanced quadrants fall through to the whole-cube average") {
    Structure s = probe_scene();
    const Vec3 p{200.0, 50.0, 50.0};
    // plane offsets match the even-n lattice shift, so every slice along
    // every axis averages the two permittivities exactly evenly
    const double q = 100.0 / (n + 1);
    s.dielectrics.push_back(
        {{{50, 50 + q, 50 + q}, {350, 460, 460}}, 5.0});
    s.dielectrics.push_back(
        {{{50, -360, -360}, {350, 50 + q, 50 + q}}, 5.0});
    Engine eng(s, cfg);
    DispatchStats ds;
    const GaussianSample g{p, 0, +1};
    const auto ft = eng.first_transition(g, rng, ds);
    REQUIRE(ft.has_value());
    CHECK(ft->branch == 3);
    CHECK(ds.first_homogenized == 1);
  }

  SUBCASE("degenerate free cube asks for a resample") {
    const Structure s = probe_scene();
    Engine eng(s, cfg);
    DispatchStats ds;
    const GaussianSample g{{50.0, 50.0, 100.0}, 2, +1};  // on the master face
    CHECK(!eng.first_transition(g, rng, ds).has_value());
    CHECK(ds.first_total() == 0);
  }
}

TEST_CASE("first transition weights average to zero over the shell cube") {
  // sum over panels of the gradient kernel is zero, so the importance-
  // sampled weight kernel/probs must have zero mean at any fixed point
  Config cfg;
  cfg.grid_n = 8;
  const Structure s = layered_plate_scene();
  Engine eng(s, cfg);
  DispatchStats ds;
  SplitMix64 rng(99, 0);
  const GaussianSample g{{321.0, 456.0, eng.surface().box.hi.z}, 2, +1};

  const int kN = 20000;
  double sum = 0, sumsq = 0;
  for (int i = 0; i < kN; ++i) {
    const auto ft = eng.first_transition(g, rng, ds);
    REQUIRE(ft.has_value());
    sum += ft->weight;
    sumsq += ft->weight * ft->weight;
  }
  const double mean = sum / kN;
  const double sd = std::sqrt((sumsq - sum * sum / kN) / (kN - 1));
  CHECK(std::fabs(mean) <= 4.0 * sd / std::sqrt(double(kN)));
  CHECK(sd > 0.0);
}

TEST_CASE("transition terminates by snapping and dispatches by cube class") {
  const int n = 8;

  SUBCASE("points within snap distance terminate") {
    Config cfg;
    cfg.grid_n = n;
    const Structure s = plate_scene();
    Engine eng(s, cfg);
    MicroWalkScratch scratch;
    DispatchStats ds;
    SplitMix64 rng(5, 0);

    const double snap = eng.snap_distance();
    CHECK(snap > 0);
    const WalkEvent near_master =
        eng.transition({500, 500, -0.4 * snap}, rng, scratch, ds);
    CHECK(near_master.kind == WalkEvent::Kind::Terminate);
    CHECK(near_master.conductor_id == 1);

    const WalkEvent near_plate2 =
        eng.transition({500, 500, 200 + 0.4 * snap}, rng, scratch, ds);
    CHECK(near_plate2.kind == WalkEvent::Kind::Terminate);
    CHECK(near_plate2.conductor_id == 2);

    const WalkEvent near_wall =
        eng.transition({500, 500, 3000 - 0.4 * snap}, rng, scratch, ds);
    CHECK(near_wall.kind == WalkEvent::Kind::TerminateGround);
    CHECK(ds.subsequent_total() == 0);  // terminations dispatch no solver
  }

  SUBCASE("stratified cubes are served from the cache in every mode") {
    for (const Mode mode : {Mode::FDM, Mode::MW, Mode::MWE, Mode::HybridMW,
                            Mode::HybridMWE}) {
      Config cfg;
      cfg.grid_n = n;
      cfg.mode = mode;
      const Structure s = layered_plate_scene();
      Engine eng(s, cfg);
      MicroWalkScratch scratch;
      DispatchStats ds;
      SplitMix64 rng(6, 0);
      const Vec3 p{500, 500, 500};  // uniform surroundings above the stack
      const WalkEvent ev = eng.transition(p, rng, scratch, ds);
      CHECK(ev.kind == WalkEvent::Kind::Continue);
      CHECK(ds.cached == 1);
      CHECK(ds.subsequent_total() == 1);
      // the new point lies on the surface of the (shifted) transit cube
      const FreeCube f = s.max_free_cube(p);
      const Cube cube = transit_cube(p, f.half_width, n);
      const int panel = panel_of_point(cube, n, ev.point);
      CHECK(panel >= 0);
      CHECK(panel < 6 * n * n);
    }
  }

  SUBCASE("general cubes dispatch by mode") {
    Structure s = probe_scene();
    s.dielectrics.push_back({{{180, -400, 78}, {220, 500, 400}}, 5.0});
    const Vec3 p{200.0, 50.0, 50.0};

    const auto run_one = [&](Mode mode, DispatchStats& ds) {
      Config cfg;
      cfg.grid_n = n;
      cfg.mode = mode;
      Engine eng(s, cfg);
      MicroWalkScratch scratch;
      SplitMix64 rng(7, 0);
      return eng.transition(p, rng, scratch, ds);
    };

    DispatchStats ds;
    CHECK(run_one(Mode::FDM, ds).kind == WalkEvent::Kind::Continue);
    CHECK(ds.fdm == 1);
    ds = {};
    CHECK(run_one(Mode::MW, ds).kind == WalkEvent::Kind::Continue);
    CHECK(ds.microwalk == 1);
    ds = {};
    CHECK(run_one(Mode::HybridMW, ds).kind == WalkEvent::Kind::Continue);
    CHECK(ds.microwalk == 1);
    ds = {};
    run_one(Mode::MWE, ds);
    CHECK(ds.microwalk_e == 1);
    ds = {};
    run_one(Mode::HybridMWE, ds);
    CHECK(ds.microwalk_e == 1);
  }

  SUBCASE("expanded walks can terminate directly on a conductor") {
    Structure s = probe_scene();
    s.conductors.push_back({2, {{140, 0, 0}, {240, 100, 100}}});
    s.dielectrics.push_back({{{110, 20, 20}, {130, 60, 60}}, 9.0});  // general
    Config cfg;
    cfg.grid_n = n;
    cfg.mode = Mode::HybridMWE;
    cfg.expansion = 5.0;
    Engine eng(s, cfg);
    MicroWalkScratch scratch;
    DispatchStats ds;
    SplitMix64 rng(8, 0);
    const Vec3 p{120.0, 50.0, 50.0};  // 20 nm from both conductors

    int terminated = 0, continued = 0;
    for (int i = 0; i < 200; ++i) {
      const WalkEvent ev = eng.transition(p, rng, scratch, ds);
      if (ev.kind == WalkEvent::Kind::Terminate) {
        ++terminated;
        CHECK((ev.conductor_id == 1 || ev.conductor_id == 2));
      } else {
        CHECK(ev.kind == WalkEvent::Kind::Continue);
        ++continued;
      }
    }
    CHECK(ds.microwalk_e == 200);
    CHECK(terminated > 0);
    CHECK(continued > 0);
  }
}

TEST_CASE("engine lattice transitions reproduce the exact panel law") {
  const int n = 6;
  Structure s = probe_scene();
  s.dielectrics.push_back({{{180, -400, 78}, {220, 500, 400}}, 5.0});
  const Vec3 p{200.0, 50.0, 50.0};

  Config cfg;
  cfg.grid_n = n;
  cfg.mode = Mode::HybridMW;
  Engine eng(s, cfg);
  MicroWalkScratch scratch;
  DispatchStats ds;

  const FreeCube f = s.max_free_cube(p);
  const Cube cube = transit_cube(p, f.half_width, n);
  const DiscreteSGF exact = solve_sgf(assemble_system(build_grid(s, cube, n)));

  SplitMix64 rng(2024, 0);
  const auto sampler = [&](SplitMix64& r) {
    const WalkEvent ev = eng.transition(p, r, scratch, ds);
    REQUIRE(ev.kind == WalkEvent::Kind::Continue);
    return panel_of_point(cube, n, ev.point);
  };
  const DistributionReport rep =
      compare_distribution(exact.probs, sampler, 100000, rng);
  CHECK(rep.tv_distance <= 0.03);
  CHECK(rep.gof_pass());
  CHECK(ds.microwalk == 100000);
}

TEST_CASE("extraction satisfies Maxwell structure and accounting") {
  const Structure s = plate_scene();
  Config cfg;
  cfg.grid_n = 12;
  cfg.mode = Mode::HybridMWE;
  cfg.seed = 31;
  cfg.min_walks = cfg.max_walks = 8192;
  cfg.rel_std_tol = 1e-6;  // unattainable on purpose
  const CapacitanceResult res = extract(s, cfg);

  REQUIRE(res.terminals.size() == 3);
  CHECK(res.terminals[0].conductor_id == 1);
  CHECK(res.terminals[1].conductor_id == 2);
  CHECK(res.terminals[2].conductor_id == -1);
  CHECK(res.master_id == 1);
  CHECK(res.walks == 8192);
  CHECK(!res.converged);
  CHECK(res.aborted == 0);
  CHECK(res.resampled == 0);

  const TerminalEstimate& self = res.self();
  CHECK(self.value > 5 * self.std_err);  // decisively positive diagonal
  for (const TerminalEstimate& t : res.terminals) {
    if (t.conductor_id == res.master_id) continue;
    CHECK(t.value <= 3 * t.std_err);  // off-diagonals non-positive
  }
  const TerminalEstimate* other = res.find_terminal(2);
  REQUIRE(other);
  CHECK(other->value < -5 * other->std_err);  // strong plate coupling

  // every walk contributes its weight to exactly one terminal, so the row
  // sums to zero up to sampling noise
  double row = 0, var = 0;
  uint64_t landed = 0;
  for (const TerminalEstimate& t : res.terminals) {
    row += t.value;
    var += t.std_err * t.std_err;
    landed += t.walks_landed;
  }
  CHECK(landed == res.walks);
  CHECK(std::fabs(row) <= 4 * std::sqrt(var));

  // each walk took exactly one first transition and at least one hop
  CHECK(res.dispatch.first_total() == res.walks);
  CHECK(res.dispatch.first_stratified == res.walks);  // vacuum everywhere
  CHECK(res.dispatch.subsequent_total() > 0);
  CHECK(res.cache_misses > 0);
  CHECK(res.cache_hits > res.cache_misses);
  CHECK(res.t_total_seconds > 0);
}

TEST_CASE("loose tolerance converges before the walk budget") {
  const Structure s = plate_scene();
  Config cfg;
  cfg.grid_n = 8;
  cfg.seed = 17;
  cfg.min_walks = 1024;
  cfg.max_walks = 1 << 20;
  cfg.rel_std_tol = 0.3;
  const CapacitanceResult res = extract(s, cfg);
  CHECK(res.converged);
  CHECK(res.walks < static_cast<uint64_t>(cfg.max_walks));
  CHECK(res.walks >= static_cast<uint64_t>(cfg.min_walks));
  CHECK(res.walks % cfg.batch == 0);
}

TEST_CASE("fixed seeds reproduce results bit for bit") {
  Structure s = plate_scene();
  // a general pocket so every dispatch flavor participates
  s.dielectrics.push_back({{{1100, 400, 30}, {1180, 520, 170}}, 16.0});
  Config cfg;
  cfg.grid_n = 8;
  cfg.mode = Mode::HybridMWE;
  cfg.seed = 77;
  cfg.min_walks = cfg.max_walks = 4096;

  const CapacitanceResult a = extract(s, cfg, 1);
  const CapacitanceResult b = extract(s, cfg, 1);
  REQUIRE(a.terminals.size() == b.terminals.size());
  for (size_t i = 0; i < a.terminals.size(); ++i) {
    CHECK(a.terminals[i].value == b.terminals[i].value);
    CHECK(a.terminals[i].std_err == b.terminals[i].std_err);
    CHECK(a.terminals[i].walks_landed == b.terminals[i].walks_landed);
  }
  CHECK(a.walks == b.walks);
  CHECK(a.aborted == b.aborted);
  CHECK(a.dispatch.first_total() == b.dispatch.first_total());
  CHECK(a.dispatch.subsequent_total() == b.dispatch.subsequent_total());
  CHECK(a.dispatch.microwalk_e == b.dispatch.microwalk_e);

  SUBCASE("thread count does not change the estimates") {
    const CapacitanceResult c = extract(s, cfg, 2);
    for (size_t i = 0; i < a.terminals.size(); ++i) {
      CHECK(a.terminals[i].value == c.terminals[i].value);
      CHECK(a.terminals[i].std_err == c.terminals[i].std_err);
    }
    CHECK(a.dispatch.microwalk_e == c.dispatch.microwalk_e);
  }

  SUBCASE("different seeds decorrelate") {
    Config cfg2 = cfg;
    cfg2.seed = 78;
    const CapacitanceResult c = extract(s, cfg2, 1);
    CHECK(a.self().value != c.self().value);
  }
}

TEST_CASE("stratified-only scenes walk identically in every mode") {
  const Structure s = layered_plate_scene();
  Config cfg;
  cfg.grid_n = 8;
  cfg.seed = 13;
  cfg.min_walks = cfg.max_walks = 2048;

  CapacitanceResult res[3];
  const Mode modes[3] = {Mode::FDM, Mode::HybridMW, Mode::HybridMWE};
  for (int m = 0; m < 3; ++m) {
    Config c = cfg;
    c.mode = modes[m];
    res[m] = extract(s, c);
    CHECK(res[m].dispatch.fdm == 0);
    CHECK(res[m].dispatch.microwalk == 0);
    CHECK(res[m].dispatch.microwalk_e == 0);
    CHECK(res[m].dispatch.cached > 0);
  }
  for (int m = 1; m < 3; ++m) {
    for (size_t i = 0; i < res[0].terminals.size(); ++i) {
      CHECK(res[0].terminals[i].value == res[m].terminals[i].value);
      CHECK(res[0].terminals[i].std_err == res[m].terminals[i].std_err);
    }
  }
}

TEST_CASE("standard error shrinks like the square root of the walk count") {
  const Structure s = plate_scene();
  Config base;
  base.grid_n = 8;
  base.seed = 55;

  Config small = base;
  small.min_walks = small.max_walks = 2048;
  Config big = base;
  big.min_walks = big.max_walks = 8192;

  const CapacitanceResult rs = extract(s, small);
  const CapacitanceResult rb = extract(s, big);
  const double ratio = rs.self().std_err / rb.self().std_err;
  CHECK(ratio > 2.0 * 0.8);
  CHECK(ratio < 2.0 * 1.2);
}

TEST_CASE("hop cap folds runaway walks into ground") {
  const Structure s = plate_scene();
  Config cfg;
  cfg.grid_n = 8;
  cfg.seed = 3;
  cfg.min_walks = cfg.max_walks = 512;
  cfg.hop_cap = 1;
  const CapacitanceResult res = extract(s, cfg);
  CHECK(res.walks == 512);
  CHECK(res.aborted > 0);
  const TerminalEstimate* ground = res.find_terminal(-1);
  REQUIRE(ground);
  CHECK(ground->walks_landed >= res.aborted);
  CHECK(res.dispatch.first_total() == res.walks);
}

TEST_SUITE_END();
