#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "frwcap/geometry.hpp"
#include "frwcap/microwalk.hpp"
#include "frwcap/oracle.hpp"
#include "frwcap/rng.hpp"
#include "frwcap/sgf.hpp"

namespace {

using namespace frwcap;

DielectricGrid uniform_grid(int n, double eps) {
  DielectricGrid g;
  g.n = n;
  g.cube = {{0, 0, 0}, n / 2.0};
  g.eps.assign(static_cast<size_t>(n) * n * n, eps);
  classify_grid(g);
  return g;
}

// two z-layers plus an off-axis block, so transition cubes come out General
Structure layered_structure() {
  Structure s;
  s.world = {{-40, -40, -40}, {40, 40, 40}};
  s.background_eps = 1.0;
  s.dielectrics.push_back({{{-40, -40, -40}, {40, 40, -2}}, 3.9});
  s.dielectrics.push_back({{{-40, -40, -2}, {40, 40, 3}}, 7.5});
  s.dielectrics.push_back({{{1, -5, -40}, {12, 9, 40}}, 22.0});
  return s;
}

// conductor-face panel indices in assembly order: appended after the 6n^2
// surface panels, by (free voxel linear index, direction)
std::unordered_map<int, int> conductor_panel_map(const DielectricGrid& g) {
  std::unordered_map<int, int> m;
  int p = 6 * g.n * g.n;
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        if (g.conductor(i, j, k) >= 0) continue;
        for (int d = 0; d < 6; ++d) {
          Vec3i nb{i, j, k};
          nb[kDirAxis[d]] += kDirSign[d];
          if (nb[kDirAxis[d]] < 0 || nb[kDirAxis[d]] >= g.n) continue;
          if (g.conductor(nb.x, nb.y, nb.z) >= 0)
            m[g.index(i, j, k) * 6 + d] = p++;
        }
      }
  return m;
}

}  // namespace

TEST_SUITE("microwalk") {

TEST_CASE("neighbor weights: uniform interior node and n=1 are 1/6") {
  const auto g3 = uniform_grid(3, 4.2);
  const auto b3 = neighbor_weights(g3, {1, 1, 1});
  for (double b : b3) CHECK(b == doctest::Approx(1.0 / 6).epsilon(1e-12));

  const auto g1 = uniform_grid(1, 7.0);
  const auto b1 = neighbor_weights(g1, {0, 0, 0});
  for (double b : b1) CHECK(b == doctest::Approx(1.0 / 6).epsilon(1e-12));

  double sum = 0;
  for (double b : b3) sum += b;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("neighbor weights: one high-permittivity neighbor") {
  auto g = uniform_grid(3, 1.0);
  g.eps[g.index(2, 1, 1)] = 3.0;  // +x neighbor of the center
  const auto b = neighbor_weights(g, {1, 1, 1});
  CHECK(b[1] == doctest::Approx(0.75 / 3.25).epsilon(1e-12));
  for (int d : {0, 2, 3, 4, 5})
    CHECK(b[d] == doctest::Approx(0.5 / 3.25).epsilon(1e-12));
}

TEST_CASE("neighbor weights: conductor neighbor absorbs like the boundary") {
  auto g = uniform_grid(3, 1.0);
  g.conductor_mask.assign(27, -1);
  g.conductor_mask[g.index(2, 1, 1)] = 7;
  const auto b = neighbor_weights(g, {1, 1, 1});
  CHECK(b[1] == doctest::Approx(1.0 / 3.5).epsilon(1e-12));
  for (int d : {0, 2, 3, 4, 5})
    CHECK(b[d] == doctest::Approx(0.5 / 3.5).epsilon(1e-12));

  CHECK_THROWS_AS(neighbor_weights(g, {2, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(neighbor_weights(g, {3, 1, 1}), std::invalid_argument);
}

TEST_CASE("n=1 transit exits in one step, uniformly over the six panels") {
  const auto g = uniform_grid(1, 3.0);
  MicroWalkScratch scr;
  SplitMix64 rng(20240901);

  const std::vector<double> exact(6, 1.0 / 6);
  const auto rep = compare_distribution(
      exact,
      [&](SplitMix64& r) {
        const Exit e = microwalk_transit(g, r, scr);
        REQUIRE(e.steps == 1);
        REQUIRE(e.kind == Exit::Kind::Surface);
        return e.panel;
      },
      60000, rng);
  CHECK(rep.tv_distance <= 0.01);
  CHECK(rep.gof_pass());
}

TEST_CASE("exit distribution matches the solved surface Green's function") {
  // statistical form of the chain/FD equivalence on fixed random grids
  struct Case {
    int n;
    uint64_t seed;
  };
  for (const Case c : {Case{4, 11}, Case{6, 12}}) {
    CAPTURE(c.n);
    SplitMix64 gen(c.seed);
    const auto grid = random_voxel_grid(c.n, gen);
    const auto sgf = solve_sgf(assemble_system(grid), false);

    MicroWalkScratch scr;
    SplitMix64 rng(c.seed, 1);
    const auto rep = compare_distribution(
        sgf.probs,
        [&](SplitMix64& r) { return microwalk_transit(grid, r, scr).panel; },
        1000000, rng);
    CHECK(rep.tv_distance <= 0.01);
    CHECK(rep.gof_pass());
  }
}

TEST_CASE("mean step count matches the expected-steps solve") {
  struct Sum {
    double s = 0, s2 = 0;
    long n = 0;
    void add(double x) {
      s += x;
      s2 += x * x;
      ++n;
    }
    double mean() const { return s / n; }
    double sem() const {
      const double var = (s2 - s * s / n) / (n - 1);
      return std::sqrt(var / n);
    }
  };

  SUBCASE("uniform grid, n=8") {
    const auto grid = uniform_grid(8, 1.0);
    const double expect = expected_steps(assemble_system(grid));
    MicroWalkScratch scr;
    SplitMix64 rng(77, 0);
    Sum acc;
    for (int t = 0; t < 100000; ++t)
      acc.add(microwalk_transit(grid, rng, scr).steps);
    CHECK(std::abs(acc.mean() - expect) <= 3 * acc.sem());
  }

  SUBCASE("random grid, n=5") {
    SplitMix64 gen(31);
    const auto grid = random_voxel_grid(5, gen);
    const double expect = expected_steps(assemble_system(grid));
    MicroWalkScratch scr;
    SplitMix64 rng(78, 0);
    Sum acc;
    for (int t = 0; t < 100000; ++t)
      acc.add(microwalk_transit(grid, rng, scr).steps);
    CHECK(std::abs(acc.mean() - expect) <= 3 * acc.sem());
  }

  SUBCASE("n=1 takes exactly one step") {
    const auto grid = uniform_grid(1, 2.5);
    CHECK(expected_steps(assemble_system(grid)) == doctest::Approx(1.0));
    SplitMix64 rng(79, 0);
    for (int t = 0; t < 100; ++t)
      CHECK(microwalk_transit(grid, rng).steps == 1);
  }
}

TEST_CASE("alpha memoization does not change trajectories") {
  SplitMix64 gen(41);
  const auto grid = random_voxel_grid(5, gen);

  auto run = [&](bool memoize) {
    MicroWalkScratch scr;
    scr.memoize = memoize;
    SplitMix64 rng(42, 7);
    std::vector<std::pair<int, int>> out;
    for (int t = 0; t < 300; ++t) {
      const Exit e = microwalk_transit(grid, rng, scr);
      out.emplace_back(e.panel, e.steps);
    }
    out.emplace_back(static_cast<int>(rng.next() >> 33), 0);  // stream probe
    return out;
  };
  CHECK(run(true) == run(false));
}

TEST_CASE("scaling all permittivities by a power of two is bit-transparent") {
  SplitMix64 gen(51);
  const auto grid = random_voxel_grid(5, gen);
  auto scaled = grid;
  for (double& e : scaled.eps) e *= 32.0;

  const auto b0 = neighbor_weights(grid, {2, 2, 2});
  const auto b1 = neighbor_weights(scaled, {2, 2, 2});
  for (int d = 0; d < 6; ++d) CHECK(b0[d] == b1[d]);

  MicroWalkScratch s0, s1;
  SplitMix64 r0(52, 3), r1(52, 3);
  for (int t = 0; t < 300; ++t) {
    const Exit e0 = microwalk_transit(grid, r0, s0);
    const Exit e1 = microwalk_transit(scaled, r1, s1);
    CHECK(e0.panel == e1.panel);
    CHECK(e0.steps == e1.steps);
  }
}

TEST_CASE("lazy structure transits equal materialized-grid transits") {
  const Structure s = layered_structure();
  const Vec3 p{0, 0, 0};
  const double hw = 6.0;

  for (const int n : {5, 6}) {
    CAPTURE(n);
    const Cube cube = transit_cube(p, hw, n);
    const auto grid = build_grid(s, cube, n);
    REQUIRE(grid.tag == GridTag::General);

    MicroWalkScratch sl, sm;
    SplitMix64 rl(61, 5), rm(61, 5);
    for (int t = 0; t < 300; ++t) {
      const Exit el = microwalk_transit_lazy(s, cube, n, rl, sl);
      const Exit em = microwalk_transit(grid, rm, sm);
      CHECK(el.panel == em.panel);
      CHECK(el.steps == em.steps);
      CHECK(el.point == em.point);
    }
  }
}

TEST_CASE("expansion factor 1 reduces the expanded transit to the plain one") {
  const Structure s = layered_structure();
  const Vec3 p{-2, 1, 0.5};
  const double hw = 4.0;

  for (const int n : {4, 5}) {
    CAPTURE(n);
    const Cube cube = transit_cube(p, hw, n);
    const auto grid = build_grid(s, cube, n);

    MicroWalkScratch se, sl, sm;
    SplitMix64 re(62, 9), rl(62, 9), rm(62, 9);
    for (int t = 0; t < 200; ++t) {
      const Exit ee = microwalk_e_transit(s, p, hw, 1.0, n, re, se);
      const Exit el = microwalk_transit_lazy(s, cube, n, rl, sl);
      const Exit em = microwalk_transit(grid, rm, sm);
      REQUIRE(ee.kind == Exit::Kind::Surface);
      CHECK(ee.panel == el.panel);
      CHECK(ee.steps == el.steps);
      CHECK(ee.point == el.point);
      CHECK(ee.panel == em.panel);
      CHECK(ee.steps == em.steps);
    }
  }
}

TEST_CASE("staircase absorption matches the exact masked-system row") {
  // expanded cube [-20,0]x[-10,10]^2 whose +x part is conductor 7
  Structure s;
  s.world = {{-40, -40, -40}, {40, 40, 40}};
  s.background_eps = 2.0;
  s.conductors.push_back({7, {{-9.9, -11, -11}, {2, 11, 11}}});

  const Vec3 p{-10, 0, 0};
  const int n = 5;
  const Cube cube = transit_cube(p, 10.0, n);
  const auto grid = build_grid(s, cube, n, true);
  const auto row = exact_absorption_row(grid);
  const auto cmap = conductor_panel_map(grid);
  REQUIRE(cmap.size() == 25);
  REQUIRE(row.size() == 175);

  MicroWalkScratch scr;
  long conductor_exits = 0;
  const auto sampler = [&](SplitMix64& r) {
    const Exit e = microwalk_e_transit(s, p, 2.0, 5.0, n, r, scr);
    if (e.kind == Exit::Kind::Surface) return e.panel;
    ++conductor_exits;
    REQUIRE(e.conductor_id == 7);
    REQUIRE(e.dir == 1);
    REQUIRE(e.point.x == -8.0);  // shared face plane of voxel layers 2 and 3
    return cmap.at(grid.index(e.voxel.x, e.voxel.y, e.voxel.z) * 6 + e.dir);
  };

  SplitMix64 rng(63, 0);
  const auto rep = compare_distribution(row, sampler, 100000, rng);
  CHECK(rep.tv_distance <= 0.03);
  CHECK(rep.gof_pass());

  double exact_mass = 0;
  for (size_t i = 150; i < row.size(); ++i) exact_mass += row[i];
  CHECK(exact_mass > 0.1);
  const double q = static_cast<double>(conductor_exits) / rep.samples;
  const double sigma = std::sqrt(exact_mass * (1 - exact_mass) / rep.samples);
  CHECK(std::abs(q - exact_mass) <= 3 * sigma);

  // the expanded walk is bit-identical to the materialized masked walk
  MicroWalkScratch se, sm;
  SplitMix64 re(64, 2), rm(64, 2);
  for (int t = 0; t < 200; ++t) {
    const Exit ee = microwalk_e_transit(s, p, 2.0, 5.0, n, re, se);
    const Exit em = microwalk_transit(grid, rm, sm);
    CHECK(ee.kind == em.kind);
    CHECK(ee.steps == em.steps);
    CHECK(ee.point == em.point);
    CHECK(ee.conductor_id == em.conductor_id);
  }
}

TEST_CASE("exit geometry is consistent with the cube and the exit voxel") {
  const Structure s = layered_structure();
  const Vec3 p{0.5, -1, 2};
  const int n = 6;
  const Cube cube = transit_cube(p, 5.0, n);

  // even-n placement: the start node sits on the walk point, inside the cube
  const auto grid = build_grid(s, cube, n);
  const Vec3i c0 = start_node(n);
  const Vec3 sc = grid.voxel_center(c0.x, c0.y, c0.z);
  for (int a = 0; a < 3; ++a) CHECK(std::abs(sc[a] - p[a]) <= 1e-11);
  CHECK(Cube{p, 5.0}.box().contains_box(cube.box()));

  MicroWalkScratch scr;
  SplitMix64 rng(65, 4);
  for (int t = 0; t < 500; ++t) {
    const Exit e = microwalk_transit_lazy(s, cube, n, rng, scr);
    REQUIRE(e.kind == Exit::Kind::Surface);
    REQUIRE(e.steps >= 3);  // start node is 3 hops from the nearest face
    REQUIRE(e.panel >= 0);
    REQUIRE(e.panel < 6 * n * n);
    REQUIRE(surface_panel_of(n, e.voxel, e.dir) == e.panel);

    const int axis = kDirAxis[e.dir];
    CHECK(std::abs(e.point[axis] - cube.center[axis]) ==
          doctest::Approx(cube.half_width).epsilon(1e-12));
    for (int a = 0; a < 3; ++a) {
      if (a == axis) continue;
      CHECK(std::abs(e.point[a] - cube.center[a]) < cube.half_width);
    }
  }
}

TEST_CASE("safety cap and engulfed starts raise errors") {
  const auto grid = uniform_grid(8, 1.0);
  SplitMix64 rng(66, 0);
  MicroWalkScratch scr;
  CHECK_THROWS_AS(microwalk_transit(grid, rng, scr, 2), std::runtime_error);

  // walk point exactly on a conductor face: the even-n lattice shift puts
  // the start voxel center just inside the conductor
  Structure s;
  s.world = {{-30, -30, -30}, {30, 30, 30}};
  s.background_eps = 1.0;
  s.conductors.push_back({1, {{0, -20, -20}, {20, 20, 20}}});
  SplitMix64 r2(67, 0);
  CHECK_THROWS_AS(microwalk_e_transit(s, {0, 0, 0}, 1.0, 4.0, 4, r2),
                  EngulfedStart);
}

}  // TEST_SUITE
