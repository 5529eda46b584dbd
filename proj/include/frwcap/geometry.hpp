#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace frwcap {

// All coordinates are in nanometers.

struct Vec3 {
  double x = 0, y = 0, z = 0;

  double operator[](int a) const { return a == 0 ? x : (a == 1 ? y : z); }
  double& operator[](int a) { return a == 0 ? x : (a == 1 ? y : z); }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  bool operator==(const Vec3& o) const = default;
};

struct Vec3i {
  int x = 0, y = 0, z = 0;
  int operator[](int a) const { return a == 0 ? x : (a == 1 ? y : z); }
  int& operator[](int a) { return a == 0 ? x : (a == 1 ? y : z); }
  bool operator==(const Vec3i& o) const = default;
};

// Axis-aligned box, lo[k] < hi[k].
struct Box {
  Vec3 lo, hi;

  bool contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y &&
           p.z >= lo.z && p.z <= hi.z;
  }

  // Chebyshev (max-norm) distance from an outside point; 0 if inside.
  double chebyshev_to(const Vec3& p) const;

  // Chebyshev distance from an inside point to the box surface.
  double chebyshev_to_wall(const Vec3& p) const;

  // open-interval overlap test: touching faces do not count
  bool intersects_open(const Box& o) const {
    return lo.x < o.hi.x && o.lo.x < hi.x && lo.y < o.hi.y && o.lo.y < hi.y &&
           lo.z < o.hi.z && o.lo.z < hi.z;
  }

  bool contains_box(const Box& o) const {
    return o.lo.x >= lo.x && o.hi.x <= hi.x && o.lo.y >= lo.y &&
           o.hi.y <= hi.y && o.lo.z >= lo.z && o.hi.z <= hi.z;
  }

  Vec3 center() const {
    return {(lo.x + hi.x) / 2, (lo.y + hi.y) / 2, (lo.z + hi.z) / 2};
  }
  Vec3 half_extent() const {
    return {(hi.x - lo.x) / 2, (hi.y - lo.y) / 2, (hi.z - lo.z) / 2};
  }
  bool valid() const;
};

struct Conductor {
  int id = 0;
  Box box;
};

struct Dielectric {
  Box box;
  double eps_r = 1.0;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& what)
      : std::runtime_error("parse error at line " + std::to_string(line) +
                           ", column " + std::to_string(column) + ": " + what),
        line(line),
        column(column) {}
  int line;
  int column;
};

class ValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Result of the conductor-free cube query.
struct FreeCube {
  double half_width = 0;
  std::optional<int> nearest_id;  // empty when the world wall is nearest
};

// The 3-D scene: conductors and dielectric blocks inside a grounded world
// box. Immutable after parsing; all queries are const and thread-safe.
struct Structure {
  std::vector<Conductor> conductors;
  std::vector<Dielectric> dielectrics;  // declaration order; later wins
  double background_eps = 1.0;
  Box world;
  int master_id = 0;

  // relative permittivity at p; later-declared dielectric wins in overlaps
  double permittivity_at(const Vec3& p) const;

  // id of the first conductor whose box, inflated by tol, contains p
  std::optional<int> conductor_at(const Vec3& p, double tol) const;

  // largest conductor-free cube half-width centered at p (also clipped by
  // the world wall), plus the conductor realizing the minimum
  FreeCube max_free_cube(const Vec3& p) const;

  const Conductor* find_conductor(int id) const;

  void validate() const;  // throws ValidationError
};

// Parses a structure file (JSON, coordinates in nm). world_margin controls
// the automatic world box: structure bounding box inflated by this factor
// per axis when no explicit world is given.
Structure parse_structure(std::string_view text, double world_margin = 5.0);
Structure parse_structure_file(const std::string& path,
                               double world_margin = 5.0);

// ---------------------------------------------------------------------------
// Transition-cube voxelization

enum class GridTag : uint8_t { Uniform, Stratified, General };

struct Cube {
  Vec3 center;
  double half_width = 0;

  Box box() const {
    return {{center.x - half_width, center.y - half_width,
             center.z - half_width},
            {center.x + half_width, center.y + half_width,
             center.z + half_width}};
  }
};

// N x N x N permittivity lattice for one transition cube. Voxel (i,j,k) is
// indexed x-fastest: idx = (k*n + j)*n + i. conductor_mask holds -1 for
// free voxels and the conductor id otherwise; it is empty unless the grid
// was built with allow_conductors (the MicroWalk-E case).
struct DielectricGrid {
  int n = 0;
  Cube cube;
  std::vector<double> eps;
  std::vector<int32_t> conductor_mask;
  GridTag tag = GridTag::Uniform;
  int strat_axis = -1;  // valid when tag == Stratified

  int index(int i, int j, int k) const { return (k * n + j) * n + i; }
  double eps_at(int i, int j, int k) const { return eps[index(i, j, k)]; }
  bool has_mask() const { return !conductor_mask.empty(); }
  int conductor(int i, int j, int k) const {
    return has_mask() ? conductor_mask[index(i, j, k)] : -1;
  }
  double pitch() const { return 2.0 * cube.half_width / n; }
  Vec3 voxel_center(int i, int j, int k) const {
    const double h = cube.half_width, p = pitch();
    return {cube.center.x - h + (i + 0.5) * p,
            cube.center.y - h + (j + 0.5) * p,
            cube.center.z - h + (k + 0.5) * p};
  }
};

// Classification used by DielectricGrid: Uniform / Stratified(axis) /
// General, comparing permittivities at relative tolerance 1e-9 and skipping
// conductor voxels.
void classify_grid(DielectricGrid& g);

// Voxelizes the cube against the structure (permittivity at voxel centers).
// With allow_conductors=false the cube must not intersect any conductor.
DielectricGrid build_grid(const Structure& s, const Cube& cube, int n,
                          bool allow_conductors = false);

// Geometric stratification probe used on the walk engine's hot path: if
// every dielectric box intersecting the open cube covers the cube's full
// cross-section perpendicular to some axis, the field inside the cube varies
// along that axis only and the N-layer profile can be read off directly,
// without materializing N^3 voxels. Conservative: may report nullopt for a
// cube that voxel-level classification would still call stratified.
struct StratifiedProfile {
  int axis = 0;  // 0 for uniform profiles
  std::vector<double> layers;
  bool uniform() const;
};
std::optional<StratifiedProfile> stratified_profile(const Structure& s,
                                                    const Cube& cube, int n);

}  // namespace frwcap
