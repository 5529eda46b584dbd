#include "frwcap/geometry.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace frwcap {

namespace {

constexpr double kEpsRelTol = 1e-9;

bool eps_equal(double a, double b) {
  return std::abs(a - b) <= kEpsRelTol * std::max(std::abs(a), std::abs(b));
}

}  // namespace

bool Box::valid() const {
  for (int a = 0; a < 3; ++a) {
    if (!(lo[a] < hi[a]) || !std::isfinite(lo[a]) || !std::isfinite(hi[a]))
      return false;
  }
  return true;
}

double Box::chebyshev_to(const Vec3& p) const {
  double d = 0;
  for (int a = 0; a < 3; ++a) {
    d = std::max(d, std::max(lo[a] - p[a], p[a] - hi[a]));
  }
  return std::max(d, 0.0);
}

double Box::chebyshev_to_wall(const Vec3& p) const {
  double d = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    d = std::min(d, std::min(p[a] - lo[a], hi[a] - p[a]));
  }
  return d;
}

double Structure::permittivity_at(const Vec3& p) const {
  if (!world.contains(p))
    throw std::invalid_argument("permittivity_at: point outside world box");
  double eps = background_eps;
  for (const auto& d : dielectrics) {
    if (d.box.contains(p)) eps = d.eps_r;  // later declaration wins
  }
  return eps;
}

std::optional<int> Structure::conductor_at(const Vec3& p, double tol) const {
  for (const auto& c : conductors) {
    if (c.box.chebyshev_to(p) <= tol) return c.id;
  }
  return std::nullopt;
}

FreeCube Structure::max_free_cube(const Vec3& p) const {
  FreeCube r;
  r.half_width = world.chebyshev_to_wall(p);
  if (r.half_width <= 0)
    throw std::invalid_argument("max_free_cube: point not inside the world");
  for (const auto& c : conductors) {
    const double d = c.box.chebyshev_to(p);
    if (d <= 0)
      throw std::invalid_argument("max_free_cube: point inside conductor " +
                                  std::to_string(c.id));
    if (d <= r.half_width) {  // ties go to the conductor
      r.half_width = d;
      r.nearest_id = c.id;
    }
  }
  return r;
}

const Conductor* Structure::find_conductor(int id) const {
  for (const auto& c : conductors)
    if (c.id == id) return &c;
  return nullptr;
}

void Structure::validate() const {
  if (conductors.empty()) throw ValidationError("structure has no conductors");
  if (!world.valid()) throw ValidationError("world box is degenerate");
  std::vector<int> ids;
  for (const auto& c : conductors) {
    if (!c.box.valid())
      throw ValidationError("conductor " + std::to_string(c.id) +
                            " has a degenerate box (hi <= lo)");
    if (!world.contains_box(c.box))
      throw ValidationError("conductor " + std::to_string(c.id) +
                            " extends outside the world box");
    if (std::find(ids.begin(), ids.end(), c.id) != ids.end())
      throw ValidationError("duplicate conductor id " + std::to_string(c.id));
    ids.push_back(c.id);
  }
  for (size_t i = 0; i < dielectrics.size(); ++i) {
    const auto& d = dielectrics[i];
    if (!d.box.valid())
      throw ValidationError("dielectric #" + std::to_string(i) +
                            " has a degenerate box (hi <= lo)");
    if (!(d.eps_r > 0))
      throw ValidationError("dielectric #" + std::to_string(i) +
                            " has eps_r <= 0");
    if (!world.contains_box(d.box))
      throw ValidationError("dielectric #" + std::to_string(i) +
                            " extends outside the world box");
  }
  if (!(background_eps > 0)) throw ValidationError("background_eps <= 0");
  if (!find_conductor(master_id))
    throw ValidationError("master conductor id " + std::to_string(master_id) +
                          " not present");
}

// ---------------------------------------------------------------------------
// Structure file parsing

namespace {

using nlohmann::json;

// nlohmann reports byte offsets; recover line/column for the error message.
std::pair<int, int> line_col(std::string_view text, size_t byte) {
  int line = 1, col = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

Vec3 parse_vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw ValidationError(std::string(what) + " must be an array of 3 numbers");
  for (const auto& v : j)
    if (!v.is_number())
      throw ValidationError(std::string(what) + " must contain numbers only");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Box parse_box(const json& j, const char* what) {
  Box b{parse_vec3(j.at("lo"), what), parse_vec3(j.at("hi"), what)};
  if (!b.valid())
    throw ValidationError(std::string(what) +
                          ": box invalid (needs finite lo < hi per axis)");
  return b;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok)
      throw ValidationError(std::string("unknown key \"") + it.key() +
                            "\" in " + where);
  }
}

}  // namespace

Structure parse_structure(std::string_view text, double world_margin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(line, col, e.what());
  }

  Structure s;
  try {
    if (!doc.is_object()) throw ValidationError("top level must be an object");
    check_keys(doc,
               {"units", "world", "background_eps", "conductors",
                "dielectrics", "master"},
               "structure file");

    if (doc.at("units").get<std::string>() != "nm")
      throw ValidationError("units must be \"nm\"");

    s.background_eps = doc.value("background_eps", 1.0);

    if (!doc.contains("conductors") || !doc["conductors"].is_array() ||
        doc["conductors"].empty())
      throw ValidationError("structure has no conductors");
    for (const auto& jc : doc["conductors"]) {
      check_keys(jc, {"id", "lo", "hi"}, "conductor");
      Conductor c;
      c.id = jc.at("id").get<int>();
      c.box = parse_box(jc, "conductor");
      s.conductors.push_back(c);
    }

    if (doc.contains("dielectrics")) {
      for (const auto& jd : doc["dielectrics"]) {
        check_keys(jd, {"lo", "hi", "eps"}, "dielectric");
        Dielectric d;
        d.box = parse_box(jd, "dielectric");
        d.eps_r = jd.at("eps").get<double>();
        s.dielectrics.push_back(d);
      }
    }

    s.master_id = doc.at("master").get<int>();

    if (doc.contains("world")) {
      s.world = parse_box(doc["world"], "world");
    } else {
      // bounding box of everything, inflated world_margin x per axis
      Vec3 lo{std::numeric_limits<double>::infinity(),
              std::numeric_limits<double>::infinity(),
              std::numeric_limits<double>::infinity()};
      Vec3 hi{-lo.x, -lo.y, -lo.z};
      auto absorb = [&](const Box& b) {
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], b.lo[a]);
          hi[a] = std::max(hi[a], b.hi[a]);
        }
      };
      for (const auto& c : s.conductors) absorb(c.box);
      for (const auto& d : s.dielectrics) absorb(d.box);
      Vec3 c{(lo.x + hi.x) / 2, (lo.y + hi.y) / 2, (lo.z + hi.z) / 2};
      double max_half = 0;
      for (int a = 0; a < 3; ++a) max_half = std::max(max_half, (hi[a] - lo[a]) / 2);
      if (!(max_half > 0)) throw ValidationError("structure has no extent");
      for (int a = 0; a < 3; ++a) {
        double half = (hi[a] - lo[a]) / 2;
        if (half <= 0) half = max_half / 2;  // flat structures still get room
        s.world.lo[a] = c[a] - world_margin * half;
        s.world.hi[a] = c[a] + world_margin * half;
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("structure file: ") + e.what());
  }

  s.validate();
  return s;
}

Structure parse_structure_file(const std::string& path, double world_margin) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open structure file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_structure(ss.str(), world_margin);
}

// ---------------------------------------------------------------------------
// Voxelization and classification

void classify_grid(DielectricGrid& g) {
  const int n = g.n;
  const auto free_voxel = [&](int i, int j, int k) {
    return g.conductor(i, j, k) < 0;
  };

  double ref = -1;
  bool uniform = true;
  for (int k = 0; k < n && uniform; ++k)
    for (int j = 0; j < n && uniform; ++j)
      for (int i = 0; i < n; ++i) {
        if (!free_voxel(i, j, k)) continue;
        const double e = g.eps_at(i, j, k);
        if (ref < 0)
          ref = e;
        else if (!eps_equal(ref, e)) {
          uniform = false;
          break;
        }
      }
  if (uniform) {
    g.tag = GridTag::Uniform;
    g.strat_axis = -1;
    return;
  }

  for (int axis = 0; axis < 3; ++axis) {
    bool ok = true;
    for (int s = 0; s < n && ok; ++s) {
      double slice_ref = -1;
      for (int u = 0; u < n && ok; ++u)
        for (int v = 0; v < n; ++v) {
          Vec3i c;
          c[axis] = s;
          c[(axis + 1) % 3] = u;
          c[(axis + 2) % 3] = v;
          if (!free_voxel(c.x, c.y, c.z)) continue;
          const double e = g.eps_at(c.x, c.y, c.z);
          if (slice_ref < 0)
            slice_ref = e;
          else if (!eps_equal(slice_ref, e)) {
            ok = false;
            break;
          }
        }
    }
    if (ok) {
      g.tag = GridTag::Stratified;
      g.strat_axis = axis;
      return;
    }
  }
  g.tag = GridTag::General;
  g.strat_axis = -1;
}

DielectricGrid build_grid(const Structure& s, const Cube& cube, int n,
                          bool allow_conductors) {
  if (n < 1) throw std::invalid_argument("build_grid: n must be >= 1");
  if (!s.world.contains_box(cube.box()))
    throw std::invalid_argument("build_grid: cube extends outside the world");

  DielectricGrid g;
  g.n = n;
  g.cube = cube;
  g.eps.resize(static_cast<size_t>(n) * n * n);
  if (allow_conductors)
    g.conductor_mask.assign(static_cast<size_t>(n) * n * n, -1);

  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Vec3 p = g.voxel_center(i, j, k);
        g.eps[g.index(i, j, k)] = s.permittivity_at(p);
        const auto cid = s.conductor_at(p, 0.0);
        if (cid) {
          if (!allow_conductors)
            throw std::invalid_argument(
                "build_grid: cube intersects conductor " +
                std::to_string(*cid));
          g.conductor_mask[g.index(i, j, k)] = *cid;
        }
      }
  classify_grid(g);
  return g;
}

bool StratifiedProfile::uniform() const {
  for (const double e : layers)
    if (!eps_equal(e, layers.front())) return false;
  return true;
}

std::optional<StratifiedProfile> stratified_profile(const Structure& s,
                                                    const Cube& cube, int n) {
  const Box cb = cube.box();
  std::vector<const Dielectric*> hits;
  for (const auto& d : s.dielectrics)
    if (d.box.intersects_open(cb)) hits.push_back(&d);

  int axis = -1;
  if (hits.empty()) {
    axis = 0;  // uniform background
  } else {
    for (int a = 0; a < 3 && axis < 0; ++a) {
      bool covers_all = true;
      for (const auto* d : hits) {
        for (int p = 1; p <= 2 && covers_all; ++p) {
          const int b = (a + p) % 3;
          if (d->box.lo[b] > cb.lo[b] || d->box.hi[b] < cb.hi[b])
            covers_all = false;
        }
        if (!covers_all) break;
      }
      if (covers_all) axis = a;
    }
    if (axis < 0) return std::nullopt;
  }

  // every intersecting box spans the cross-section, so the field inside the
  // cube depends on the `axis` coordinate only; read it at slice centers
  StratifiedProfile prof;
  prof.axis = axis;
  prof.layers.resize(n);
  const double pitch = 2.0 * cube.half_width / n;
  for (int t = 0; t < n; ++t) {
    Vec3 p = cube.center;
    p[axis] = cube.center[axis] - cube.half_width + (t + 0.5) * pitch;
    prof.layers[t] = s.permittivity_at(p);
  }
  if (prof.uniform()) prof.axis = 0;
  return prof;
}

}  // namespace frwcap
