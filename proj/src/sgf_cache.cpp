#include "frwcap/sgf_cache.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <mutex>
#include <stdexcept>

#include "frwcap/rng.hpp"

namespace frwcap {

double round_sig(double x, int digits) {
  if (x == 0 || !std::isfinite(x)) return x;
  const double exp10 = std::floor(std::log10(std::fabs(x)));
  const double mag = std::pow(10.0, digits - 1 - exp10);
  return std::round(x * mag) / mag;
}

size_t ProfileKeyHash::operator()(const ProfileKey& k) const {
  uint64_t h = SplitMix64::mix((static_cast<uint64_t>(k.n) << 8) ^
                               static_cast<uint64_t>(k.axis) ^
                               (k.expanded ? 1ull << 62 : 0));
  for (double v : k.layers) h = SplitMix64::mix(h ^ std::bit_cast<uint64_t>(v));
  if (k.conductor_sig) h = SplitMix64::mix(h ^ *k.conductor_sig);
  return static_cast<size_t>(h);
}

ProfileKey profile_key(int n, int axis, const std::vector<double>& layers,
                       bool expanded, std::optional<uint64_t> conductor_sig) {
  if (static_cast<int>(layers.size()) != n)
    throw std::invalid_argument("profile_key: expected one layer per slice");
  if (axis < 0 || axis > 2)
    throw std::invalid_argument("profile_key: axis out of range");
  ProfileKey k;
  k.n = n;
  k.axis = axis;
  k.layers.reserve(layers.size());
  for (double v : layers) k.layers.push_back(round_sig(v, 6));
  bool uniform = true;
  for (double v : k.layers) uniform = uniform && v == k.layers[0];
  if (uniform) k.axis = 0;
  k.expanded = expanded;
  k.conductor_sig = conductor_sig;
  return k;
}

ProfileKey profile_key(const StratifiedProfile& profile, int n) {
  return profile_key(n, profile.axis, profile.layers);
}

ProfileKey profile_key(const DielectricGrid& grid) {
  if (grid.tag == GridTag::General)
    throw std::invalid_argument("profile_key: grid is not stratified");
  const int n = grid.n;
  const int axis = grid.tag == GridTag::Stratified ? grid.strat_axis : 0;
  std::vector<double> layers(n);
  for (int t = 0; t < n; ++t) {
    Vec3i v{0, 0, 0};
    v[axis] = t;
    layers[t] = grid.eps_at(v.x, v.y, v.z);
  }
  return profile_key(n, axis, layers);
}

uint64_t conductor_signature(const DielectricGrid& grid) {
  uint64_t h = SplitMix64::mix(static_cast<uint64_t>(grid.n));
  if (!grid.has_mask()) return h;
  for (size_t i = 0; i < grid.conductor_mask.size(); ++i) {
    const int32_t id = grid.conductor_mask[i];
    if (id >= 0)
      h = SplitMix64::mix(h ^ ((static_cast<uint64_t>(i) << 20) |
                               static_cast<uint32_t>(id)));
  }
  return h;
}

DielectricGrid canonical_grid(const ProfileKey& key) {
  if (key.conductor_sig)
    throw std::invalid_argument(
        "canonical_grid: conductor masks cannot be rebuilt from a key");
  if (static_cast<int>(key.layers.size()) != key.n)
    throw std::invalid_argument("canonical_grid: malformed key");
  DielectricGrid g;
  g.n = key.n;
  g.cube = {{0, 0, 0}, key.n / 2.0};
  g.eps.resize(static_cast<size_t>(key.n) * key.n * key.n);
  for (int k = 0; k < key.n; ++k)
    for (int j = 0; j < key.n; ++j)
      for (int i = 0; i < key.n; ++i) {
        const Vec3i v{i, j, k};
        g.eps[g.index(i, j, k)] = key.layers[v[key.axis]];
      }
  classify_grid(g);
  return g;
}

std::shared_ptr<const DiscreteSGF> StratifiedSgfCache::find(
    const ProfileKey& key) const {
  std::shared_lock lock(mu_);
  const auto it = map_.find(key);
  if (it == map_.end()) return nullptr;
  touch(*it->second);
  return it->second->sgf;
}

std::shared_ptr<const DiscreteSGF> StratifiedSgfCache::get(
    const ProfileKey& key) {
  return get(key, [&key] { return canonical_grid(key); });
}

std::shared_ptr<const DiscreteSGF> StratifiedSgfCache::get(
    const ProfileKey& key, const std::function<DielectricGrid()>& provider) {
  {
    std::shared_lock lock(mu_);
    const auto it = map_.find(key);
    if (it != map_.end()) {
      ++hits_;
      touch(*it->second);
      return it->second->sgf;
    }
  }
  ++misses_;
  const DielectricGrid grid = provider();
  if (grid.tag == GridTag::General)
    throw std::invalid_argument(
        "cached SGFs require a uniform or stratified profile");
  auto sgf = std::make_shared<DiscreteSGF>(
      solve_sgf(assemble_system(grid), /*with_kernels=*/true));
  return store(key, std::move(sgf));
}

std::shared_ptr<const DiscreteSGF> StratifiedSgfCache::store(
    const ProfileKey& key, std::shared_ptr<DiscreteSGF> sgf) {
  std::unique_lock lock(mu_);
  const auto it = map_.find(key);
  if (it != map_.end()) {
    touch(*it->second);
    return it->second->sgf;  // lost the race; the first result wins
  }
  auto entry = std::make_shared<Entry>();
  entry->sgf = std::move(sgf);
  entry->key = key;
  touch(*entry);
  map_.emplace(key, entry);
  while (capacity_ > 0 && map_.size() > capacity_) {
    auto victim = map_.begin();
    for (auto jt = map_.begin(); jt != map_.end(); ++jt)
      if (jt->second->used.load() < victim->second->used.load()) victim = jt;
    map_.erase(victim);
  }
  return entry->sgf;
}

StratifiedSgfCache::Stats StratifiedSgfCache::stats() const {
  std::shared_lock lock(mu_);
  return {hits_.load(), misses_.load(), map_.size()};
}

void StratifiedSgfCache::clear() {
  std::unique_lock lock(mu_);
  map_.clear();
}

namespace {

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}
void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}
void put_f64(std::string& out, double v) {
  put_u64(out, std::bit_cast<uint64_t>(v));
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;

  void need(size_t k) const {
    if (pos + k > buf.size())
      throw std::runtime_error("SGF cache file is truncated");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos++]))
           << (8 * i);
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[pos++]))
           << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  uint8_t u8() {
    need(1);
    return static_cast<unsigned char>(buf[pos++]);
  }
};

}  // namespace

void StratifiedSgfCache::save(const std::string& path, int only_n) const {
  std::shared_lock lock(mu_);
  int n = only_n;
  size_t count = 0;
  for (const auto& [key, entry] : map_) {
    if (only_n > 0 && key.n != only_n) continue;
    if (n == 0) n = key.n;
    if (key.n != n)
      throw std::invalid_argument(
          "SGF cache files hold a single lattice size; clear between sizes");
    ++count;
  }

  std::string out;
  out.append("SGF1");
  put_u32(out, static_cast<uint32_t>(n));
  put_u64(out, count);
  for (const auto& [key, entry] : map_) {
    if (only_n > 0 && key.n != only_n) continue;
    const DiscreteSGF& sgf = *entry->sgf;
    put_u32(out, static_cast<uint32_t>(key.axis));
    out.push_back(key.expanded ? 1 : 0);
    out.push_back(key.conductor_sig ? 1 : 0);
    put_u64(out, key.conductor_sig.value_or(0));
    put_u32(out, static_cast<uint32_t>(key.layers.size()));
    for (double v : key.layers) put_f64(out, v);
    put_f64(out, sgf.pitch);
    put_u64(out, sgf.probs.size());
    for (double v : sgf.probs) put_f64(out, v);
    out.push_back(sgf.has_kernels() ? 1 : 0);
    if (sgf.has_kernels())
      for (const auto& kern : sgf.grad_kernels)
        for (double v : kern) put_f64(out, v);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("short write to " + path);
}

size_t StratifiedSgfCache::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());

  Reader r{buf};
  r.need(4);
  if (buf.compare(0, 4, "SGF1") != 0)
    throw std::runtime_error(path + " is not an SGF cache file");
  r.pos = 4;
  const int n = static_cast<int>(r.u32());
  if (n < 1 || n > 4096) throw std::runtime_error("SGF cache: bad lattice size");
  const uint64_t count = r.u64();
  const uint64_t panels = 6ull * n * n;

  size_t loaded = 0;
  for (uint64_t e = 0; e < count; ++e) {
    ProfileKey key;
    key.n = n;
    key.axis = static_cast<int>(r.u32());
    if (key.axis < 0 || key.axis > 2)
      throw std::runtime_error("SGF cache: bad axis");
    key.expanded = r.u8() != 0;
    const bool has_cond = r.u8() != 0;
    const uint64_t sig = r.u64();
    if (has_cond) key.conductor_sig = sig;
    const uint32_t nlayers = r.u32();
    if (nlayers != static_cast<uint32_t>(n))
      throw std::runtime_error("SGF cache: layer count mismatch");
    key.layers.resize(nlayers);
    for (double& v : key.layers) v = r.f64();

    auto sgf = std::make_shared<DiscreteSGF>();
    sgf->n = n;
    sgf->surface_panels = static_cast<int>(panels);
    sgf->pitch = r.f64();
    if (!(sgf->pitch > 0)) throw std::runtime_error("SGF cache: bad pitch");
    const uint64_t plen = r.u64();
    if (plen != panels) throw std::runtime_error("SGF cache: bad panel count");
    sgf->probs.resize(plen);
    double sum = 0, lo = 0;
    for (double& v : sgf->probs) {
      v = r.f64();
      sum += v;
      lo = std::min(lo, v);
    }
    if (std::fabs(sum - 1.0) > 1e-9 || lo < -1e-9)
      throw std::runtime_error("SGF cache: entry fails normalization");
    sgf->cdf.resize(plen);
    double acc = 0;
    for (uint64_t i = 0; i < plen; ++i) {
      acc += sgf->probs[i];
      sgf->cdf[i] = acc;
    }
    if (r.u8() != 0) {
      for (auto& kern : sgf->grad_kernels) {
        kern.resize(plen);
        double ksum = 0;
        for (double& v : kern) {
          v = r.f64();
          ksum += v;
        }
        if (std::fabs(ksum) > 1e-9)
          throw std::runtime_error("SGF cache: kernel fails zero-sum check");
      }
    }
    store(key, std::move(sgf));
    ++loaded;
  }
  if (r.pos != buf.size())
    throw std::runtime_error("SGF cache: trailing bytes");
  return loaded;
}

}  // namespace frwcap
