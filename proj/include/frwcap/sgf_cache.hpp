#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "frwcap/geometry.hpp"
#include "frwcap/sgf.hpp"

namespace frwcap {

// x rounded to the given number of significant decimal digits. All key
// construction funnels through this so equal profiles map to equal keys.
double round_sig(double x, int digits);

// Identity of a solved transition-cube SGF: lattice size, stratification
// axis and the per-slice permittivities rounded to 6 significant digits.
// Solves are canonical (unit pitch, built from the rounded layers), so equal
// keys mean bit-identical systems. Uniform profiles normalize to axis 0.
struct ProfileKey {
  int n = 0;
  int axis = 0;
  std::vector<double> layers;
  bool expanded = false;
  std::optional<uint64_t> conductor_sig;

  bool operator==(const ProfileKey&) const = default;
};

struct ProfileKeyHash {
  size_t operator()(const ProfileKey& k) const;
};

ProfileKey profile_key(int n, int axis, const std::vector<double>& layers,
                       bool expanded = false,
                       std::optional<uint64_t> conductor_sig = {});
ProfileKey profile_key(const StratifiedProfile& profile, int n);
// from a materialized Uniform or Stratified grid; throws on General
ProfileKey profile_key(const DielectricGrid& grid);

// order-sensitive hash of a grid's conductor mask, for keys of masked grids
uint64_t conductor_signature(const DielectricGrid& grid);

// Unit-pitch grid reconstructed from the key's layers. Throws when the key
// carries a conductor signature (masks are not recoverable from a hash).
DielectricGrid canonical_grid(const ProfileKey& key);

// Concurrent memo table of stratified-profile SGFs. Hits take a shared lock
// and never wait on a computation; concurrent misses on the same key may
// both solve, in which case the first stored result wins and is returned to
// everyone. capacity 0 means unbounded, otherwise least-recently-used
// entries are evicted on insert.
class StratifiedSgfCache {
 public:
  explicit StratifiedSgfCache(size_t capacity = 0) : capacity_(capacity) {}

  // cached SGF for the key, solving the canonical grid on a miss
  std::shared_ptr<const DiscreteSGF> get(const ProfileKey& key);

  // as above but with a caller-supplied grid for the miss path; the grid
  // must be Uniform or Stratified (throws std::invalid_argument on General)
  std::shared_ptr<const DiscreteSGF> get(
      const ProfileKey& key, const std::function<DielectricGrid()>& provider);

  // lookup without computing; null on miss (does not count toward stats)
  std::shared_ptr<const DiscreteSGF> find(const ProfileKey& key) const;

  struct Stats {
    uint64_t hits = 0;
    uint64_t misses = 0;
    size_t size = 0;
  };
  Stats stats() const;
  void clear();

  // Versioned little-endian snapshot ("SGF1"): lattice size, entry count,
  // then per entry the key, pitch, probs and kernels as 64-bit floats.
  // Loading validates structure and probability normalization and throws
  // std::runtime_error on any violation; entries join the cache as hits-
  // to-be. All entries in one file share one lattice size.
  // only_n > 0 writes just that lattice size; 0 requires a homogeneous map
  void save(const std::string& path, int only_n = 0) const;
  size_t load(const std::string& path);

 private:
  struct Entry {
    std::shared_ptr<const DiscreteSGF> sgf;
    std::atomic<uint64_t> used{0};
    ProfileKey key;
  };

  std::shared_ptr<const DiscreteSGF> store(const ProfileKey& key,
                                           std::shared_ptr<DiscreteSGF> sgf);
  void touch(Entry& e) const { e.used.store(++clock_); }

  size_t capacity_;
  mutable std::shared_mutex mu_;
  std::unordered_map<ProfileKey, std::shared_ptr<Entry>, ProfileKeyHash> map_;
  mutable std::atomic<uint64_t> clock_{0};
  mutable std::atomic<uint64_t> hits_{0};
  mutable std::atomic<uint64_t> misses_{0};
};

}  // namespace frwcap
