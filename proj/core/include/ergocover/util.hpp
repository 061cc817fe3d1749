#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ergocover {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// splitmix64 step; used to derive independent RNG streams from (seed, i, t)
/// tuples without any ordering dependence between draws.
std::uint64_t splitmix64(std::uint64_t& state);

/// Mixes an arbitrary list of 64-bit keys into one stream seed.
std::uint64_t mix_keys(std::initializer_list<std::uint64_t> keys);

/// Counter-based deterministic RNG. Identical output for identical seeds on
/// every platform; no dependence on std::<distribution> internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

 private:
  std::uint64_t state_;
};

/// FNV-1a over raw bytes; used for cache keys and determinism checks.
std::uint64_t fnv1a(const void* data, std::size_t nbytes,
                    std::uint64_t seed = 1469598103934665603ull);

/// Runs fn(i) for i in [0, n) on up to n_jobs threads.  Each index writes
/// only its own outputs, so results do not depend on the schedule.
/// n_jobs <= 1 runs inline.  n_jobs == 0 uses hardware_concurrency().
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int n_jobs);

/// Formats a double in scientific notation with 3 significant digits
/// (table presentation, e.g. "1.51e-01").
std::string sci3(double v);

/// Full-precision round-trippable formatting ("%.17g").
std::string full_precision(double v);

}  // namespace ergocover
