#include "ergocover/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <thread>

namespace ergocover {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t mix_keys(std::initializer_list<std::uint64_t> keys) {
  std::uint64_t state = 0x6a09e667f3bcc908ull;
  for (std::uint64_t k : keys) {
    state ^= k + 0x9e3779b97f4a7c15ull + (state << 6) + (state >> 2);
    (void)splitmix64(state);
  }
  return splitmix64(state);
}

double Rng::uniform() {
  // 53-bit mantissa from the high bits.
  return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  // Box-Muller; u1 nudged away from 0 so the log stays finite.
  double u1 = uniform();
  double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw Error("Rng::uniform_index: n must be positive");
  // Rejection-free modulo is fine here; n is tiny relative to 2^64.
  return splitmix64(state_) % n;
}

std::uint64_t fnv1a(const void* data, std::size_t nbytes, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < nbytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int n_jobs) {
  if (n == 0) return;
  unsigned int jobs = n_jobs <= 0 ? std::thread::hardware_concurrency()
                                  : static_cast<unsigned int>(n_jobs);
  if (jobs == 0) jobs = 1;
  jobs = static_cast<unsigned int>(
      std::min<std::size_t>(jobs, n));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (unsigned int w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w]() {
      // Static contiguous split: indices [lo, hi).
      const std::size_t lo = n * w / jobs;
      const std::size_t hi = n * (w + 1) / jobs;
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string sci3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2e", v);
  return buf;
}

std::string full_precision(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace ergocover
