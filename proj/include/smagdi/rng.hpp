#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace smagdi {

// SplitMix64 stream. The output sequence is part of the artifact contract:
// dataset split membership and parameter initialization must not drift across
// compilers or releases, so no std::<distribution> is used anywhere.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [0, bound). Modulo-bounded: the tiny bias is irrelevant here
  // and the mapping is frozen.
  std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }

  // Standard normal via Box-Muller (cached spare).
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    do {
      u = next_double();
    } while (u <= 0.0);
    const double v = next_double();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double theta = 6.283185307179586476925286766559 * v;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Derive an independent stream for a labeled sub-task (e.g. per epoch).
  SplitMix64 fork(std::uint64_t label) const {
    return SplitMix64(state_ ^ (0x9e3779b97f4a7c15ULL * (label + 1)));
  }

 private:
  std::uint64_t state_;
  bool has_spare_{false};
  double spare_{0.0};
};

// Fisher-Yates driven by SplitMix64. Frozen shuffle for reproducible splits.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.next_below(i)]);
  }
}

}  // namespace smagdi
