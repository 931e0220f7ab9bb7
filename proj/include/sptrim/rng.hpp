#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace sptrim {

// All randomness flows through this wrapper. Distributions are hand-rolled
// on top of mt19937_64 so seeded runs produce identical streams on every
// standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + unit() * (hi - lo); }

  // Standard normal via Box-Muller (no cached spare).
  double normal();

  // Uniform index in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }

  // Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  std::string state() const;
  void restore(const std::string& s);

 private:
  std::mt19937_64 gen_;
};

}  // namespace sptrim
