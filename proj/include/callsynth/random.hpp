#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace callsynth {

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;
std::string hex64(std::uint64_t v);

// Sub-stream seed so that parallel work units draw independently of scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) noexcept;

// The engine is specified by the standard; the distributions below are ours so
// that draws are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }
  double uniform01();                 // [0,1)
  std::size_t below(std::size_t n);   // uniform in [0,n), n > 0
  double normal(double mean, double sd);

 private:
  std::mt19937_64 eng_;
};

// k distinct indices from [0,n), in draw order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng);

}  // namespace callsynth
