#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "ldcvae/tensor.hpp"

namespace ldc {

std::uint64_t splitmix64(std::uint64_t& state);

// Independent generator per named consumer, all derived from one run seed, so
// adding draws in one consumer never shifts another consumer's sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  static Rng stream(std::uint64_t seed, std::string_view name);

  std::mt19937_64& engine() { return engine_; }
  double normal();
  double uniform();
  std::size_t index(std::size_t n);
  Tensor normal(std::size_t rows, std::size_t cols, double mean = 0.0, double stddev = 1.0);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace ldc
