#include "ldcvae/rng.hpp"

namespace ldc {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng Rng::stream(std::uint64_t seed, std::string_view name) {
  // FNV-1a over the stream name, mixed into the seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t state = seed ^ h;
  return Rng(splitmix64(state));
}

double Rng::normal() { return normal_(engine_); }

double Rng::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

std::size_t Rng::index(std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

Tensor Rng::normal(std::size_t rows, std::size_t cols, double mean, double stddev) {
  Tensor t(Shape{rows, cols});
  for (auto& v : t.data()) v = mean + stddev * normal_(engine_);
  return t;
}

}  // namespace ldc
