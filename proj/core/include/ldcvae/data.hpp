#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ldcvae/rng.hpp"
#include "ldcvae/tensor.hpp"

namespace ldc::data {

struct Dataset {
  std::string name;
  Tensor samples;             // [N x D], values in [0, 1]
  std::vector<int> labels;    // empty or length N
  std::vector<std::size_t> image_shape;  // e.g. {28, 28} for IDX images, empty otherwise

  std::size_t size() const { return samples.rows(); }
  std::size_t dim() const { return samples.cols(); }
  Dataset head(std::size_t n) const;
};

/// Reads an IDX image file (magic 0x00000803) and optional label file
/// (0x00000801). Pixels are scaled by 1/255.
Dataset load_idx(const std::filesystem::path& images, const std::optional<std::filesystem::path>& labels = {});

// Inverse of load_idx: values are mapped back to bytes with round(v * 255).
void write_idx(const Dataset& ds, const std::filesystem::path& images,
               const std::optional<std::filesystem::path>& labels = {});

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

enum class SynthKind { two_moons, gaussian_grid };
SynthKind parse_synth_kind(std::string_view s);

struct SynthSpec {
  SynthKind kind = SynthKind::gaussian_grid;
  std::size_t grid = 3;          // k for a k x k grid
  double component_std = 0.1;    // in lattice units (spacing 1)
  double moon_noise = 0.1;
};

/// Deterministic 2-D toy data in [0, 1]^2. The grid maps lattice point a to
/// (a + 0.5) / k, so component means sit at the cell centres of [0, 1]^2.
Dataset synth_2d(const SynthSpec& spec, std::size_t n, std::uint64_t seed);

// Lattice means of the grid components after rescaling, row-major over (ix, iy).
std::vector<std::pair<double, double>> grid_means(std::size_t k);

void write_csv(std::ostream& os, const Dataset& ds);

/// Seeded shuffled batches. Every epoch visits each index exactly once; a
/// trailing batch with fewer than two samples is dropped.
class BatchIterator {
 public:
  BatchIterator(std::size_t n, std::size_t batch_size, std::uint64_t seed);

  void start_epoch();
  // Next batch of indices, or empty when the epoch is exhausted.
  std::vector<std::size_t> next();
  std::size_t batches_per_epoch() const;
  const std::vector<std::size_t>& permutation() const { return perm_; }

 private:
  std::size_t n_;
  std::size_t batch_size_;
  Rng rng_;
  std::vector<std::size_t> perm_;
  std::size_t cursor_ = 0;
};

}  // namespace ldc::data
