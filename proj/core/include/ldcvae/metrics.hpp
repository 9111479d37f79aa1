#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ldcvae/tensor.hpp"

namespace ldc::metrics {

struct TwoSampleResult {
  double statistic = 0.0;
  std::size_t n = 0;
  std::size_t m = 0;
  double bandwidth = 0.0;  // RBF bandwidth; 0 for statistics without one
};

/// Unbiased MMD^2 with K(a, b) = exp(-|a - b|^2 / h):
///   1/(n(n-1)) sum_{i!=j} K(a_i,a_j) + 1/(m(m-1)) sum_{i!=j} K(b_i,b_j) - 2/(nm) sum K(a_i,b_j)
TwoSampleResult mmd2_unbiased(const Tensor& a, const Tensor& b, double h);

// Same, with h from the median heuristic over the pooled sample.
TwoSampleResult mmd2_unbiased(const Tensor& a, const Tensor& b);

double pooled_median_bandwidth(const Tensor& a, const Tensor& b);

/// V-statistic energy distance 2 E|A-B| - E|A-A'| - E|B-B'|; zero for identical samples.
TwoSampleResult energy_distance(const Tensor& a, const Tensor& b);

struct PcaResult {
  Tensor projection;                      // [n x k]
  std::vector<double> explained_variance;  // length k, descending
  Tensor components;                      // [k x d], unit rows
  bool degenerate = false;                // zero-variance input
};

/// Centers the data and projects onto the top-k principal directions found
/// by power iteration with deflation. Each component is signed so that its
/// largest-magnitude coordinate is positive.
PcaResult pca_project(const Tensor& points, std::size_t out_dims = 2);

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;  // row-major, values in [0, 1]
};

inline constexpr double kGridSeparator = 0.5;

/// Tiles k square images of side `side` row-major into a rows x cols grid
/// with 1-pixel separators of value 0.5 between tiles.
GrayImage image_grid(const Tensor& images, std::size_t rows, std::size_t cols, std::size_t side);

// Binary PGM, "P5\n<w> <h>\n255\n" then w*h bytes.
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
std::string encode_pgm(const GrayImage& img);

struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  unsigned maxval = 0;
  std::vector<std::uint8_t> pixels;
};
// Strict P5 reader (comments allowed in the header, maxval < 256).
PgmImage parse_pgm(const std::string& bytes);

// CSV "x,y,source" rows for a 2-D projection tagged per row.
void write_projection_csv(std::ostream& os, const Tensor& projection, const std::vector<std::string>& tags);

}  // namespace ldc::metrics
