#include "ldcvae/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ldcvae/errors.hpp"

namespace ldc {

namespace {

void require_positive_bandwidth(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw ContractError("kernel: bandwidth must be positive and finite, got " + std::to_string(h));
  }
}

}  // namespace

RbfKernel::RbfKernel(double bandwidth) : h_(bandwidth) { require_positive_bandwidth(h_); }

double RbfKernel::operator()(std::span<const double> a, std::span<const double> b) const {
  return std::exp(-squared_distance(a, b) / h_);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("squared_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

double median_pairwise_distance(const Tensor& points) {
  require_matrix(points, "median_bandwidth");
  const std::size_t n = points.rows();
  if (n < 2) throw ContractError("median_bandwidth: needs at least 2 points, got " + std::to_string(n));
  std::vector<double> dist;
  dist.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) dist.push_back(std::sqrt(squared_distance(points.row(i), points.row(j))));
  }
  const std::size_t m = dist.size();
  auto mid = dist.begin() + static_cast<std::ptrdiff_t>(m / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  const double upper = *mid;
  if (m % 2 == 1) return upper;
  const double lower = *std::max_element(dist.begin(), mid);
  return 0.5 * (lower + upper);
}

double median_bandwidth(const Tensor& points) {
  const double med = median_pairwise_distance(points);
  if (med == 0.0) return kBandwidthFloor;
  const double h = med * med / std::log(static_cast<double>(points.rows()));
  return std::max(h, kBandwidthFloor);
}

KernelMatrix kernel_matrix(const Tensor& points, double h) {
  require_positive_bandwidth(h);
  require_matrix(points, "kernel_matrix");
  const std::size_t n = points.rows(), d = points.cols();
  KernelMatrix km{Tensor(Shape{n, n}), Tensor(Shape{n, n, d})};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double k = std::exp(-squared_distance(points.row(i), points.row(j)) / h);
      km.values(i, j) = k;
      double* g = km.grads_first_arg.data().data() + (i * n + j) * d;
      for (std::size_t c = 0; c < d; ++c) g[c] = -(2.0 / h) * (points(i, c) - points(j, c)) * k;
    }
  }
  return km;
}

}  // namespace ldc
