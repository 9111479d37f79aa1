#pragma once

#include "ldcvae/tensor.hpp"

namespace ldc {

// Returned by median_bandwidth when every pairwise distance is zero.
inline constexpr double kBandwidthFloor = 1e-6;

/// K(a, b) = exp(-|a - b|^2 / h).
class RbfKernel {
 public:
  explicit RbfKernel(double bandwidth);

  double bandwidth() const noexcept { return h_; }
  double operator()(std::span<const double> a, std::span<const double> b) const;

 private:
  double h_;
};

struct KernelMatrix {
  Tensor values;             // [n x n], values(i,j) = K(z_i, z_j)
  Tensor grads_first_arg;    // [n x n x d], (i,j,:) = grad wrt z_i of K(z_i, z_j)
};

/// h = med^2 / ln n, med = median of the n(n-1)/2 pairwise Euclidean
/// distances (mean of the two central values for an even count).
double median_bandwidth(const Tensor& points);

double median_pairwise_distance(const Tensor& points);

KernelMatrix kernel_matrix(const Tensor& points, double h);

double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace ldc
