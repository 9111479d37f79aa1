#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>

#include "ldcvae/tensor.hpp"

namespace ldc {

// Maps points [n x d] to scores [n x d], row i = grad log p at point i.
using ScoreFunction = std::function<Tensor(const Tensor&)>;

/// Kernelized Stein direction evaluated at `eval_points`:
///   out_j = 1/n sum_i [ K(z_i, e_j) s_i + grad_{z_i} K(z_i, e_j) ]
/// with K the RBF kernel of bandwidth h and s_i = scores row i. Each output row
/// is summed over i in index order, so results do not depend on scheduling.
Tensor stein_direction(const Tensor& particles, const Tensor& scores, const Tensor& eval_points, double h);
Tensor stein_direction(const Tensor& particles, const Tensor& eval_points, const ScoreFunction& score, double h);

struct BandwidthPolicy {
  enum class Kind { fixed, median_per_step } kind = Kind::median_per_step;
  double value = 1.0;  // used when kind == fixed

  static BandwidthPolicy fixed(double h) { return {Kind::fixed, h}; }
  static BandwidthPolicy median() { return {Kind::median_per_step, 0.0}; }
};

struct ParticleSet {
  Tensor positions;  // [n x d]
  double step_size = 1e-2;
};

// Called after every step with the step index (1-based) and new positions.
using TransportObserver = std::function<void(std::size_t step, const Tensor& positions)>;

/// positions <- positions + eps * stein_direction(positions, positions), `steps` times.
/// With a single particle the median heuristic is undefined; the kernel then
/// contributes K = 1 and a zero gradient, whatever h is used.
ParticleSet transport(ParticleSet particles, const ScoreFunction& score, std::size_t steps,
                      BandwidthPolicy policy, const TransportObserver& observer = {});

/// Kernelized Stein discrepancy (U-statistic, RBF kernel) of a sample against
/// the target whose scores are given. Used to watch transport converge.
double kernel_stein_discrepancy(const Tensor& points, const Tensor& scores, double h);

// CSV rows "step,particle_index,x0,x1,...".
void write_trajectory_header(std::ostream& os, std::size_t dims);
void write_trajectory_rows(std::ostream& os, std::size_t step, const Tensor& positions);

}  // namespace ldc
