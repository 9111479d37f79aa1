#include "ldcvae/svgd.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "ldcvae/errors.hpp"
#include "ldcvae/kernel.hpp"

namespace ldc {

Tensor stein_direction(const Tensor& particles, const Tensor& scores, const Tensor& eval_points, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ContractError("stein_direction: bandwidth must be positive");
  require_matrix(particles, "stein_direction");
  require_matrix(eval_points, "stein_direction");
  require_same_shape(particles, scores, "stein_direction: scores");
  if (particles.cols() != eval_points.cols()) {
    throw DimensionError("stein_direction: particles are " + std::to_string(particles.cols()) +
                         "-dimensional, eval points " + std::to_string(eval_points.cols()) + "-dimensional");
  }
  const std::size_t n = particles.rows(), m = eval_points.rows(), d = particles.cols();
  if (n == 0) throw ContractError("stein_direction: empty particle set");
  Tensor out(Shape{m, d});
  for (std::size_t j = 0; j < m; ++j) {
    auto e = eval_points.row(j);
    auto acc = out.row(j);
    for (std::size_t i = 0; i < n; ++i) {
      auto z = particles.row(i);
      auto s = scores.row(i);
      const double k = std::exp(-squared_distance(z, e) / h);
      const double gscale = -(2.0 / h) * k;
      for (std::size_t c = 0; c < d; ++c) acc[c] += k * s[c] + gscale * (z[c] - e[c]);
    }
    for (auto& v : acc) v /= static_cast<double>(n);
  }
  if (!out.all_finite()) throw NonFiniteError("stein_direction: non-finite direction");
  return out;
}

Tensor stein_direction(const Tensor& particles, const Tensor& eval_points, const ScoreFunction& score, double h) {
  Tensor s = score(particles);
  return stein_direction(particles, s, eval_points, h);
}

ParticleSet transport(ParticleSet particles, const ScoreFunction& score, std::size_t steps,
                      BandwidthPolicy policy, const TransportObserver& observer) {
  require_matrix(particles.positions, "transport");
  if (particles.positions.rows() == 0) throw ContractError("transport: empty particle set");
  Tensor& pos = particles.positions;
  for (std::size_t step = 1; step <= steps; ++step) {
    double h = policy.value;
    if (policy.kind == BandwidthPolicy::Kind::median_per_step) {
      h = pos.rows() >= 2 ? median_bandwidth(pos) : 1.0;
    }
    Tensor dir;
    try {
      dir = stein_direction(pos, pos, score, h);
    } catch (const NonFiniteError& e) {
      throw NonFiniteError("transport: step " + std::to_string(step) + ": " + e.what());
    }
    for (std::size_t k = 0; k < pos.size(); ++k) pos[k] += particles.step_size * dir[k];
    if (!pos.all_finite()) throw NonFiniteError("transport: non-finite positions at step " + std::to_string(step));
    if (observer) observer(step, pos);
  }
  return particles;
}

double kernel_stein_discrepancy(const Tensor& points, const Tensor& scores, double h) {
  require_same_shape(points, scores, "kernel_stein_discrepancy");
  const std::size_t n = points.rows(), d = points.cols();
  if (n < 2) throw ContractError("kernel_stein_discrepancy: needs at least 2 points");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      auto x = points.row(i);
      auto y = points.row(j);
      auto sx = scores.row(i);
      auto sy = scores.row(j);
      const double r2 = squared_distance(x, y);
      const double k = std::exp(-r2 / h);
      double ss = 0.0, sx_dy = 0.0, sy_dx = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = x[c] - y[c];
        ss += sx[c] * sy[c];
        // grad_y k = (2/h) diff k, grad_x k = -(2/h) diff k
        sx_dy += sx[c] * (2.0 / h) * diff * k;
        sy_dx += sy[c] * (-(2.0 / h)) * diff * k;
      }
      const double trace = k * (2.0 * static_cast<double>(d) / h - 4.0 * r2 / (h * h));
      total += ss * k + sx_dy + sy_dx + trace;
    }
  }
  return total / static_cast<double>(n * (n - 1));
}

void write_trajectory_header(std::ostream& os, std::size_t dims) {
  os << "step,particle_index";
  for (std::size_t c = 0; c < dims; ++c) os << ",x" << c;
  os << '\n';
}

void write_trajectory_rows(std::ostream& os, std::size_t step, const Tensor& positions) {
  const auto old_prec = os.precision(17);
  for (std::size_t i = 0; i < positions.rows(); ++i) {
    os << step << ',' << i;
    for (double v : positions.row(i)) os << ',' << v;
    os << '\n';
  }
  os.precision(old_prec);
}

}  // namespace ldc
