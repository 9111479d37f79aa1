#include "ldcvae/gibbs.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "ldcvae/errors.hpp"

namespace ldc {

Sigma2Mode parse_sigma2_mode(std::string_view s) {
  if (s == "norm") return Sigma2Mode::norm;
  if (s == "sqnorm") return Sigma2Mode::sqnorm;
  throw ConfigError("unknown sigma2_mode '" + std::string(s) + "' (expected norm|sqnorm)");
}

std::string_view to_string(Sigma2Mode m) { return m == Sigma2Mode::norm ? "norm" : "sqnorm"; }

Sigma2Estimate estimate_sigma2(const Tensor& x, const Tensor& recon, Sigma2Mode mode) {
  require_matrix(x, "estimate_sigma2");
  require_same_shape(x, recon, "estimate_sigma2");
  const std::size_t batch = x.rows();
  if (batch < 2) throw ContractError("estimate_sigma2: batch of " + std::to_string(batch) + " < 2");
  std::vector<double> r(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    double sq = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double d = x(b, c) - recon(b, c);
      sq += d * d;
    }
    r[b] = mode == Sigma2Mode::norm ? std::sqrt(sq) : sq;
  }
  const double n = static_cast<double>(batch);
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / n;
  double var = 0.0;
  for (double v : r) var += (v - mean) * (v - mean);
  var /= n;
  if (var < kSigma2Floor) return {kSigma2Floor, true};
  return {var, false};
}

Pairing identity_pairing(std::size_t n) {
  Pairing p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  return p;
}

GibbsPosterior::GibbsPosterior(const DecoderNet& decoder, Tensor x, double sigma2)
    : decoder_(&decoder), x_(std::move(x)), sigma2_(sigma2) {
  require_matrix(x_, "GibbsPosterior");
  if (!(sigma2_ > 0.0)) throw ContractError("GibbsPosterior: sigma2 must be positive");
  if (x_.cols() != decoder.data_dim()) throw DimensionError("GibbsPosterior: data width does not match decoder");
}

Tensor GibbsPosterior::paired_rows(const Tensor& z, const Pairing& pairing) const {
  require_matrix(z, "GibbsPosterior");
  if (pairing.size() != z.rows()) {
    throw ContractError("GibbsPosterior: " + std::to_string(z.rows()) + " latent rows but " +
                        std::to_string(pairing.size()) + " pairings");
  }
  for (auto p : pairing) {
    if (p >= x_.rows()) throw ContractError("GibbsPosterior: latent row paired with missing data row");
  }
  return x_.rows_at(pairing);
}

GibbsEvaluation GibbsPosterior::evaluate(const Tensor& z, const Pairing& pairing) const {
  Tensor xp = paired_rows(z, pairing);
  Tape tape;
  Var zv = tape.input(z);
  Var recon = decoder_->forward(tape, zv, ParamMode::frozen);
  Var logp = scale(mse(tape.constant(std::move(xp)), recon, Reduction::sum_per_row), -1.0 / sigma2_);
  GibbsEvaluation out{logp.value(), Tensor{}};
  // Row i of log p depends only on z_i, so one backward of the sum yields every row's score.
  tape.backward(sum(logp));
  out.score = tape.grad(zv);
  return out;
}

Tensor GibbsPosterior::log_density_unnorm(const Tensor& z, const Pairing& pairing) const {
  Tensor xp = paired_rows(z, pairing);
  Tape tape;
  Var recon = decoder_->forward(tape, tape.constant(z), ParamMode::frozen);
  return scale(mse(tape.constant(std::move(xp)), recon, Reduction::sum_per_row), -1.0 / sigma2_).value();
}

Tensor GibbsPosterior::score(const Tensor& z, const Pairing& pairing) const { return evaluate(z, pairing).score; }

}  // namespace ldc
