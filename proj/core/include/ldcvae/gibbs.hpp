#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "ldcvae/models.hpp"

namespace ldc {

inline constexpr double kSigma2Floor = 1e-8;

// What the batch variance is taken over: residual norms |x - D(z)| or their squares.
enum class Sigma2Mode { norm, sqnorm };

Sigma2Mode parse_sigma2_mode(std::string_view s);
std::string_view to_string(Sigma2Mode m);

struct Sigma2Estimate {
  double value;
  bool floored;
};

/// Population variance over the batch of per-sample residual norms, floored
/// at kSigma2Floor. Plain doubles in and out: never part of any tape.
Sigma2Estimate estimate_sigma2(const Tensor& x, const Tensor& recon, Sigma2Mode mode = Sigma2Mode::norm);

// pairing[i] is the x row that latent row i is scored against.
using Pairing = std::vector<std::size_t>;
Pairing identity_pairing(std::size_t n);

struct GibbsEvaluation {
  Tensor log_density;  // [n]
  Tensor score;        // [n x d]
};

/// Unnormalized Gibbs target log p(z | x) = -|x - D(z)|^2 / sigma2 + const.
/// Holds a reference to the decoder; the decoder's parameters are treated as
/// constants here and never receive gradient.
class GibbsPosterior {
 public:
  GibbsPosterior(const DecoderNet& decoder, Tensor x, double sigma2);

  double sigma2() const noexcept { return sigma2_; }
  const Tensor& data() const noexcept { return x_; }

  Tensor log_density_unnorm(const Tensor& z, const Pairing& pairing) const;
  // Row i = grad_{z_i} log p(z_i | x_pair(i)), by backprop through the decoder.
  Tensor score(const Tensor& z, const Pairing& pairing) const;
  GibbsEvaluation evaluate(const Tensor& z, const Pairing& pairing) const;

 private:
  Tensor paired_rows(const Tensor& z, const Pairing& pairing) const;

  const DecoderNet* decoder_;
  Tensor x_;
  double sigma2_;
};

}  // namespace ldc
