#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ldcvae/nn.hpp"

namespace ldc {

/// Layer widths for every network. Hidden layers use `activation`; the data
/// and noise paths of the encoder end in it too, the combiner and sampler
/// end linear, and the decoder ends in `decoder_output`.
struct Architecture {
  std::size_t data_dim = 784;
  std::size_t latent_dim = 16;
  std::size_t noise_dim = 16;          // d_n, encoder noise input
  std::size_t sampler_noise_dim = 16;  // d_s, sampler-net noise input
  std::vector<std::size_t> enc_data_hidden{256};
  std::vector<std::size_t> enc_noise_hidden{64};
  std::vector<std::size_t> enc_comb_hidden{128};
  std::vector<std::size_t> dec_hidden{128, 256};
  std::vector<std::size_t> sampler_hidden{128, 128};
  std::vector<std::size_t> vae_enc_hidden{256, 128};
  Activation activation = Activation::relu;
  Activation decoder_output = Activation::sigmoid;
};

/// Noise-injected encoder z = E_c(concat(E_x(x), E_n(eps))). No
/// reparameterization: the output itself is the posterior sample.
class EncoderNet {
 public:
  EncoderNet() = default;
  EncoderNet(const Architecture& arch, Rng& rng);

  Var forward(Tape& tape, Var x, Var eps, ParamMode mode) const;
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;
  std::size_t latent_dim() const { return combiner_.out_features(); }
  std::size_t noise_dim() const { return noise_path_.in_features(); }

 private:
  Mlp data_path_;
  Mlp noise_path_;
  Mlp combiner_;
};

class DecoderNet {
 public:
  DecoderNet() = default;
  DecoderNet(const Architecture& arch, Rng& rng);

  Var forward(Tape& tape, Var z, ParamMode mode) const;
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const { return body_.parameter_count(); }
  std::size_t latent_dim() const { return body_.in_features(); }
  std::size_t data_dim() const { return body_.out_features(); }
  Mlp& body() { return body_; }

 private:
  Mlp body_;
};

class SamplerNet {
 public:
  SamplerNet() = default;
  SamplerNet(const Architecture& arch, Rng& rng);

  Var forward(Tape& tape, Var eps, ParamMode mode) const;
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const { return body_.parameter_count(); }
  std::size_t noise_dim() const { return body_.in_features(); }

 private:
  Mlp body_;
};

/// Baseline VAE encoder: x -> (mu, log sigma^2), each [B x d].
class GaussianEncoder {
 public:
  GaussianEncoder() = default;
  GaussianEncoder(const Architecture& arch, Rng& rng);

  std::pair<Var, Var> forward(Tape& tape, Var x, ParamMode mode) const;
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const { return body_.parameter_count(); }

 private:
  Mlp body_;
  std::size_t latent_dim_ = 0;
};

struct LdcModel {
  EncoderNet encoder;
  DecoderNet decoder;
  SamplerNet sampler;

  LdcModel() = default;
  LdcModel(const Architecture& arch, Rng& rng);
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

struct VaeModel {
  GaussianEncoder encoder;
  DecoderNet decoder;

  VaeModel() = default;
  VaeModel(const Architecture& arch, Rng& rng);
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

// Closed-form parameter counts derived from the architecture alone.
std::size_t expected_parameter_count_ldc(const Architecture& arch);
std::size_t expected_parameter_count_vae(const Architecture& arch);

// Tape-free forwards for evaluation.
Tensor encode(const EncoderNet& enc, const Tensor& x, const Tensor& eps);
Tensor decode(const DecoderNet& dec, const Tensor& z);
Tensor sample_latent(const SamplerNet& sampler, const Tensor& eps);

/// Per-sample KL( N(mu, exp(log_var)) || N(0, I) ) = 1/2 sum_j [mu^2 + s^2 - log s^2 - 1].
Var gaussian_kl(Var mu, Var log_var);
Tensor gaussian_kl(const Tensor& mu, const Tensor& log_var);

// z = mu + exp(log_var / 2) * eps
Var reparameterize(Var mu, Var log_var, Var eps);
Tensor reparameterize(const Tensor& mu, const Tensor& log_var, const Tensor& eps);

}  // namespace ldc
