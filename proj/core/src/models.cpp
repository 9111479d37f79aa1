#include "ldcvae/models.hpp"

#include "ldcvae/errors.hpp"

namespace ldc {

namespace {

std::vector<std::size_t> with_output(std::vector<std::size_t> widths, std::size_t out) {
  widths.push_back(out);
  return widths;
}

std::size_t mlp_count(std::size_t in, const std::vector<std::size_t>& widths) {
  std::size_t n = 0, prev = in;
  for (auto w : widths) {
    n += (prev + 1) * w;
    prev = w;
  }
  return n;
}

std::size_t last_width(std::size_t in, const std::vector<std::size_t>& widths) {
  return widths.empty() ? in : widths.back();
}

template <class... Nets>
std::vector<Parameter*> gather(Nets&... nets) {
  std::vector<Parameter*> out;
  (nets.collect(out), ...);
  return out;
}

template <class... Nets>
std::vector<const Parameter*> gather_const(const Nets&... nets) {
  std::vector<const Parameter*> out;
  (nets.collect(out), ...);
  return out;
}

template <class A, class B>
void append(std::vector<A>& dst, const std::vector<B>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

EncoderNet::EncoderNet(const Architecture& arch, Rng& rng)
    : data_path_("encoder.data", arch.data_dim, arch.enc_data_hidden, arch.activation, arch.activation, rng),
      noise_path_("encoder.noise", arch.noise_dim, arch.enc_noise_hidden, arch.activation, arch.activation, rng),
      combiner_("encoder.combine",
                last_width(arch.data_dim, arch.enc_data_hidden) + last_width(arch.noise_dim, arch.enc_noise_hidden),
                with_output(arch.enc_comb_hidden, arch.latent_dim), arch.activation, Activation::identity, rng) {}

Var EncoderNet::forward(Tape& tape, Var x, Var eps, ParamMode mode) const {
  Var hx = data_path_.forward(tape, x, mode);
  Var hn = noise_path_.forward(tape, eps, mode);
  return combiner_.forward(tape, concat_cols(hx, hn), mode);
}

std::vector<Parameter*> EncoderNet::parameters() { return gather(data_path_, noise_path_, combiner_); }
std::vector<const Parameter*> EncoderNet::parameters() const {
  return gather_const(data_path_, noise_path_, combiner_);
}
std::size_t EncoderNet::parameter_count() const {
  return data_path_.parameter_count() + noise_path_.parameter_count() + combiner_.parameter_count();
}

DecoderNet::DecoderNet(const Architecture& arch, Rng& rng)
    : body_("decoder", arch.latent_dim, with_output(arch.dec_hidden, arch.data_dim), arch.activation,
            arch.decoder_output, rng) {}

Var DecoderNet::forward(Tape& tape, Var z, ParamMode mode) const { return body_.forward(tape, z, mode); }
std::vector<Parameter*> DecoderNet::parameters() { return gather(body_); }
std::vector<const Parameter*> DecoderNet::parameters() const { return gather_const(body_); }

SamplerNet::SamplerNet(const Architecture& arch, Rng& rng)
    : body_("sampler", arch.sampler_noise_dim, with_output(arch.sampler_hidden, arch.latent_dim), arch.activation,
            Activation::identity, rng) {}

Var SamplerNet::forward(Tape& tape, Var eps, ParamMode mode) const { return body_.forward(tape, eps, mode); }
std::vector<Parameter*> SamplerNet::parameters() { return gather(body_); }
std::vector<const Parameter*> SamplerNet::parameters() const { return gather_const(body_); }

GaussianEncoder::GaussianEncoder(const Architecture& arch, Rng& rng)
    : body_("vae_encoder", arch.data_dim, with_output(arch.vae_enc_hidden, 2 * arch.latent_dim), arch.activation,
            Activation::identity, rng),
      latent_dim_(arch.latent_dim) {}

std::pair<Var, Var> GaussianEncoder::forward(Tape& tape, Var x, ParamMode mode) const {
  Var out = body_.forward(tape, x, mode);
  return {slice_cols(out, 0, latent_dim_), slice_cols(out, latent_dim_, 2 * latent_dim_)};
}

std::vector<Parameter*> GaussianEncoder::parameters() { return gather(body_); }
std::vector<const Parameter*> GaussianEncoder::parameters() const { return gather_const(body_); }

LdcModel::LdcModel(const Architecture& arch, Rng& rng)
    : encoder(arch, rng), decoder(arch, rng), sampler(arch, rng) {}

std::vector<Parameter*> LdcModel::parameters() {
  auto out = encoder.parameters();
  append(out, decoder.parameters());
  append(out, sampler.parameters());
  return out;
}

std::vector<const Parameter*> LdcModel::parameters() const {
  auto out = encoder.parameters();
  append(out, decoder.parameters());
  append(out, sampler.parameters());
  return out;
}

VaeModel::VaeModel(const Architecture& arch, Rng& rng) : encoder(arch, rng), decoder(arch, rng) {}

std::vector<Parameter*> VaeModel::parameters() {
  auto out = encoder.parameters();
  append(out, decoder.parameters());
  return out;
}

std::vector<const Parameter*> VaeModel::parameters() const {
  auto out = encoder.parameters();
  append(out, decoder.parameters());
  return out;
}

std::size_t expected_parameter_count_ldc(const Architecture& a) {
  const std::size_t merged = last_width(a.data_dim, a.enc_data_hidden) + last_width(a.noise_dim, a.enc_noise_hidden);
  return mlp_count(a.data_dim, a.enc_data_hidden) + mlp_count(a.noise_dim, a.enc_noise_hidden) +
         mlp_count(merged, with_output(a.enc_comb_hidden, a.latent_dim)) +
         mlp_count(a.latent_dim, with_output(a.dec_hidden, a.data_dim)) +
         mlp_count(a.sampler_noise_dim, with_output(a.sampler_hidden, a.latent_dim));
}

std::size_t expected_parameter_count_vae(const Architecture& a) {
  return mlp_count(a.data_dim, with_output(a.vae_enc_hidden, 2 * a.latent_dim)) +
         mlp_count(a.latent_dim, with_output(a.dec_hidden, a.data_dim));
}

Tensor encode(const EncoderNet& enc, const Tensor& x, const Tensor& eps) {
  Tape tape;
  return enc.forward(tape, tape.constant(x), tape.constant(eps), ParamMode::frozen).value();
}

Tensor decode(const DecoderNet& dec, const Tensor& z) {
  Tape tape;
  return dec.forward(tape, tape.constant(z), ParamMode::frozen).value();
}

Tensor sample_latent(const SamplerNet& sampler, const Tensor& eps) {
  Tape tape;
  return sampler.forward(tape, tape.constant(eps), ParamMode::frozen).value();
}

Var gaussian_kl(Var mu, Var log_var) {
  require_same_shape(mu.value(), log_var.value(), "gaussian_kl");
  Var inner = sub(add(square(mu), exp(log_var)), add_scalar(log_var, 1.0));
  return scale(sum_rows(inner), 0.5);
}

Tensor gaussian_kl(const Tensor& mu, const Tensor& log_var) {
  Tape tape;
  return gaussian_kl(tape.constant(mu), tape.constant(log_var)).value();
}

Var reparameterize(Var mu, Var log_var, Var eps) {
  return add(mu, mul(exp(scale(log_var, 0.5)), eps));
}

Tensor reparameterize(const Tensor& mu, const Tensor& log_var, const Tensor& eps) {
  Tape tape;
  return reparameterize(tape.constant(mu), tape.constant(log_var), tape.constant(eps)).value();
}

}  // namespace ldc
