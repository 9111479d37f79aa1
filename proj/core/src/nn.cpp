#include "ldcvae/nn.hpp"

#include <cmath>

#include "ldcvae/errors.hpp"

namespace ldc {

Linear::Linear(std::string name, std::size_t in, std::size_t out, Rng& rng)
    : weight_(name + ".weight", Tensor(Shape{in, out})), bias_(name + ".bias", Tensor(Shape{out})) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  for (auto& v : weight_.value.data()) v = (2.0 * rng.uniform() - 1.0) * limit;
}

Var Linear::forward(Tape& tape, Var x, ParamMode mode) const {
  if (mode == ParamMode::trainable) return affine(x, tape.parameter(weight_), tape.parameter(bias_));
  return affine(x, tape.frozen(weight_), tape.frozen(bias_));
}

void Linear::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

void Linear::collect(std::vector<const Parameter*>& out) const {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

Mlp::Mlp(std::string name, std::size_t in, const std::vector<std::size_t>& widths, Activation hidden_act,
         Activation output_act, Rng& rng)
    : in_(in), hidden_act_(hidden_act), output_act_(output_act) {
  std::size_t prev = in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (widths[i] == 0) throw ConfigError(name + ": layer width must be positive");
    layers_.emplace_back(name + "." + std::to_string(i), prev, widths[i], rng);
    prev = widths[i];
  }
}

Var Mlp::forward(Tape& tape, Var x, ParamMode mode) const {
  if (x.value().rank() != 2 || x.value().cols() != in_) {
    throw DimensionError("mlp: expected [B x " + std::to_string(in_) + "], got " + shape_str(x.shape()));
  }
  Var h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(tape, h, mode);
    const Activation act = (i + 1 == layers_.size()) ? output_act_ : hidden_act_;
    if (act != Activation::identity) h = activation(h, act);
  }
  return h;
}

void Mlp::collect(std::vector<Parameter*>& out) {
  for (auto& l : layers_) l.collect(out);
}

void Mlp::collect(std::vector<const Parameter*>& out) const {
  for (const auto& l : layers_) l.collect(out);
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += (l.in_features() + 1) * l.out_features();
  return n;
}

void Adam::step(const std::vector<Parameter*>& params) {
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.push_back(zeros_like(p->value));
      v_.push_back(zeros_like(p->value));
    }
  }
  if (m_.size() != params.size()) throw ContractError("adam: parameter group changed size between steps");
  for (const Parameter* p : params) {
    if (!p->grad_ready) throw ContractError("adam: parameter '" + p->name + "' has no populated gradient");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    require_same_shape(m, p.value, "adam");
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p.value[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
    if (!p.value.all_finite()) throw NonFiniteError("adam: update made '" + p.name + "' non-finite");
    p.zero_grad();
  }
}

}  // namespace ldc
