#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ldcvae/ops.hpp"
#include "ldcvae/rng.hpp"
#include "ldcvae/tape.hpp"

namespace ldc {

// Whether a forward pass exposes a module's parameters as gradient leaves.
enum class ParamMode { trainable, frozen };

class Linear {
 public:
  Linear() = default;
  // Glorot-uniform weights, zero bias.
  Linear(std::string name, std::size_t in, std::size_t out, Rng& rng);

  Var forward(Tape& tape, Var x, ParamMode mode) const;
  void collect(std::vector<Parameter*>& out);
  void collect(std::vector<const Parameter*>& out) const;

  std::size_t in_features() const { return weight_.value.rows(); }
  std::size_t out_features() const { return weight_.value.cols(); }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  // mutable: a frozen or trainable forward only reads values; grads are
  // written into the Parameter by the tape on backward.
  mutable Parameter weight_;
  mutable Parameter bias_;
};

/// Stack of affine layers. Every hidden layer is followed by `hidden_act`,
/// the last by `output_act`. An empty width list makes the MLP the identity.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string name, std::size_t in, const std::vector<std::size_t>& widths, Activation hidden_act,
      Activation output_act, Rng& rng);

  Var forward(Tape& tape, Var x, ParamMode mode) const;
  void collect(std::vector<Parameter*>& out);
  void collect(std::vector<const Parameter*>& out) const;

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return layers_.empty() ? in_ : layers_.back().out_features(); }
  std::size_t parameter_count() const;
  std::vector<Linear>& layers() { return layers_; }

 private:
  std::size_t in_ = 0;
  std::vector<Linear> layers_;
  Activation hidden_act_ = Activation::relu;
  Activation output_act_ = Activation::identity;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. One instance per parameter group; moments are
/// keyed by position in the group passed to step().
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Requires grad_ready on every parameter; clears the grads afterwards.
  void step(const std::vector<Parameter*>& params);

  std::size_t steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return cfg_; }
  const std::vector<Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor>& second_moments() const noexcept { return v_; }

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace ldc
