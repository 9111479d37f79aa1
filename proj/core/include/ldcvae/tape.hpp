#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ldcvae/tensor.hpp"

namespace ldc {

/// Trainable array owned by a model. `grad` accumulates across every tape
/// leaf created from this parameter until an optimizer step clears it.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool grad_ready = false;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(zeros_like(value)) {}

  void zero_grad() {
    grad = zeros_like(value);
    grad_ready = false;
  }
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// What a backward rule sees: the output value and its upstream gradient, and
/// for each parent its value plus a grad buffer (nullptr when the parent does
/// not require grad).
struct BackwardContext {
  const Tensor& out_value;
  const Tensor& out_grad;
  std::vector<const Tensor*> parent_values;
  std::vector<Tensor*> parent_grads;
};

using BackwardRule = std::function<void(BackwardContext&)>;

/// Single-threaded recording of a forward pass. Backward replays the recorded
/// operations in exact reverse order. A tape is consumed by its first backward
/// call; gradients stay readable afterwards but nothing new can be recorded.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var input(Tensor value);
  Var parameter(Parameter& p);
  Var frozen(const Parameter& p) { return constant(p.value); }

  Var record(const char* op, Tensor value, std::vector<Var> parents, BackwardRule rule);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  bool has_grad(Var v) const;
  bool requires_grad(Var v) const;

  void backward(Var loss);
  void backward(Var node, const Tensor& injected);

  bool consumed() const noexcept { return consumed_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<std::uint32_t>& backward_visit_order() const noexcept { return visits_; }

 private:
  struct Node {
    const char* op;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    Parameter* param = nullptr;
    std::vector<std::uint32_t> parents;
    BackwardRule rule;
  };

  void check_owned(Var v, const char* what) const;
  void run_backward(std::uint32_t start);

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> visits_;
  bool consumed_ = false;
};

}  // namespace ldc
