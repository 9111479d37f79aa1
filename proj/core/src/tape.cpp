#include "ldcvae/tape.hpp"

#include "ldcvae/errors.hpp"

namespace ldc {

const Tensor& Var::value() const { return tape_->value(*this); }
bool Var::requires_grad() const { return tape_->requires_grad(*this); }

Var Tape::constant(Tensor value) { return record("constant", std::move(value), {}, nullptr); }

Var Tape::input(Tensor value) {
  Var v = record("input", std::move(value), {}, nullptr);
  nodes_[v.id()].requires_grad = true;
  return v;
}

Var Tape::parameter(Parameter& p) {
  Var v = record("parameter", p.value, {}, nullptr);
  nodes_[v.id()].requires_grad = true;
  nodes_[v.id()].param = &p;
  return v;
}

Var Tape::record(const char* op, Tensor value, std::vector<Var> parents, BackwardRule rule) {
  if (consumed_) throw ContractError(std::string(op) + ": tape already consumed by backward");
  if (!value.all_finite()) {
    throw NonFiniteError(std::string(op) + ": forward produced a non-finite value");
  }
  Node node{op, std::move(value), Tensor{}, false, false, nullptr, {}, std::move(rule)};
  node.parents.reserve(parents.size());
  for (const Var& p : parents) {
    check_owned(p, op);
    node.parents.push_back(p.id());
    node.requires_grad = node.requires_grad || nodes_[p.id()].requires_grad;
  }
  if (!node.requires_grad) node.rule = nullptr;
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void Tape::check_owned(Var v, const char* what) const {
  if (&v.tape() != this || v.id() >= nodes_.size()) {
    throw ContractError(std::string(what) + ": variable is not on this tape");
  }
}

const Tensor& Tape::value(Var v) const {
  check_owned(v, "value");
  return nodes_[v.id()].value;
}

const Tensor& Tape::grad(Var v) const {
  check_owned(v, "grad");
  const Node& n = nodes_[v.id()];
  if (!n.has_grad) throw ContractError("grad: node has no gradient (not reached by backward)");
  return n.grad;
}

bool Tape::has_grad(Var v) const {
  check_owned(v, "has_grad");
  return nodes_[v.id()].has_grad;
}

bool Tape::requires_grad(Var v) const {
  check_owned(v, "requires_grad");
  return nodes_[v.id()].requires_grad;
}

void Tape::backward(Var loss) {
  check_owned(loss, "backward");
  const Tensor& lv = nodes_[loss.id()].value;
  if (lv.size() != 1) throw DimensionError("backward: loss must be scalar, got " + shape_str(lv.shape()));
  backward(loss, Tensor(lv.shape(), 1.0));
}

void Tape::backward(Var node, const Tensor& injected) {
  check_owned(node, "backward");
  if (consumed_) throw ContractError("backward: tape already consumed");
  Node& n = nodes_[node.id()];
  if (!n.requires_grad) throw ContractError("backward: node is detached (requires no grad)");
  require_same_shape(n.value, injected, "backward: injected gradient");
  if (!injected.all_finite()) throw NonFiniteError("backward: injected gradient is non-finite");
  n.grad = injected;
  n.has_grad = true;
  consumed_ = true;
  run_backward(node.id());
}

void Tape::run_backward(std::uint32_t start) {
  visits_.clear();
  for (std::int64_t i = start; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.has_grad) continue;
    visits_.push_back(static_cast<std::uint32_t>(i));
    if (n.param != nullptr) {
      Parameter& p = *n.param;
      if (p.grad.shape() != p.value.shape()) p.grad = zeros_like(p.value);
      for (std::size_t k = 0; k < p.grad.size(); ++k) p.grad[k] += n.grad[k];
      p.grad_ready = true;
      continue;
    }
    if (!n.rule) continue;
    BackwardContext ctx{n.value, n.grad, {}, {}};
    ctx.parent_values.reserve(n.parents.size());
    ctx.parent_grads.reserve(n.parents.size());
    for (std::uint32_t pid : n.parents) {
      Node& parent = nodes_[pid];
      ctx.parent_values.push_back(&parent.value);
      if (parent.requires_grad) {
        if (!parent.has_grad) {
          parent.grad = zeros_like(parent.value);
          parent.has_grad = true;
        }
        ctx.parent_grads.push_back(&parent.grad);
      } else {
        ctx.parent_grads.push_back(nullptr);
      }
    }
    n.rule(ctx);
    for (Tensor* g : ctx.parent_grads) {
      if (g != nullptr && !g->all_finite()) {
        throw NonFiniteError(std::string(n.op) + ": backward produced a non-finite gradient");
      }
    }
  }
}

}  // namespace ldc
