#include "ldcvae/ops.hpp"

#include <cmath>
#include <string>

#include "ldcvae/errors.hpp"

namespace ldc {

namespace {

void same_tape(Var a, Var b, const char* op) {
  if (&a.tape() != &b.tape()) throw ContractError(std::string(op) + ": operands live on different tapes");
}

double act_value(Activation k, double x) {
  switch (k) {
    case Activation::identity:
      return x;
    case Activation::relu:
      return x > 0.0 ? x : 0.0;
    case Activation::tanh:
      return std::tanh(x);
    case Activation::sigmoid:
      return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

// Derivative expressed through the activation's output y.
double act_slope(Activation k, double x, double y) {
  switch (k) {
    case Activation::identity:
      return 1.0;
    case Activation::relu:
      return x > 0.0 ? 1.0 : 0.0;
    case Activation::tanh:
      return 1.0 - y * y;
    case Activation::sigmoid:
      return y * (1.0 - y);
  }
  return 1.0;
}

template <class F>
Var elementwise_binary(const char* op, Var a, Var b, F f, BackwardRule rule) {
  same_tape(a, b, op);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, op);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);
  return a.tape().record(op, std::move(out), {a, b}, std::move(rule));
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity:
      return "identity";
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
    case Activation::sigmoid:
      return "sigmoid";
  }
  return "?";
}

Var affine(Var input, Var weight, Var bias) {
  same_tape(input, weight, "affine");
  same_tape(input, bias, "affine");
  const Tensor& x = input.value();
  const Tensor& w = weight.value();
  const Tensor& b = bias.value();
  if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1 || x.cols() != w.rows() || b.size() != w.cols()) {
    throw DimensionError("affine: cannot combine input " + shape_str(x.shape()) + ", weight " +
                         shape_str(w.shape()) + ", bias " + shape_str(b.shape()));
  }
  const std::size_t batch = x.rows(), in = w.rows(), out_dim = w.cols();
  Tensor out(Shape{batch, out_dim});
  for (std::size_t r = 0; r < batch; ++r) {
    double* orow = out.data().data() + r * out_dim;
    for (std::size_t o = 0; o < out_dim; ++o) orow[o] = b[o];
    for (std::size_t k = 0; k < in; ++k) {
      const double xv = x(r, k);
      if (xv == 0.0) continue;
      const double* wrow = w.data().data() + k * out_dim;
      for (std::size_t o = 0; o < out_dim; ++o) orow[o] += xv * wrow[o];
    }
  }
  return input.tape().record("affine", std::move(out), {input, weight, bias}, [](BackwardContext& c) {
    const Tensor& g = c.out_grad;
    const Tensor& xv = *c.parent_values[0];
    const Tensor& wv = *c.parent_values[1];
    const std::size_t batch = xv.rows(), in = wv.rows(), out_dim = wv.cols();
    if (Tensor* gx = c.parent_grads[0]) {
      for (std::size_t r = 0; r < batch; ++r) {
        const double* grow = g.data().data() + r * out_dim;
        for (std::size_t k = 0; k < in; ++k) {
          const double* wrow = wv.data().data() + k * out_dim;
          double acc = 0.0;
          for (std::size_t o = 0; o < out_dim; ++o) acc += grow[o] * wrow[o];
          (*gx)(r, k) += acc;
        }
      }
    }
    if (Tensor* gw = c.parent_grads[1]) {
      for (std::size_t r = 0; r < batch; ++r) {
        const double* grow = g.data().data() + r * out_dim;
        for (std::size_t k = 0; k < in; ++k) {
          const double xv_rk = xv(r, k);
          if (xv_rk == 0.0) continue;
          double* gwrow = gw->data().data() + k * out_dim;
          for (std::size_t o = 0; o < out_dim; ++o) gwrow[o] += xv_rk * grow[o];
        }
      }
    }
    if (Tensor* gb = c.parent_grads[2]) {
      for (std::size_t r = 0; r < batch; ++r) {
        for (std::size_t o = 0; o < out_dim; ++o) (*gb)[o] += g(r, o);
      }
    }
  });
}

Var activation(Var input, Activation kind) {
  const Tensor& x = input.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = act_value(kind, x[i]);
  return input.tape().record("activation", std::move(out), {input}, [kind](BackwardContext& c) {
    const Tensor& x = *c.parent_values[0];
    Tensor& gx = *c.parent_grads[0];
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += c.out_grad[i] * act_slope(kind, x[i], c.out_value[i]);
  });
}

Var add(Var a, Var b) {
  return elementwise_binary("add", a, b, [](double x, double y) { return x + y; }, [](BackwardContext& c) {
    for (int k = 0; k < 2; ++k) {
      if (Tensor* g = c.parent_grads[k]) {
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.out_grad[i];
      }
    }
  });
}

Var sub(Var a, Var b) {
  return elementwise_binary("sub", a, b, [](double x, double y) { return x - y; }, [](BackwardContext& c) {
    if (Tensor* g = c.parent_grads[0]) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.out_grad[i];
    }
    if (Tensor* g = c.parent_grads[1]) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= c.out_grad[i];
    }
  });
}

Var mul(Var a, Var b) {
  return elementwise_binary("mul", a, b, [](double x, double y) { return x * y; }, [](BackwardContext& c) {
    const Tensor& av = *c.parent_values[0];
    const Tensor& bv = *c.parent_values[1];
    if (Tensor* g = c.parent_grads[0]) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.out_grad[i] * bv[i];
    }
    if (Tensor* g = c.parent_grads[1]) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.out_grad[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (auto& v : out.data()) v *= s;
  return a.tape().record("scale", std::move(out), {a}, [s](BackwardContext& c) {
    Tensor& g = *c.parent_grads[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * c.out_grad[i];
  });
}

Var add_scalar(Var a, double s) {
  Tensor out = a.value();
  for (auto& v : out.data()) v += s;
  return a.tape().record("add_scalar", std::move(out), {a}, [](BackwardContext& c) {
    Tensor& g = *c.parent_grads[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += c.out_grad[i];
  });
}

Var exp(Var a) {
  Tensor out = a.value();
  for (auto& v : out.data()) v = std::exp(v);
  return a.tape().record("exp", std::move(out), {a}, [](BackwardContext& c) {
    Tensor& g = *c.parent_grads[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += c.out_grad[i] * c.out_value[i];
  });
}

Var square(Var a) {
  Tensor out = a.value();
  for (auto& v : out.data()) v *= v;
  return a.tape().record("square", std::move(out), {a}, [](BackwardContext& c) {
    const Tensor& x = *c.parent_values[0];
    Tensor& g = *c.parent_grads[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * x[i] * c.out_grad[i];
  });
}

Var concat_cols(Var a, Var b) {
  same_tape(a, b, "concat_cols");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "concat_cols");
  require_matrix(bv, "concat_cols");
  if (av.rows() != bv.rows()) {
    throw DimensionError("concat_cols: row mismatch " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  }
  const std::size_t rows = av.rows(), ca = av.cols(), cb = bv.cols();
  Tensor out(Shape{rows, ca + cb});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < ca; ++j) out(r, j) = av(r, j);
    for (std::size_t j = 0; j < cb; ++j) out(r, ca + j) = bv(r, j);
  }
  return a.tape().record("concat_cols", std::move(out), {a, b}, [ca, cb](BackwardContext& c) {
    const std::size_t rows = c.out_grad.rows();
    for (std::size_t r = 0; r < rows; ++r) {
      if (Tensor* g = c.parent_grads[0]) {
        for (std::size_t j = 0; j < ca; ++j) (*g)(r, j) += c.out_grad(r, j);
      }
      if (Tensor* g = c.parent_grads[1]) {
        for (std::size_t j = 0; j < cb; ++j) (*g)(r, j) += c.out_grad(r, ca + j);
      }
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Tensor& av = a.value();
  require_matrix(av, "slice_cols");
  if (begin > end || end > av.cols()) throw DimensionError("slice_cols: bad column range");
  const std::size_t rows = av.rows(), w = end - begin;
  Tensor out(Shape{rows, w});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < w; ++j) out(r, j) = av(r, begin + j);
  }
  return a.tape().record("slice_cols", std::move(out), {a}, [begin, w](BackwardContext& c) {
    Tensor& g = *c.parent_grads[0];
    for (std::size_t r = 0; r < c.out_grad.rows(); ++r) {
      for (std::size_t j = 0; j < w; ++j) g(r, begin + j) += c.out_grad(r, j);
    }
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape().record("sum", Tensor::scalar(s), {a}, [](BackwardContext& c) {
    Tensor& g = *c.parent_grads[0];
    const double up = c.out_grad[0];
    for (auto& v : g.data()) v += up;
  });
}

Var sum_rows(Var a) {
  const Tensor& av = a.value();
  require_matrix(av, "sum_rows");
  Tensor out(Shape{av.rows()});
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double s = 0.0;
    for (double v : av.row(r)) s += v;
    out[r] = s;
  }
  return a.tape().record("sum_rows", std::move(out), {a}, [](BackwardContext& c) {
    Tensor& g = *c.parent_grads[0];
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (auto& v : g.row(r)) v += c.out_grad[r];
    }
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var mse(Var a, Var b, Reduction reduction) {
  same_tape(a, b, "mse");
  require_same_shape(a.value(), b.value(), "mse");
  require_matrix(a.value(), "mse");
  Var per_row = sum_rows(square(sub(a, b)));
  if (reduction == Reduction::sum_per_row) return per_row;
  return mean(per_row);
}

}  // namespace ldc
