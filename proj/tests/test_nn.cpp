#include <cmath>
#include <fstream>

#include <cstring>

#include "ldcvae/checkpoint.hpp"
#include "ldcvae/data.hpp"
#include "ldcvae/errors.hpp"
#include "ldcvae/nn.hpp"
#include "ldcvae/rng.hpp"
#include "support.hpp"

using namespace ldc;
using ldc::testing::random_matrix;

TEST(Linear, GlorotRangeAndZeroBias) {
  Rng rng(3);
  Linear l("layer", 10, 6, rng);
  const double limit = std::sqrt(6.0 / 16.0);
  for (double v : l.weight().value.data()) EXPECT_LE(std::abs(v), limit);
  EXPECT_EQ(l.bias().value, Tensor(Shape{6}, 0.0));
  EXPECT_EQ(l.weight().name, "layer.weight");
  EXPECT_EQ(l.bias().name, "layer.bias");
}

TEST(Mlp, ShapesAndParameterCount) {
  Rng rng(1);
  Mlp m("net", 5, {7, 3}, Activation::relu, Activation::sigmoid, rng);
  EXPECT_EQ(m.parameter_count(), 5u * 7 + 7 + 7 * 3 + 3);
  Tape tape;
  Var y = m.forward(tape, tape.constant(random_matrix(4, 5, 2)), ParamMode::frozen);
  EXPECT_EQ(y.shape(), (Shape{4, 3}));
  for (double v : y.value().data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Mlp, FrozenModeLeavesGradsUntouched) {
  Rng rng(1);
  Mlp m("net", 3, {2}, Activation::tanh, Activation::identity, rng);
  Tape tape;
  Var x = tape.input(random_matrix(2, 3, 4));
  tape.backward(sum(m.forward(tape, x, ParamMode::frozen)));
  std::vector<Parameter*> ps;
  m.collect(ps);
  for (auto* p : ps) EXPECT_FALSE(p->grad_ready);
  EXPECT_TRUE(tape.has_grad(x));
}

TEST(Adam, ZeroGradIsIdentityAndCountsSteps) {
  Parameter p("p", random_matrix(2, 2, 1));
  const Tensor before = p.value;
  Adam adam;
  for (int i = 0; i < 3; ++i) {
    p.grad = zeros_like(p.value);
    p.grad_ready = true;
    adam.step({&p});
  }
  EXPECT_EQ(p.value, before);
  EXPECT_EQ(adam.steps(), 3u);
}

TEST(Adam, FirstStepMagnitude) {
  const double g = 0.37;
  AdamConfig cfg;
  cfg.lr = 0.01;
  Adam adam(cfg);
  Parameter p("p", Tensor::scalar(1.0));
  p.grad = Tensor::scalar(g);
  p.grad_ready = true;
  adam.step({&p});
  // m_hat = g, v_hat = g^2 after bias correction.
  const double expect = cfg.lr * g / (std::sqrt(g * g) + cfg.eps);
  EXPECT_NEAR(1.0 - p.value.item(), expect, 1e-15);
  EXPECT_NEAR(1.0 - p.value.item(), cfg.lr, 1e-8);
}

TEST(Adam, MatchesHandRolledRecursion) {
  AdamConfig cfg{0.05, 0.8, 0.95, 1e-6};
  Adam adam(cfg);
  Parameter p("p", Tensor::vector({0.5, -1.0}));
  double w[2] = {0.5, -1.0};
  double m[2] = {0, 0};
  double v[2] = {0, 0};
  for (int t = 1; t <= 5; ++t) {
    p.grad = Tensor::vector({std::sin(t * 1.0) + p.value[0], p.value[1] * p.value[1]});
    p.grad_ready = true;
    const double g[2] = {std::sin(t * 1.0) + w[0], w[1] * w[1]};
    adam.step({&p});
    for (int i = 0; i < 2; ++i) {
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(cfg.beta1, t));
      const double vh = v[i] / (1 - std::pow(cfg.beta2, t));
      w[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
    }
    EXPECT_NEAR(p.value[0], w[0], 1e-14);
    EXPECT_NEAR(p.value[1], w[1], 1e-14);
    for (const auto& vt : adam.second_moments()) {
      for (double x : vt.data()) EXPECT_GE(x, 0.0);
    }
  }
}

TEST(Adam, ConvexQuadratic) {
  AdamConfig cfg;
  cfg.lr = 0.1;
  Adam adam(cfg);
  Parameter w("w", Tensor::scalar(0.0));
  for (int i = 0; i < 100; ++i) {
    Tape tape;
    tape.backward(sum(square(add_scalar(tape.parameter(w), -5.0))));
    adam.step({&w});
  }
  EXPECT_NEAR(w.value.item(), 5.0, 0.5);
}

TEST(Adam, MissingGradIsContractError) {
  Parameter p("p", Tensor::scalar(1.0));
  Adam adam;
  EXPECT_THROW(adam.step({&p}), ContractError);
}

TEST(Adam, ClearsGradsAfterStep) {
  Parameter p("p", Tensor::scalar(1.0));
  p.grad = Tensor::scalar(2.0);
  p.grad_ready = true;
  Adam adam;
  adam.step({&p});
  EXPECT_FALSE(p.grad_ready);
  EXPECT_EQ(p.grad.item(), 0.0);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto dir = ldc::testing::scratch_dir("ckpt");
  std::vector<NamedTensor> recs{{"a.weight", random_matrix(3, 4, 1)},
                                {"a.bias", Tensor::vector({0.1, 1e-300, -0.0, 3.0})},
                                {"scalar", Tensor::scalar(M_PI)}};
  write_checkpoint(dir / "m.ckpt", recs);
  const auto back = read_checkpoint(dir / "m.ckpt");
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].name, recs[i].name);
    EXPECT_EQ(back[i].value.shape(), recs[i].value.shape());
    EXPECT_EQ(std::memcmp(back[i].value.data().data(), recs[i].value.data().data(), recs[i].value.size() * 8), 0);
  }
}

TEST(Checkpoint, LayoutStartsWithMagic) {
  const auto dir = ldc::testing::scratch_dir("ckpt");
  write_checkpoint(dir / "m.ckpt", {{"x", Tensor::vector({1.0})}});
  const auto bytes = ldc::data::read_file_bytes(dir / "m.ckpt");
  ASSERT_GE(bytes.size(), 5u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 5), "LDCV1");
  // magic + u32 name length + "x" + u32 rank + u64 extent + one f64
  EXPECT_EQ(bytes.size(), 5u + 4 + 1 + 4 + 8 + 8);
}

TEST(Checkpoint, BadMagicAndTruncation) {
  const auto dir = ldc::testing::scratch_dir("ckpt");
  {
    std::ofstream os(dir / "bad.ckpt", std::ios::binary);
    os << "NOPE!xxxx";
  }
  try {
    read_checkpoint(dir / "bad.ckpt");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  write_checkpoint(dir / "ok.ckpt", {{"x", Tensor::vector({1.0, 2.0})}});
  std::filesystem::resize_file(dir / "ok.ckpt", std::filesystem::file_size(dir / "ok.ckpt") - 3);
  EXPECT_THROW(read_checkpoint(dir / "ok.ckpt"), ParseError);
}

TEST(Checkpoint, RestoreMatchesByNameAndChecksShape) {
  Parameter a("a", Tensor::vector({0, 0}));
  Parameter b("b", Tensor::scalar(0));
  restore({{"b", Tensor::scalar(7)}, {"a", Tensor::vector({1, 2})}}, {&a, &b});
  EXPECT_EQ(a.value, Tensor::vector({1, 2}));
  EXPECT_EQ(b.value.item(), 7.0);
  EXPECT_THROW(restore({{"a", Tensor::vector({1, 2, 3})}, {"b", Tensor::scalar(1)}}, {&a, &b}), DimensionError);
  EXPECT_THROW(restore({{"a", Tensor::vector({1, 2})}}, {&a, &b}), ContractError);
}
