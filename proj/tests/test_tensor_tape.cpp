#include <cmath>
#include <limits>

#include "ldcvae/errors.hpp"
#include "ldcvae/ops.hpp"
#include "support.hpp"

using namespace ldc;
using ldc::testing::random_matrix;

TEST(Tensor, ShapeAndDataAgree) {
  Tensor t(Shape{2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
}

TEST(Tensor, RowSelection) {
  const Tensor t = Tensor::matrix({{1, 2}, {3, 4}, {5, 6}});
  const std::vector<std::size_t> idx{2, 0};
  EXPECT_EQ(t.rows_at(idx), Tensor::matrix({{5, 6}, {1, 2}}));
  EXPECT_EQ(t.rows_range(1, 3), Tensor::matrix({{3, 4}, {5, 6}}));
}

TEST(Affine, IdentityWeight) {
  Tape tape;
  Var y = affine(tape.constant(Tensor::matrix({{1, 2}})), tape.constant(Tensor::matrix({{1, 0}, {0, 1}})),
                 tape.constant(Tensor::vector({0, 0})));
  EXPECT_EQ(y.value(), Tensor::matrix({{1, 2}}));
}

TEST(Affine, ZeroInputPassesBias) {
  Tape tape;
  Var y = affine(tape.constant(Tensor::matrix({{0, 0}})), tape.constant(random_matrix(2, 2, 3)),
                 tape.constant(Tensor::vector({3, 4})));
  EXPECT_EQ(y.value(), Tensor::matrix({{3, 4}}));
}

TEST(Affine, BiasGradientIsOnes) {
  Parameter b("b", Tensor::vector({0.5, -1.0, 2.0}));
  Tape tape;
  Var y = affine(tape.constant(random_matrix(1, 2, 1)), tape.constant(random_matrix(2, 3, 2)), tape.parameter(b));
  tape.backward(sum(y));
  EXPECT_EQ(b.grad, Tensor::vector({1, 1, 1}));
  EXPECT_TRUE(b.grad_ready);
}

TEST(Affine, ShapeMismatch) {
  Tape tape;
  EXPECT_THROW(affine(tape.constant(random_matrix(2, 3, 1)), tape.constant(random_matrix(2, 2, 2)),
                      tape.constant(Tensor::vector({0, 0}))),
               DimensionError);
  EXPECT_THROW(affine(tape.constant(random_matrix(2, 2, 1)), tape.constant(random_matrix(2, 2, 2)),
                      tape.constant(Tensor::vector({0, 0, 0}))),
               DimensionError);
}

TEST(Activation, ReluValuesAndSlopes) {
  Tape tape;
  Var x = tape.input(Tensor::vector({-1, 0, 2}));
  Var y = activation(x, Activation::relu);
  EXPECT_EQ(y.value(), Tensor::vector({0, 0, 2}));
  tape.backward(sum(y));
  EXPECT_EQ(tape.grad(x)[0], 0.0);
  EXPECT_EQ(tape.grad(x)[2], 1.0);
}

TEST(Activation, TanhOfZero) {
  Tape tape;
  EXPECT_EQ(activation(tape.constant(Tensor::vector({0})), Activation::tanh).value(), Tensor::vector({0}));
}

TEST(Activation, ParseNames) {
  EXPECT_EQ(parse_activation("tanh"), Activation::tanh);
  EXPECT_EQ(parse_activation("sigmoid"), Activation::sigmoid);
  EXPECT_THROW(parse_activation("gelu"), ConfigError);
}

TEST(Mse, EqualInputsGiveZero) {
  Tape tape;
  const Tensor a = random_matrix(3, 4, 7);
  EXPECT_EQ(mse(tape.constant(a), tape.constant(a), Reduction::mean).value().item(), 0.0);
}

TEST(Mse, SumPerRow) {
  Tape tape;
  Var m = mse(tape.constant(Tensor::matrix({{1, 0}})), tape.constant(Tensor::matrix({{0, 0}})), Reduction::sum_per_row);
  EXPECT_EQ(m.value(), Tensor::vector({1}));
}

TEST(Mse, MeanIsMeanOfRowSums) {
  Tape tape;
  Var m = mse(tape.constant(Tensor::matrix({{1, 1}, {2, 0}})), tape.constant(Tensor::matrix({{0, 0}, {0, 0}})),
              Reduction::mean);
  EXPECT_DOUBLE_EQ(m.value().item(), (2.0 + 4.0) / 2.0);
}

TEST(Mse, GradientIsTwiceResidual) {
  const Tensor a = random_matrix(3, 2, 11);
  const Tensor b = random_matrix(3, 2, 12);
  Tape tape;
  Var av = tape.input(a);
  tape.backward(sum(mse(av, tape.constant(b), Reduction::sum_per_row)));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(tape.grad(av)[i], 2.0 * (a[i] - b[i]), 1e-15);
}

TEST(Mse, ShapeMismatch) {
  Tape tape;
  EXPECT_THROW(mse(tape.constant(random_matrix(2, 2, 1)), tape.constant(random_matrix(2, 3, 1)), Reduction::mean),
               DimensionError);
}

TEST(Backward, SumGivesOnes) {
  Tape tape;
  Var x = tape.input(Tensor::vector({1, 2, 3}));
  tape.backward(sum(x));
  EXPECT_EQ(tape.grad(x), Tensor::vector({1, 1, 1}));
}

TEST(Backward, SquareGivesTwiceX) {
  Tape tape;
  Var x = tape.input(Tensor::vector({1, 2}));
  tape.backward(sum(mul(x, x)));
  EXPECT_EQ(tape.grad(x), Tensor::vector({2, 4}));
}

TEST(Backward, RejectsNonScalarLoss) {
  Tape tape;
  Var x = tape.input(Tensor::vector({1, 2}));
  EXPECT_THROW(tape.backward(x), DimensionError);
}

TEST(Backward, TapeIsConsumed) {
  Tape tape;
  Var x = tape.input(Tensor::vector({1, 2}));
  Var s = sum(x);
  tape.backward(s);
  EXPECT_TRUE(tape.consumed());
  EXPECT_THROW(tape.backward(s), ContractError);
  EXPECT_THROW(sum(x), ContractError);
}

TEST(Backward, ForeignVarRejected) {
  Tape a;
  Tape b;
  Var x = a.input(Tensor::vector({1}));
  EXPECT_THROW(b.backward(x, Tensor::vector({1})), ContractError);
}

TEST(Backward, DetachedLossRejected) {
  Tape tape;
  Var c = sum(tape.constant(Tensor::vector({1, 2})));
  EXPECT_THROW(tape.backward(c), ContractError);
}

TEST(Backward, VisitsInExactReverseOrder) {
  Tape tape;
  Var x = tape.input(Tensor::vector({0.3, -0.2}));
  Var y = activation(x, Activation::tanh);
  Var z = mul(y, x);
  Var w = scale(z, 3.0);
  Var loss = sum(w);
  tape.backward(loss);
  const auto& order = tape.backward_visit_order();
  ASSERT_FALSE(order.empty());
  for (std::size_t i = 1; i < order.size(); ++i) EXPECT_GT(order[i - 1], order[i]);
  EXPECT_EQ(order.front(), loss.id());
}

TEST(Backward, TwoLayerMlpMatchesFiniteDifferences) {
  Parameter w1("w1", random_matrix(3, 4, 21, 0.5));
  Parameter b1("b1", Tensor::vector({0.1, -0.2, 0.05, 0.3}));
  Parameter w2("w2", random_matrix(4, 2, 22, 0.5));
  Parameter b2("b2", Tensor::vector({0.0, 0.1}));
  const Tensor x = random_matrix(5, 3, 23);
  auto forward = [&](Tape& tape, bool train) {
    auto p = [&](Parameter& q) { return train ? tape.parameter(q) : tape.frozen(q); };
    Var h = activation(affine(tape.constant(x), p(w1), p(b1)), Activation::tanh);
    Var y = activation(affine(h, p(w2), p(b2)), Activation::sigmoid);
    return sum(square(y));
  };
  {
    Tape tape;
    tape.backward(forward(tape, true));
  }
  auto loss = [&] {
    Tape tape;
    return forward(tape, false).value().item();
  };
  const auto res = ldc::testing::check_param_grads({&w1, &b1, &w2, &b2}, loss, 20, 5);
  EXPECT_EQ(res.checked, 20u);
  EXPECT_LT(res.worst, 1e-6);
}

TEST(InjectedGrad, ChainRuleScalar) {
  Parameter w("w", Tensor::scalar(1.5));
  Tape tape;
  Var node = scale(tape.parameter(w), 2.0);
  tape.backward(node, Tensor::scalar(3.0));
  EXPECT_EQ(w.grad.item(), 6.0);
}

TEST(InjectedGrad, ZerosGiveZeroGrads) {
  Parameter w("w", random_matrix(2, 3, 1));
  Parameter b("b", Tensor::vector({1, 2, 3}));
  Tape tape;
  Var z = affine(tape.constant(random_matrix(4, 2, 2)), tape.parameter(w), tape.parameter(b));
  tape.backward(z, Tensor(Shape{4, 3}, 0.0));
  EXPECT_EQ(w.grad, Tensor(Shape{2, 3}, 0.0));
  EXPECT_EQ(b.grad, Tensor(Shape{3}, 0.0));
  EXPECT_TRUE(w.grad_ready);
}

TEST(InjectedGrad, AffineWeightGradIsXTransposeG) {
  const Tensor x = random_matrix(4, 3, 31);
  const Tensor g = random_matrix(4, 2, 32);
  Parameter w("w", random_matrix(3, 2, 33));
  Parameter b("b", Tensor::vector({0, 0}));
  Tape tape;
  Var z = affine(tape.constant(x), tape.parameter(w), tape.parameter(b));
  tape.backward(z, g);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t o = 0; o < 2; ++o) {
      double expect = 0.0;
      for (std::size_t r = 0; r < 4; ++r) expect += x(r, i) * g(r, o);
      EXPECT_NEAR(w.grad(i, o), expect, 1e-14);
    }
  }
}

TEST(InjectedGrad, OnesEqualsBackwardOfSum) {
  const Tensor x = random_matrix(3, 2, 41);
  Parameter w1("w", random_matrix(2, 2, 42));
  Parameter b1("b", Tensor::vector({0.1, 0.2}));
  Parameter w2 = w1;
  Parameter b2 = b1;
  {
    Tape tape;
    Var z = activation(affine(tape.constant(x), tape.parameter(w1), tape.parameter(b1)), Activation::tanh);
    tape.backward(z, Tensor(Shape{3, 2}, 1.0));
  }
  {
    Tape tape;
    Var z = activation(affine(tape.constant(x), tape.parameter(w2), tape.parameter(b2)), Activation::tanh);
    tape.backward(sum(z));
  }
  EXPECT_EQ(w1.grad, w2.grad);
  EXPECT_EQ(b1.grad, b2.grad);
}

TEST(InjectedGrad, ShapeMismatch) {
  Tape tape;
  Var x = tape.input(Tensor::vector({1, 2}));
  EXPECT_THROW(tape.backward(scale(x, 2.0), Tensor::vector({1, 2, 3})), DimensionError);
}

TEST(NanPolicy, ForwardNonFiniteThrows) {
  Tape tape;
  Var x = tape.input(Tensor::vector({1000.0}));
  EXPECT_THROW(ldc::exp(x), NonFiniteError);
  Tape t2;
  EXPECT_THROW(t2.constant(Tensor::vector({std::numeric_limits<double>::quiet_NaN()})), NonFiniteError);
}

TEST(NanPolicy, InjectedNonFiniteThrows) {
  Tape tape;
  Var x = tape.input(Tensor::vector({1.0}));
  EXPECT_THROW(tape.backward(scale(x, 2.0), Tensor::vector({std::numeric_limits<double>::infinity()})),
               NonFiniteError);
}

TEST(Tape, DeterministicGradients) {
  auto run = [] {
    Parameter w("w", random_matrix(3, 3, 51));
    Parameter b("b", Tensor::vector({0, 0.5, -0.5}));
    Tape tape;
    Var y = activation(affine(tape.constant(random_matrix(6, 3, 52)), tape.parameter(w), tape.parameter(b)),
                       Activation::relu);
    tape.backward(mean(sum_rows(square(y))));
    return std::make_pair(w.grad, b.grad);
  };
  EXPECT_EQ(run(), run());
}

TEST(Ops, ConcatAndSliceRoundTrip) {
  const Tensor a = random_matrix(2, 3, 61);
  const Tensor b = random_matrix(2, 2, 62);
  Tape tape;
  Var av = tape.input(a);
  Var c = concat_cols(av, tape.constant(b));
  EXPECT_EQ(c.value().cols(), 5u);
  EXPECT_EQ(slice_cols(c, 0, 3).value(), a);
  EXPECT_EQ(slice_cols(c, 3, 5).value(), b);
  tape.backward(sum(slice_cols(c, 1, 4)));
  EXPECT_EQ(tape.grad(av), Tensor::matrix({{0, 1, 1}, {0, 1, 1}}));
}

TEST(Ops, ElementwiseGradientsMatchFiniteDifferences) {
  Parameter p("p", random_matrix(3, 2, 71, 0.7));
  const Tensor other = random_matrix(3, 2, 72, 0.7);
  auto build = [&](Tape& tape, Var x) {
    Var o = tape.constant(other);
    Var t = add(mul(ldc::exp(scale(x, 0.5)), o), sub(square(x), add_scalar(o, 0.3)));
    return mean(sum_rows(activation(t, Activation::sigmoid)));
  };
  {
    Tape tape;
    tape.backward(build(tape, tape.parameter(p)));
  }
  auto loss = [&] {
    Tape tape;
    return build(tape, tape.frozen(p)).value().item();
  };
  EXPECT_LT(ldc::testing::check_param_grads({&p}, loss, 20, 9).worst, 1e-6);
}
