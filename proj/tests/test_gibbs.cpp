#include <cmath>

#include "ldcvae/errors.hpp"
#include "ldcvae/gibbs.hpp"
#include "support.hpp"

using namespace ldc;
using ldc::testing::random_matrix;

namespace {

Architecture linear_decoder_arch(std::size_t d, std::size_t data_dim) {
  Architecture a;
  a.latent_dim = d;
  a.data_dim = data_dim;
  a.dec_hidden = {};
  a.decoder_output = Activation::identity;
  return a;
}

// D(z) = z A with zero bias, A stored as the decoder weight [d x D].
DecoderNet linear_decoder(const Tensor& a) {
  Rng rng(1);
  DecoderNet dec(linear_decoder_arch(a.rows(), a.cols()), rng);
  auto params = dec.parameters();
  params[0]->value = a;
  params[1]->value.fill(0.0);
  return dec;
}

}  // namespace

TEST(Sigma2, ResidualNormsOneAndThree) {
  const Tensor x = Tensor::matrix({{1, 0}, {0, 3}});
  const Tensor r = Tensor::matrix({{0, 0}, {0, 0}});
  const auto s = estimate_sigma2(x, r);
  EXPECT_DOUBLE_EQ(s.value, 1.0);
  EXPECT_FALSE(s.floored);
}

TEST(Sigma2, EqualNormsHitFloor) {
  const Tensor x = Tensor::matrix({{1, 0}, {0, 1}, {0.6, 0.8}});
  const auto s = estimate_sigma2(x, zeros_like(x));
  EXPECT_EQ(s.value, kSigma2Floor);
  EXPECT_TRUE(s.floored);
}

TEST(Sigma2, ScalesQuadratically) {
  const Tensor x = random_matrix(6, 3, 1);
  const Tensor r = random_matrix(6, 3, 2);
  Tensor xs = x;
  Tensor rs = r;
  for (auto& v : xs.data()) v *= 2.5;
  for (auto& v : rs.data()) v *= 2.5;
  EXPECT_NEAR(estimate_sigma2(xs, rs).value, 6.25 * estimate_sigma2(x, r).value, 1e-12);
}

TEST(Sigma2, SquaredNormMode) {
  const Tensor x = Tensor::matrix({{1, 0}, {0, 3}});
  // squared norms {1, 9}: mean 5, population variance 16
  EXPECT_DOUBLE_EQ(estimate_sigma2(x, zeros_like(x), Sigma2Mode::sqnorm).value, 16.0);
  EXPECT_EQ(parse_sigma2_mode("sqnorm"), Sigma2Mode::sqnorm);
  EXPECT_THROW(parse_sigma2_mode("squared"), ConfigError);
}

TEST(Sigma2, NeedsTwoRows) {
  const Tensor x = Tensor::matrix({{1, 0}});
  EXPECT_THROW(estimate_sigma2(x, x), ContractError);
}

TEST(GibbsPosterior, PerfectReconstructionIsZero) {
  const Tensor a = random_matrix(2, 3, 3);
  const DecoderNet dec = linear_decoder(a);
  const Tensor z = random_matrix(2, 2, 4);
  const Tensor x = decode(dec, z);
  const GibbsPosterior post(dec, x, 0.3);
  const auto pair = identity_pairing(2);
  const Tensor ld = post.log_density_unnorm(z, pair);
  const Tensor sc = post.score(z, pair);
  for (double v : ld.data()) EXPECT_NEAR(v, 0.0, 1e-15);
  for (double v : sc.data()) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(GibbsPosterior, IdentityDecoderUnitExponent) {
  const double sigma2 = 0.49;
  const DecoderNet dec = linear_decoder(Tensor::matrix({{1, 0}, {0, 1}}));
  const Tensor x = Tensor::matrix({{0, 0}, {0, 0}});
  const GibbsPosterior post(dec, x, sigma2);
  const Tensor z = Tensor::matrix({{0.7, 0.0}, {0.0, -0.7}});
  const Tensor ld = post.log_density_unnorm(z, identity_pairing(2));
  EXPECT_NEAR(ld[0], -1.0, 1e-15);
  EXPECT_NEAR(ld[1], -1.0, 1e-15);
}

TEST(GibbsPosterior, DoublingSigma2HalvesLogDensity) {
  const DecoderNet dec = linear_decoder(random_matrix(2, 4, 5));
  const Tensor x = random_matrix(3, 4, 6);
  const Tensor z = random_matrix(3, 2, 7);
  const auto pair = identity_pairing(3);
  const Tensor a = GibbsPosterior(dec, x, 0.8).log_density_unnorm(z, pair);
  const Tensor b = GibbsPosterior(dec, x, 1.6).log_density_unnorm(z, pair);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(b[i], 0.5 * a[i], 1e-14);
}

TEST(GibbsPosterior, LinearDecoderClosedFormScore) {
  const Tensor a = random_matrix(3, 5, 8);  // D(z) = z A
  const DecoderNet dec = linear_decoder(a);
  const Tensor x = random_matrix(4, 5, 9);
  const Tensor z = random_matrix(4, 3, 10);
  const double sigma2 = 0.37;
  const Tensor s = GibbsPosterior(dec, x, sigma2).score(z, identity_pairing(4));
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      double expect = 0.0;
      for (std::size_t k = 0; k < 5; ++k) {
        double dz = 0.0;
        for (std::size_t j = 0; j < 3; ++j) dz += z(i, j) * a(j, k);
        expect += a(c, k) * (x(i, k) - dz);
      }
      EXPECT_NEAR(s(i, c), 2.0 / sigma2 * expect, 1e-12);
    }
  }
}

TEST(GibbsPosterior, MlpScoreMatchesFiniteDifferences) {
  Architecture arch;
  arch.latent_dim = 3;
  arch.data_dim = 6;
  arch.dec_hidden = {5, 4};
  arch.activation = Activation::tanh;
  Rng rng(11);
  const DecoderNet dec(arch, rng);
  const Tensor x = Rng(12).normal(4, 6, 0.5, 0.2);
  Tensor z = random_matrix(4, 3, 13);
  const GibbsPosterior post(dec, x, 0.21);
  const auto pair = identity_pairing(4);
  const Tensor s = post.score(z, pair);
  std::mt19937_64 gen(14);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const std::size_t i = gen() % 4;
    const std::size_t c = gen() % 3;
    auto f = [&] { return post.log_density_unnorm(z, pair)[i]; };
    worst = std::max(worst, ldc::testing::rel_err(s(i, c), ldc::testing::central_diff(f, z(i, c))));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(GibbsPosterior, ScoreLeavesDecoderGradsUntouched) {
  Architecture arch;
  arch.latent_dim = 2;
  arch.data_dim = 3;
  arch.dec_hidden = {4};
  Rng rng(1);
  DecoderNet dec(arch, rng);
  const GibbsPosterior post(dec, random_matrix(2, 3, 2), 0.5);
  post.score(random_matrix(2, 2, 3), identity_pairing(2));
  for (auto* p : dec.parameters()) {
    EXPECT_FALSE(p->grad_ready);
    EXPECT_EQ(p->grad, zeros_like(p->value));
  }
}

TEST(GibbsPosterior, PairingSelectsDataRows) {
  const DecoderNet dec = linear_decoder(random_matrix(2, 3, 20));
  const Tensor x = random_matrix(3, 3, 21);
  const Tensor z = random_matrix(2, 2, 22);
  const GibbsPosterior post(dec, x, 0.5);
  const Pairing pair{2, 0};
  const Tensor ld = post.log_density_unnorm(z, pair);
  const Tensor single0 = GibbsPosterior(dec, x.rows_range(2, 3), 0.5).log_density_unnorm(z.rows_range(0, 1), {0});
  EXPECT_EQ(ld[0], single0[0]);
  EXPECT_THROW(post.score(z, Pairing{0}), ContractError);
  EXPECT_THROW(post.score(z, Pairing{0, 3}), ContractError);
}

TEST(GibbsPosterior, EvaluateAgreesWithParts) {
  const DecoderNet dec = linear_decoder(random_matrix(2, 3, 30));
  const Tensor x = random_matrix(3, 3, 31);
  const Tensor z = random_matrix(3, 2, 32);
  const GibbsPosterior post(dec, x, 0.9);
  const auto pair = identity_pairing(3);
  const auto ev = post.evaluate(z, pair);
  EXPECT_EQ(ev.log_density, post.log_density_unnorm(z, pair));
  EXPECT_EQ(ev.score, post.score(z, pair));
}
