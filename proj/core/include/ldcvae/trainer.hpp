#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ldcvae/config.hpp"
#include "ldcvae/data.hpp"
#include "ldcvae/gibbs.hpp"
#include "ldcvae/models.hpp"
#include "ldcvae/svgd.hpp"

namespace ldc {

enum class SamplerParticles { self, encoder };

struct StepConfig {
  Sigma2Mode sigma2_mode = Sigma2Mode::norm;
  BandwidthPolicy bandwidth = BandwidthPolicy::median();
  SamplerParticles sampler_particles = SamplerParticles::self;
  // Multiplies the Stein directions before injection; 0 isolates the decoder path.
  double injection_scale = 1.0;
  // When set, replaces the batch estimate of the Gibbs temperature.
  std::optional<double> sigma2_override;
};

StepConfig step_config_from(const Config& cfg);

struct LdcOptimizers {
  Adam encoder;
  Adam decoder;
  Adam sampler;
};

struct VaeOptimizers {
  Adam encoder;
  Adam decoder;
};

LdcOptimizers make_ldc_optimizers(const Config& cfg);
VaeOptimizers make_vae_optimizers(const Config& cfg);

/// One row of the training report.
struct StepRecord {
  std::size_t iteration = 0;
  std::size_t epoch = 0;
  double l_rec = 0.0;           // mean over the batch of |x - D(z)|^2
  double sigma2 = 0.0;
  bool sigma2_floored = false;
  double h = 0.0;               // bandwidth of the encoder Stein direction
  double h_sampler = 0.0;
  double phi_theta_norm = 0.0;  // mean row norm of the encoder Stein direction
  double phi_omega_norm = 0.0;
  double kl = 0.0;              // baseline VAE only
  double loss = 0.0;            // baseline VAE only: kl + l_rec
  double wall_ms = 0.0;
};

// Intermediates of ldc_step, for inspection and oracle tests.
struct LdcStepTrace {
  Tensor z_theta;
  Tensor x_hat;
  Tensor score_theta;
  Tensor phi_theta;
  Tensor z_omega;
  Tensor score_omega;
  Tensor phi_omega;
};

/// One LDC-VAE iteration on batch x with externally drawn noise.
///  1. z = E(x, eps_e), x_hat = D(z)
///  2. L_REC = mean_b |x_b - x_hat_b|^2, backpropagated into the decoder only
///  3. sigma2 from the batch residuals; Stein direction of the encoder batch
///     against the Gibbs target; the encoder receives -phi as dL/dz
///  4. z_s = S(eps_s); Stein direction of the sampler batch against the same
///     target (same decoder snapshot); the sampler receives -phi
///  5. Adam on encoder, decoder and sampler, each with its own state
/// Any non-finite value throws before parameters change.
StepRecord ldc_step(const Tensor& x, const Tensor& eps_e, const Tensor& eps_s, LdcModel& model,
                    LdcOptimizers& opt, const StepConfig& cfg, LdcStepTrace* trace = nullptr);

/// Baseline ELBO step: loss = mean_b KL(q(z|x_b) || N(0, I)) + mean_b |x_b - D(z_b)|^2
/// with a single reparameterized sample per input.
StepRecord vae_step(const Tensor& x, const Tensor& eps, VaeModel& model, VaeOptimizers& opt);

struct EpochMetrics {
  std::size_t epoch = 0;
  double test_mse = 0.0;       // mean per-sample squared reconstruction error on the test set
  double mmd2 = 0.0;           // encoder test latents vs generator latents (sampler net or prior)
  double mmd_bandwidth = 0.0;
  double energy = 0.0;
};

using AnyModel = std::variant<LdcModel, VaeModel>;

// Builds an initialized model of the configured mode.
AnyModel make_model(const Config& cfg, const Architecture& arch);
std::vector<Parameter*> model_parameters(AnyModel& model);
std::vector<const Parameter*> model_parameters(const AnyModel& model);

struct EvalLatents {
  Tensor z_test;  // encoder latents of every test row
  Tensor recon;   // reconstructions of every test row
  Tensor z_gen;   // generator latents: sampler net, or the prior for the baseline
};

/// LDC encodes with fresh noise; the baseline reconstructs from the mean and
/// reports a reparameterized posterior sample as the test latent.
EvalLatents eval_latents(const AnyModel& model, const Architecture& arch, const Tensor& test, std::size_t gen_count,
                         Rng& rng);

// Scores a model with the noise stream derived from seed alone.
EpochMetrics evaluate_model(const AnyModel& model, const Architecture& arch, const Tensor& test,
                            std::size_t metric_samples, std::uint64_t seed, std::size_t epoch = 0);

struct TrainReport {
  std::vector<StepRecord> steps;
  std::vector<EpochMetrics> epochs;

  // Deterministic report: wall times go to write_timing_csv instead.
  void write_csv(std::ostream& os) const;
  void write_timing_csv(std::ostream& os) const;
};

struct DatasetPair {
  data::Dataset train;
  data::Dataset test;
};

DatasetPair load_datasets(const Config& cfg);

/// Owns the model, optimizers and random streams of a run.
class Trainer {
 public:
  Trainer(Config cfg, DatasetPair data);

  bool baseline() const noexcept { return baseline_; }
  const Config& config() const noexcept { return cfg_; }
  const DatasetPair& data() const noexcept { return data_; }
  const Architecture& architecture() const noexcept { return arch_; }
  LdcModel& ldc_model() { return std::get<LdcModel>(model_); }
  VaeModel& vae_model() { return std::get<VaeModel>(model_); }
  const AnyModel& model() const noexcept { return model_; }
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  void run_epoch(std::size_t epoch, TrainReport& report);
  EpochMetrics evaluate(std::size_t epoch) const;
  // Runs cfg.epochs epochs, writing checkpoints and the report as configured.
  TrainReport train();

  void save_checkpoint(const std::filesystem::path& path) const;

 private:
  Config cfg_;
  DatasetPair data_;
  Architecture arch_;
  bool baseline_;
  AnyModel model_;
  std::variant<LdcOptimizers, VaeOptimizers> opt_;
  StepConfig step_cfg_;
  data::BatchIterator batches_;
  Rng noise_rng_;
  std::size_t iteration_ = 0;
};

// Mean over rows of the squared reconstruction error.
double reconstruction_mse(const Tensor& x, const Tensor& recon);

}  // namespace ldc
