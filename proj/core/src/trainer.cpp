#include "ldcvae/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

#include "ldcvae/checkpoint.hpp"
#include "ldcvae/errors.hpp"
#include "ldcvae/kernel.hpp"
#include "ldcvae/metrics.hpp"

namespace ldc {

namespace {

double mean_row_norm(const Tensor& t) {
  double s = 0.0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    double sq = 0.0;
    for (double v : t.row(r)) sq += v * v;
    s += std::sqrt(sq);
  }
  return s / static_cast<double>(t.rows());
}

double bandwidth_for(const Tensor& points, const BandwidthPolicy& p) {
  return p.kind == BandwidthPolicy::Kind::fixed ? p.value : median_bandwidth(points);
}

Tensor negated(const Tensor& t, double scale) {
  Tensor out = t;
  for (auto& v : out.data()) v *= -scale;
  return out;
}

AdamConfig adam_config(const Config& cfg, double lr) { return {lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps}; }

}  // namespace

StepConfig step_config_from(const Config& cfg) {
  StepConfig s;
  s.sigma2_mode = parse_sigma2_mode(cfg.sigma2_mode);
  s.bandwidth = cfg.bandwidth == "fixed" ? BandwidthPolicy::fixed(cfg.bandwidth_value) : BandwidthPolicy::median();
  s.sampler_particles = cfg.sampler_kernel_particles == "encoder" ? SamplerParticles::encoder : SamplerParticles::self;
  return s;
}

LdcOptimizers make_ldc_optimizers(const Config& cfg) {
  return {Adam(adam_config(cfg, cfg.lr_encoder)), Adam(adam_config(cfg, cfg.lr_decoder)),
          Adam(adam_config(cfg, cfg.lr_sampler))};
}

VaeOptimizers make_vae_optimizers(const Config& cfg) {
  return {Adam(adam_config(cfg, cfg.lr_encoder)), Adam(adam_config(cfg, cfg.lr_decoder))};
}

StepRecord ldc_step(const Tensor& x, const Tensor& eps_e, const Tensor& eps_s, LdcModel& model,
                    LdcOptimizers& opt, const StepConfig& cfg, LdcStepTrace* trace) {
  const auto t0 = std::chrono::steady_clock::now();
  require_matrix(x, "ldc_step");
  const std::size_t batch = x.rows();
  if (batch < 2) throw ContractError("ldc_step: batch size must be >= 2");
  if (eps_s.rows() != batch) throw DimensionError("ldc_step: sampler noise must have one row per data row");

  // Encoder forward on its own tape; its only gradient is the injected Stein term.
  Tape enc_tape;
  Var z_theta = model.encoder.forward(enc_tape, enc_tape.constant(x), enc_tape.constant(eps_e), ParamMode::trainable);

  // Decoder on a separate tape so reconstruction loss reaches phi only.
  Tape dec_tape;
  Var x_hat = model.decoder.forward(dec_tape, dec_tape.constant(z_theta.value()), ParamMode::trainable);
  Var l_rec = mse(dec_tape.constant(x), x_hat, Reduction::mean);

  StepRecord rec;
  rec.l_rec = l_rec.value().item();
  const Sigma2Estimate s2 = cfg.sigma2_override ? Sigma2Estimate{*cfg.sigma2_override, false}
                                                : estimate_sigma2(x, x_hat.value(), cfg.sigma2_mode);
  rec.sigma2 = s2.value;
  rec.sigma2_floored = s2.floored;

  // The posterior reads the decoder before any parameter update in this step.
  const GibbsPosterior posterior(model.decoder, x, s2.value);
  const Pairing pairing = identity_pairing(batch);

  const Tensor& z = z_theta.value();
  const Tensor score_theta = posterior.score(z, pairing);
  rec.h = bandwidth_for(z, cfg.bandwidth);
  const Tensor phi_theta = stein_direction(z, score_theta, z, rec.h);

  Tape smp_tape;
  Var z_omega = model.sampler.forward(smp_tape, smp_tape.constant(eps_s), ParamMode::trainable);
  const Tensor& zs = z_omega.value();
  const Tensor score_omega = posterior.score(zs, pairing);
  Tensor phi_omega;
  if (cfg.sampler_particles == SamplerParticles::self) {
    rec.h_sampler = bandwidth_for(zs, cfg.bandwidth);
    phi_omega = stein_direction(zs, score_omega, zs, rec.h_sampler);
  } else {
    rec.h_sampler = rec.h;
    phi_omega = stein_direction(z, score_theta, zs, rec.h_sampler);
  }
  rec.phi_theta_norm = mean_row_norm(phi_theta);
  rec.phi_omega_norm = mean_row_norm(phi_omega);

  dec_tape.backward(l_rec);
  enc_tape.backward(z_theta, negated(phi_theta, cfg.injection_scale));
  smp_tape.backward(z_omega, negated(phi_omega, cfg.injection_scale));

  if (trace != nullptr) {
    *trace = {z, x_hat.value(), score_theta, phi_theta, zs, score_omega, phi_omega};
  }

  opt.encoder.step(model.encoder.parameters());
  opt.decoder.step(model.decoder.parameters());
  opt.sampler.step(model.sampler.parameters());
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

StepRecord vae_step(const Tensor& x, const Tensor& eps, VaeModel& model, VaeOptimizers& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  Tape tape;
  Var xv = tape.constant(x);
  auto [mu, log_var] = model.encoder.forward(tape, xv, ParamMode::trainable);
  Var z = reparameterize(mu, log_var, tape.constant(eps));
  Var x_hat = model.decoder.forward(tape, z, ParamMode::trainable);
  Var kl = mean(gaussian_kl(mu, log_var));
  Var rec_loss = mse(xv, x_hat, Reduction::mean);
  Var loss = add(kl, rec_loss);
  tape.backward(loss);

  StepRecord rec;
  rec.kl = kl.value().item();
  rec.l_rec = rec_loss.value().item();
  rec.loss = loss.value().item();
  opt.encoder.step(model.encoder.parameters());
  opt.decoder.step(model.decoder.parameters());
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

double reconstruction_mse(const Tensor& x, const Tensor& recon) {
  require_same_shape(x, recon, "reconstruction_mse");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += (x[i] - recon[i]) * (x[i] - recon[i]);
  return total / static_cast<double>(x.rows());
}

void TrainReport::write_csv(std::ostream& os) const {
  const auto old = os.precision(17);
  os << "kind,epoch,iteration,l_rec,sigma2,sigma2_floored,h,h_sampler,phi_theta_norm,phi_omega_norm,kl,loss,"
        "test_mse,mmd2,mmd_bandwidth,energy\n";
  for (const auto& s : steps) {
    os << "step," << s.epoch << ',' << s.iteration << ',' << s.l_rec << ',' << s.sigma2 << ','
       << (s.sigma2_floored ? 1 : 0) << ',' << s.h << ',' << s.h_sampler << ',' << s.phi_theta_norm << ','
       << s.phi_omega_norm << ',' << s.kl << ',' << s.loss << ",,,,\n";
  }
  for (const auto& e : epochs) {
    os << "epoch," << e.epoch << ",,,,,,,,,,," << e.test_mse << ',' << e.mmd2 << ',' << e.mmd_bandwidth << ','
       << e.energy << '\n';
  }
  os.precision(old);
}

void TrainReport::write_timing_csv(std::ostream& os) const {
  os << "iteration,wall_ms\n";
  for (const auto& s : steps) os << s.iteration << ',' << s.wall_ms << '\n';
}

DatasetPair load_datasets(const Config& cfg) {
  DatasetPair p;
  if (cfg.dataset == "mnist") {
    const std::filesystem::path dir(cfg.mnist_dir);
    p.train = data::load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte");
    p.test = data::load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte");
  } else if (cfg.dataset == "synth2d") {
    data::SynthSpec spec;
    spec.kind = data::parse_synth_kind(cfg.synth_kind);
    spec.grid = cfg.synth_grid;
    spec.component_std = cfg.synth_std;
    p.train = data::synth_2d(spec, cfg.synth_train_n, cfg.seed);
    p.test = data::synth_2d(spec, cfg.synth_test_n, cfg.seed ^ 0x5eedf00dULL);
  } else {
    throw ConfigError("unknown dataset '" + cfg.dataset + "'");
  }
  if (cfg.train_limit) p.train = p.train.head(cfg.train_limit);
  if (cfg.test_limit) p.test = p.test.head(cfg.test_limit);
  return p;
}

AnyModel make_model(const Config& cfg, const Architecture& arch) {
  Rng init = Rng::stream(cfg.seed, "init");
  if (cfg.mode == "baseline-vae") return VaeModel(arch, init);
  return LdcModel(arch, init);
}

std::vector<Parameter*> model_parameters(AnyModel& model) {
  return std::visit([](auto& m) { return m.parameters(); }, model);
}

std::vector<const Parameter*> model_parameters(const AnyModel& model) {
  return std::visit([](const auto& m) { return m.parameters(); }, model);
}

EvalLatents eval_latents(const AnyModel& model, const Architecture& arch, const Tensor& test, std::size_t gen_count,
                         Rng& rng) {
  EvalLatents out;
  const std::size_t d = arch.latent_dim;
  if (const auto* vae = std::get_if<VaeModel>(&model)) {
    Tape tape;
    auto [mu, log_var] = vae->encoder.forward(tape, tape.constant(test), ParamMode::frozen);
    out.z_test = reparameterize(mu.value(), log_var.value(), rng.normal(test.rows(), d));
    out.recon = decode(vae->decoder, mu.value());
    out.z_gen = rng.normal(gen_count, d);
  } else {
    const auto& ldc = std::get<LdcModel>(model);
    out.z_test = encode(ldc.encoder, test, rng.normal(test.rows(), arch.noise_dim));
    out.recon = decode(ldc.decoder, out.z_test);
    out.z_gen = sample_latent(ldc.sampler, rng.normal(gen_count, arch.sampler_noise_dim));
  }
  return out;
}

EpochMetrics evaluate_model(const AnyModel& model, const Architecture& arch, const Tensor& test,
                            std::size_t metric_samples, std::uint64_t seed, std::size_t epoch) {
  EpochMetrics m;
  m.epoch = epoch;
  Rng rng = Rng::stream(seed, "eval");
  const std::size_t k = std::min(metric_samples, test.rows());
  const EvalLatents lat = eval_latents(model, arch, test, k, rng);
  m.test_mse = reconstruction_mse(test, lat.recon);
  if (k >= 2) {
    const Tensor z_enc = lat.z_test.rows_range(0, k);
    const auto mmd = metrics::mmd2_unbiased(z_enc, lat.z_gen);
    m.mmd2 = mmd.statistic;
    m.mmd_bandwidth = mmd.bandwidth;
    m.energy = metrics::energy_distance(z_enc, lat.z_gen).statistic;
  }
  return m;
}

Trainer::Trainer(Config cfg, DatasetPair data)
    : cfg_((cfg.validate(), std::move(cfg))),
      data_(std::move(data)),
      arch_(architecture_from(cfg_, data_.train.dim())),
      baseline_(cfg_.mode == "baseline-vae"),
      model_(make_model(cfg_, arch_)),
      opt_(baseline_ ? std::variant<LdcOptimizers, VaeOptimizers>(make_vae_optimizers(cfg_))
                     : std::variant<LdcOptimizers, VaeOptimizers>(make_ldc_optimizers(cfg_))),
      step_cfg_(step_config_from(cfg_)),
      batches_(data_.train.size(), cfg_.batch_size, cfg_.seed),
      noise_rng_(Rng::stream(cfg_.seed, "train_noise")) {
  if (data_.test.dim() != data_.train.dim()) throw ConfigError("train and test data have different widths");
}

std::vector<Parameter*> Trainer::parameters() { return model_parameters(model_); }

std::vector<const Parameter*> Trainer::parameters() const { return model_parameters(model_); }

void Trainer::run_epoch(std::size_t epoch, TrainReport& report) {
  batches_.start_epoch();
  for (auto idx = batches_.next(); !idx.empty(); idx = batches_.next()) {
    const Tensor x = data_.train.samples.rows_at(idx);
    StepRecord rec;
    try {
      if (baseline_) {
        const Tensor eps = noise_rng_.normal(x.rows(), arch_.latent_dim);
        rec = vae_step(x, eps, vae_model(), std::get<VaeOptimizers>(opt_));
      } else {
        const Tensor eps_e = noise_rng_.normal(x.rows(), arch_.noise_dim);
        const Tensor eps_s = noise_rng_.normal(x.rows(), arch_.sampler_noise_dim);
        rec = ldc_step(x, eps_e, eps_s, ldc_model(), std::get<LdcOptimizers>(opt_), step_cfg_);
      }
    } catch (const NonFiniteError& e) {
      throw NonFiniteError("epoch " + std::to_string(epoch) + ", iteration " + std::to_string(iteration_ + 1) +
                           ": " + e.what());
    }
    rec.iteration = ++iteration_;
    rec.epoch = epoch;
    report.steps.push_back(rec);
  }
}

EpochMetrics Trainer::evaluate(std::size_t epoch) const {
  // Fresh stream per evaluation: every epoch is scored with identical noise.
  return evaluate_model(model_, arch_, data_.test.samples, cfg_.metric_samples, cfg_.seed, epoch);
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_checkpoint(path, snapshot(parameters()));
  std::filesystem::path cfg_path = path;
  cfg_path += ".cfg";
  write_config_file(cfg_, cfg_path);
}

TrainReport Trainer::train() {
  TrainReport report;
  std::filesystem::create_directories(cfg_.out_dir);
  if (cfg_.epochs > 0 && cfg_.metric_samples > 0) report.epochs.push_back(evaluate(0));
  auto write_report = [&] {
    const auto report_path = cfg_.report_path();
    if (report_path.has_parent_path()) std::filesystem::create_directories(report_path.parent_path());
    std::ofstream out(report_path, std::ios::trunc);
    if (!out) throw IoError("cannot write report '" + report_path.string() + "'");
    report.write_csv(out);
    std::ofstream timing(std::filesystem::path(cfg_.out_dir) / "timing.csv", std::ios::trunc);
    if (timing) report.write_timing_csv(timing);
  };
  for (std::size_t epoch = 1; epoch <= cfg_.epochs; ++epoch) {
    try {
      run_epoch(epoch, report);
      if (cfg_.metric_samples > 0) report.epochs.push_back(evaluate(epoch));
    } catch (const NonFiniteError&) {
      // Keep the records up to the failing step for diagnosis; no checkpoint.
      write_report();
      throw;
    }
    if (cfg_.checkpoint_every > 0 && epoch % cfg_.checkpoint_every == 0) {
      save_checkpoint(std::filesystem::path(cfg_.out_dir) / ("model_epoch" + std::to_string(epoch) + ".ckpt"));
    }
  }
  save_checkpoint(cfg_.checkpoint_path());
  write_report();
  return report;
}

}  // namespace ldc
