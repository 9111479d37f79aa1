#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>

#include "ldcvae/errors.hpp"
#include "ldcvae/metrics.hpp"
#include "ldcvae_cli/cli.hpp"

namespace ldc::cli {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os.precision(17);
  return os;
}

void emit_config(const Config& cfg, const std::string& command) {
  fs::create_directories(cfg.out_dir);
  write_config_file(cfg, fs::path(cfg.out_dir) / (command + ".cfg"));
}

// Side of a square image of `dim` pixels, or 0.
std::size_t image_side(std::size_t dim) {
  const auto s = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(dim))));
  return s * s == dim && dim > 1 ? s : 0;
}

Tensor vstack(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) throw DimensionError("vstack: column mismatch");
  std::vector<double> v(a.data().begin(), a.data().end());
  v.insert(v.end(), b.data().begin(), b.data().end());
  return Tensor::matrix(a.rows() + b.rows(), a.cols(), std::move(v));
}

void write_rows_csv(std::ostream& os, const std::string& prefix, const Tensor& t) {
  for (std::size_t c = 0; c < t.cols(); ++c) os << (c ? "," : "") << prefix << c;
  os << '\n';
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto row = t.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
    os << '\n';
  }
}

// Latent codes used for reconstruction: the noisy encoder output, or the
// posterior mean for the baseline.
Tensor encode_for_images(const LoadedModel& m, const Tensor& x, Rng& rng) {
  if (const auto* vae = std::get_if<VaeModel>(&m.model)) {
    Tape tape;
    return vae->encoder.forward(tape, tape.constant(x), ParamMode::frozen).first.value();
  }
  return encode(std::get<LdcModel>(m.model).encoder, x, rng.normal(x.rows(), m.arch.noise_dim));
}

const DecoderNet& decoder_of(const LoadedModel& m) {
  return std::visit([](const auto& model) -> const DecoderNet& { return model.decoder; }, m.model);
}

}  // namespace

std::size_t checkpoint_data_dim(const std::vector<NamedTensor>& records) {
  std::size_t best_layer = 0;
  const NamedTensor* best = nullptr;
  const std::string prefix = "decoder.";
  const std::string suffix = ".bias";
  for (const auto& r : records) {
    const auto& n = r.name;
    if (n.size() <= prefix.size() + suffix.size() || n.rfind(prefix, 0) != 0 ||
        n.compare(n.size() - suffix.size(), suffix.size(), suffix) != 0) {
      continue;
    }
    const std::string mid = n.substr(prefix.size(), n.size() - prefix.size() - suffix.size());
    if (mid.empty() || !std::all_of(mid.begin(), mid.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
    const std::size_t layer = std::stoul(mid);
    if (best == nullptr || layer > best_layer) {
      best_layer = layer;
      best = &r;
    }
  }
  if (best == nullptr) throw ContractError("checkpoint holds no decoder parameters");
  return best->value.size();
}

LoadedModel load_model(const Config& cfg) {
  const auto records = read_checkpoint(cfg.checkpoint_path());
  const Architecture arch = architecture_from(cfg, checkpoint_data_dim(records));
  LoadedModel m{arch, make_model(cfg, arch)};
  restore(records, model_parameters(m.model));
  return m;
}

std::vector<double> blend_weights(std::size_t steps) {
  if (steps < 2) throw ConfigError("interpolation needs at least 2 steps");
  std::vector<double> w(steps);
  for (std::size_t k = 0; k < steps; ++k) w[k] = static_cast<double>(k) / static_cast<double>(steps - 1);
  return w;
}

Tensor interpolate_latents(const Tensor& a, const Tensor& b, std::size_t steps) {
  require_same_shape(a, b, "interpolate_latents");
  const auto w = blend_weights(steps);
  const std::size_t d = a.size();
  Tensor out = Tensor::matrix(steps, d, std::vector<double>(steps * d, 0.0));
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t j = 0; j < d; ++j) out(k, j) = (1.0 - w[k]) * a[j] + w[k] * b[j];
  }
  return out;
}

int cmd_train(const Config& cfg, std::ostream& out) {
  Trainer trainer(cfg, load_datasets(cfg));
  emit_config(cfg, "train");
  const TrainReport report = trainer.train();
  out << "trained " << report.steps.size() << " iterations; checkpoint " << cfg.checkpoint_path().string()
      << "; report " << cfg.report_path().string() << '\n';
  if (!report.epochs.empty()) {
    const auto& e = report.epochs.back();
    out << "epoch " << e.epoch << ": test_mse " << e.test_mse << ", mmd2 " << e.mmd2 << '\n';
  }
  return kOk;
}

int cmd_sample(const Config& cfg, std::ostream& out) {
  const LoadedModel m = load_model(cfg);
  const std::size_t n = cfg.sample_count;
  if (n == 0) throw ConfigError("sample_count must be positive");
  Rng rng = Rng::stream(cfg.seed, "sample");
  Tensor z;
  if (const auto* ldc = std::get_if<LdcModel>(&m.model)) {
    z = sample_latent(ldc->sampler, rng.normal(n, m.arch.sampler_noise_dim));
  } else {
    z = rng.normal(n, m.arch.latent_dim);
  }
  const Tensor x = decode(decoder_of(m), z);
  const fs::path dir(cfg.out_dir);
  {
    auto os = open_out(dir / "samples_latent.csv");
    write_rows_csv(os, "z", z);
  }
  if (const std::size_t side = image_side(x.cols())) {
    const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    const std::size_t rows = (n + cols - 1) / cols;
    metrics::write_pgm(dir / "samples.pgm", metrics::image_grid(x, rows, cols, side));
  } else {
    auto os = open_out(dir / "samples.csv");
    write_rows_csv(os, "x", x);
  }
  emit_config(cfg, "sample");
  out << "wrote " << n << " samples to " << dir.string() << '\n';
  return kOk;
}

int cmd_reconstruct(const Config& cfg, std::ostream& out) {
  const LoadedModel m = load_model(cfg);
  const DatasetPair data = load_datasets(cfg);
  const std::size_t k = std::min(cfg.sample_count, data.test.size());
  if (k == 0) throw ConfigError("nothing to reconstruct");
  const Tensor x = data.test.samples.rows_range(0, k);
  Rng rng = Rng::stream(cfg.seed, "reconstruct");
  const Tensor recon = decode(decoder_of(m), encode_for_images(m, x, rng));
  const fs::path dir(cfg.out_dir);
  if (const std::size_t side = image_side(x.cols())) {
    // Reconstruction then original, pair after pair along each row.
    const std::size_t pairs_per_row = std::min<std::size_t>(8, k);
    const std::size_t rows = (k + pairs_per_row - 1) / pairs_per_row;
    Tensor tiles = Tensor::matrix(2 * k, x.cols(), std::vector<double>(2 * k * x.cols(), 0.0));
    for (std::size_t i = 0; i < k; ++i) {
      std::copy(recon.row(i).begin(), recon.row(i).end(), tiles.row(2 * i).begin());
      std::copy(x.row(i).begin(), x.row(i).end(), tiles.row(2 * i + 1).begin());
    }
    metrics::write_pgm(dir / "reconstruct.pgm", metrics::image_grid(tiles, rows, 2 * pairs_per_row, side));
  } else {
    auto os = open_out(dir / "reconstruct.csv");
    write_rows_csv(os, "x", recon);
  }
  emit_config(cfg, "reconstruct");
  out << "reconstructed " << k << " test samples, mse " << reconstruction_mse(x, recon) << '\n';
  return kOk;
}

int cmd_interpolate(const Config& cfg, std::ostream& out) {
  const LoadedModel m = load_model(cfg);
  const DatasetPair data = load_datasets(cfg);
  const std::size_t steps = cfg.interp_steps;
  const auto weights = blend_weights(steps);
  const std::size_t pairs = cfg.interp_pairs;
  const std::size_t n = data.test.size();
  if (pairs == 0) throw ConfigError("interp_pairs must be positive");
  if (n < 2) throw ConfigError("interpolation needs at least 2 test samples");

  Rng rng = Rng::stream(cfg.seed, "interpolate");
  std::vector<std::size_t> ends;
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::size_t a = rng.index(n);
    std::size_t b = rng.index(n - 1);
    if (b >= a) ++b;
    ends.push_back(a);
    ends.push_back(b);
  }
  const Tensor originals = data.test.samples.rows_at(ends);
  const Tensor z = encode_for_images(m, originals, rng);
  const std::size_t d = z.cols();
  const std::size_t dim = originals.cols();

  const std::size_t cols = steps + 2;
  Tensor tiles = Tensor::matrix(pairs * cols, dim, std::vector<double>(pairs * cols * dim, 0.0));
  const fs::path dir(cfg.out_dir);
  auto lat = open_out(dir / "interpolate_latent.csv");
  lat << "pair,step,weight";
  for (std::size_t j = 0; j < d; ++j) lat << ",z" << j;
  lat << '\n';
  for (std::size_t p = 0; p < pairs; ++p) {
    const Tensor za = z.rows_range(2 * p, 2 * p + 1);
    const Tensor zb = z.rows_range(2 * p + 1, 2 * p + 2);
    const Tensor blend = interpolate_latents(za, zb, steps);
    const Tensor imgs = decode(decoder_of(m), blend);
    auto put = [&](std::size_t col, std::span<const double> src) {
      std::copy(src.begin(), src.end(), tiles.row(p * cols + col).begin());
    };
    put(0, originals.row(2 * p));
    for (std::size_t s = 0; s < steps; ++s) put(1 + s, imgs.row(s));
    put(cols - 1, originals.row(2 * p + 1));
    for (std::size_t s = 0; s < steps; ++s) {
      lat << p << ',' << s << ',' << weights[s];
      for (double v : blend.row(s)) lat << ',' << v;
      lat << '\n';
    }
  }
  if (const std::size_t side = image_side(dim)) {
    metrics::write_pgm(dir / "interpolate.pgm", metrics::image_grid(tiles, pairs, cols, side));
  } else {
    auto os = open_out(dir / "interpolate.csv");
    write_rows_csv(os, "x", tiles);
  }
  emit_config(cfg, "interpolate");
  out << "interpolated " << pairs << " pairs over " << steps << " steps\n";
  return kOk;
}

const std::vector<std::string>& eval_columns() {
  static const std::vector<std::string> cols{"test_mse", "mmd2",   "mmd_bandwidth", "energy", "mmd2_null_split",
                                             "n_test",   "n_generated"};
  return cols;
}

int cmd_eval(const Config& cfg, std::ostream& out) {
  const LoadedModel m = load_model(cfg);
  const DatasetPair data = load_datasets(cfg);
  const Tensor& test = data.test.samples;
  const std::size_t k = std::min(cfg.metric_samples, test.rows());
  if (k < 2) throw ConfigError("eval needs at least 2 test samples and metric_samples >= 2");

  const EpochMetrics em = evaluate_model(m.model, m.arch, test, cfg.metric_samples, cfg.seed);
  // Same stream as evaluate_model, so these are the latents it scored.
  Rng rng = Rng::stream(cfg.seed, "eval");
  const EvalLatents lat = eval_latents(m.model, m.arch, test, k, rng);

  double null_split = std::numeric_limits<double>::quiet_NaN();
  const std::size_t half = std::min(lat.z_test.rows() / 2, cfg.metric_samples);
  if (half >= 2) {
    null_split =
        metrics::mmd2_unbiased(lat.z_test.rows_range(0, half), lat.z_test.rows_range(half, 2 * half)).statistic;
  }

  const fs::path dir(cfg.out_dir);
  {
    auto os = open_out(dir / "eval.csv");
    const auto& cols = eval_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n'
       << em.test_mse << ',' << em.mmd2 << ',' << em.mmd_bandwidth << ',' << em.energy << ',' << null_split << ','
       << test.rows() << ',' << k << '\n';
  }
  if (m.arch.latent_dim >= 2) {
    const Tensor z_enc = lat.z_test.rows_range(0, k);
    const auto pca = metrics::pca_project(vstack(z_enc, lat.z_gen), 2);
    std::vector<std::string> tags(k, "encoder");
    tags.insert(tags.end(), k, std::holds_alternative<LdcModel>(m.model) ? "sampler" : "prior");
    auto os = open_out(dir / "latent_pca.csv");
    metrics::write_projection_csv(os, pca.projection, tags);
  }
  emit_config(cfg, "eval");
  out << "test_mse " << em.test_mse << ", mmd2 " << em.mmd2 << " (null split " << null_split << "), energy "
      << em.energy << '\n';
  return kOk;
}

ScoreFunction demo_score(const Config& cfg) {
  if (cfg.demo_target == "gauss") {
    const double mu = cfg.demo_mean;
    const double var = cfg.demo_std * cfg.demo_std;
    return [mu, var](const Tensor& z) {
      Tensor s = z;
      for (auto& v : s.data()) v = (mu - v) / var;
      return s;
    };
  }
  if (cfg.demo_target == "mixture") {
    const double m = cfg.demo_mode_sep;
    const double var = cfg.demo_mode_std * cfg.demo_mode_std;
    return [m, var](const Tensor& z) {
      Tensor s = z;
      for (auto& v : s.data()) {
        const double la = -(v - m) * (v - m) / (2.0 * var);
        const double lb = -(v + m) * (v + m) / (2.0 * var);
        const double top = std::max(la, lb);
        const double wa = std::exp(la - top);
        const double wb = std::exp(lb - top);
        v = (wa * (m - v) + wb * (-m - v)) / (var * (wa + wb));
      }
      return s;
    };
  }
  throw ConfigError("unknown demo_target '" + cfg.demo_target + "'");
}

Tensor demo_initial_particles(const Config& cfg) {
  Rng rng = Rng::stream(cfg.seed, "svgd_demo");
  return rng.normal(cfg.demo_particles, 1, cfg.demo_init_mean, cfg.demo_init_std);
}

Tensor run_svgd_demo(const Config& cfg, std::ostream* trajectory) {
  const ScoreFunction score = demo_score(cfg);
  ParticleSet ps{demo_initial_particles(cfg), cfg.demo_step_size};
  if (trajectory != nullptr) {
    write_trajectory_header(*trajectory, 1);
    write_trajectory_rows(*trajectory, 0, ps.positions);
  }
  const std::size_t steps = cfg.demo_steps;
  const std::size_t every = cfg.demo_dump_every;
  TransportObserver obs;
  if (trajectory != nullptr) {
    obs = [&](std::size_t step, const Tensor& pos) {
      if (step % every == 0 || step == steps) write_trajectory_rows(*trajectory, step, pos);
    };
  }
  return transport(std::move(ps), score, steps, BandwidthPolicy::median(), obs).positions;
}

int cmd_svgd_demo(const Config& cfg, std::ostream& out) {
  auto os = open_out(fs::path(cfg.out_dir) / "trajectory.csv");
  const Tensor pos = run_svgd_demo(cfg, &os);
  double mean = 0.0;
  for (double v : pos.data()) mean += v;
  mean /= static_cast<double>(pos.size());
  double var = 0.0;
  std::size_t positive = 0;
  for (double v : pos.data()) {
    var += (v - mean) * (v - mean);
    positive += v > 0.0 ? 1 : 0;
  }
  var /= static_cast<double>(pos.size());
  emit_config(cfg, "svgd-demo");
  out << "particles " << pos.size() << ", steps " << cfg.demo_steps << ": mean " << mean << ", var " << var
      << ", fraction > 0 " << static_cast<double>(positive) / static_cast<double>(pos.size()) << '\n';
  return kOk;
}

}  // namespace ldc::cli
