#include "ldcvae/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ldcvae/errors.hpp"
#include "ldcvae/gibbs.hpp"

namespace ldc {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  v = trim(v);
  T out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(v) + "'");
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <class T>
ConfigKey number_key(std::string name, std::string help, T Config::*field) {
  auto key = name;
  return ConfigKey{
      std::move(name), std::move(help),
      [field](const Config& c) {
        if constexpr (std::is_floating_point_v<T>) {
          return format_double(c.*field);
        } else {
          return std::to_string(c.*field);
        }
      },
      [field, key](Config& c, std::string_view v) { c.*field = parse_number<T>(key, v); }};
}

ConfigKey string_key(std::string name, std::string help, std::string Config::*field) {
  return ConfigKey{std::move(name), std::move(help), [field](const Config& c) { return c.*field; },
                   [field](Config& c, std::string_view v) { c.*field = std::string(trim(v)); }};
}

void require_one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed) {
    if (v == a) return;
  }
  std::string list;
  for (const char* a : allowed) list += (list.empty() ? "" : "|") + std::string(a);
  throw ConfigError("config key '" + key + "': '" + v + "' is not one of " + list);
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      string_key("mode", "ldc | baseline-vae", &Config::mode),
      number_key("seed", "seed for every random stream of the run", &Config::seed),
      string_key("out_dir", "directory for reports, checkpoints and images", &Config::out_dir),
      string_key("checkpoint", "checkpoint path (default <out_dir>/model.ckpt)", &Config::checkpoint),
      string_key("report", "report CSV path (default <out_dir>/report.csv)", &Config::report),
      number_key("checkpoint_every", "also checkpoint every k epochs (0: final only)", &Config::checkpoint_every),
      string_key("dataset", "mnist | synth2d", &Config::dataset),
      string_key("mnist_dir", "directory holding the MNIST IDX files", &Config::mnist_dir),
      number_key("train_limit", "use only the first N training samples (0: all)", &Config::train_limit),
      number_key("test_limit", "use only the first N test samples (0: all)", &Config::test_limit),
      string_key("synth_kind", "gaussian_grid | two_moons", &Config::synth_kind),
      number_key("synth_grid", "k for the k x k Gaussian grid", &Config::synth_grid),
      number_key("synth_std", "grid component std in lattice units", &Config::synth_std),
      number_key("synth_train_n", "synthetic training set size", &Config::synth_train_n),
      number_key("synth_test_n", "synthetic test set size", &Config::synth_test_n),
      number_key("latent_dim", "latent dimension d", &Config::latent_dim),
      number_key("noise_dim", "encoder noise dimension (0: latent_dim)", &Config::noise_dim),
      number_key("sampler_noise_dim", "sampler-net noise dimension (0: latent_dim)", &Config::sampler_noise_dim),
      string_key("enc_data_hidden", "encoder data-path widths, comma separated", &Config::enc_data_hidden),
      string_key("enc_noise_hidden", "encoder noise-path widths", &Config::enc_noise_hidden),
      string_key("enc_comb_hidden", "encoder combiner hidden widths", &Config::enc_comb_hidden),
      string_key("dec_hidden", "decoder hidden widths", &Config::dec_hidden),
      string_key("sampler_hidden", "sampler-net hidden widths", &Config::sampler_hidden),
      string_key("vae_enc_hidden", "baseline Gaussian encoder hidden widths", &Config::vae_enc_hidden),
      string_key("activation", "hidden activation: relu | tanh", &Config::activation),
      string_key("decoder_output", "decoder output activation: sigmoid | identity", &Config::decoder_output),
      number_key("batch_size", "minibatch size (>= 2)", &Config::batch_size),
      number_key("epochs", "training epochs", &Config::epochs),
      number_key("lr_encoder", "Adam learning rate of the encoder", &Config::lr_encoder),
      number_key("lr_decoder", "Adam learning rate of the decoder", &Config::lr_decoder),
      number_key("lr_sampler", "Adam learning rate of the sampler net", &Config::lr_sampler),
      number_key("adam_beta1", "Adam beta1", &Config::adam_beta1),
      number_key("adam_beta2", "Adam beta2", &Config::adam_beta2),
      number_key("adam_eps", "Adam epsilon", &Config::adam_eps),
      string_key("sigma2_mode", "Gibbs temperature from variance of residual norm | sqnorm", &Config::sigma2_mode),
      string_key("bandwidth", "kernel bandwidth policy: median | fixed", &Config::bandwidth),
      number_key("bandwidth_value", "bandwidth used when bandwidth=fixed", &Config::bandwidth_value),
      string_key("sampler_kernel_particles", "Stein particles for the sampler net: self | encoder",
                 &Config::sampler_kernel_particles),
      number_key("metric_samples", "points per cloud for per-epoch metrics (0: off)", &Config::metric_samples),
      number_key("sample_count", "images drawn by the sample command", &Config::sample_count),
      number_key("interp_pairs", "rows of the interpolation grid", &Config::interp_pairs),
      number_key("interp_steps", "latent blend steps per row (>= 2)", &Config::interp_steps),
      string_key("demo_target", "svgd-demo target: gauss | mixture", &Config::demo_target),
      number_key("demo_mean", "gauss target mean", &Config::demo_mean),
      number_key("demo_std", "gauss target standard deviation", &Config::demo_std),
      number_key("demo_mode_sep", "mixture modes at +/- this value", &Config::demo_mode_sep),
      number_key("demo_mode_std", "mixture component standard deviation", &Config::demo_mode_std),
      number_key("demo_particles", "number of particles", &Config::demo_particles),
      number_key("demo_steps", "transport steps", &Config::demo_steps),
      number_key("demo_step_size", "transport step size epsilon", &Config::demo_step_size),
      number_key("demo_init_mean", "mean of the initial particles", &Config::demo_init_mean),
      number_key("demo_init_std", "std of the initial particles", &Config::demo_init_std),
      number_key("demo_dump_every", "write trajectory rows every k steps", &Config::demo_dump_every),
  };
  return keys;
}

const ConfigKey* find_config_key(std::string_view name) {
  for (const auto& k : config_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

void set_config_value(Config& cfg, std::string_view key, std::string_view value) {
  const ConfigKey* k = find_config_key(key);
  if (k == nullptr) throw ConfigError("unknown config key '" + std::string(key) + "'");
  k->set(cfg, value);
}

void apply_config_text(Config& cfg, std::string_view text, const std::string& source) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    try {
      set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(Config& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str(), path.string());
}

std::string config_to_text(const Config& cfg) {
  std::string out;
  for (const auto& k : config_keys()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

void write_config_file(const Config& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write config file '" + path.string() + "'");
  out << config_to_text(cfg);
}

std::filesystem::path Config::checkpoint_path() const {
  return checkpoint.empty() ? std::filesystem::path(out_dir) / "model.ckpt" : std::filesystem::path(checkpoint);
}

std::filesystem::path Config::report_path() const {
  return report.empty() ? std::filesystem::path(out_dir) / "report.csv" : std::filesystem::path(report);
}

void Config::validate() const {
  require_one_of("mode", mode, {"ldc", "baseline-vae"});
  require_one_of("dataset", dataset, {"mnist", "synth2d"});
  require_one_of("synth_kind", synth_kind, {"gaussian_grid", "two_moons"});
  require_one_of("activation", activation, {"relu", "tanh"});
  require_one_of("decoder_output", decoder_output, {"sigmoid", "identity"});
  require_one_of("sigma2_mode", sigma2_mode, {"norm", "sqnorm"});
  require_one_of("bandwidth", bandwidth, {"median", "fixed"});
  require_one_of("sampler_kernel_particles", sampler_kernel_particles, {"self", "encoder"});
  require_one_of("demo_target", demo_target, {"gauss", "mixture"});
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (latent_dim == 0) throw ConfigError("latent_dim must be positive");
  if (!(lr_encoder > 0.0) || !(lr_decoder > 0.0) || !(lr_sampler > 0.0)) {
    throw ConfigError("learning rates must be positive");
  }
  if (bandwidth == "fixed" && !(bandwidth_value > 0.0)) throw ConfigError("bandwidth_value must be positive");
  if (interp_steps < 2) throw ConfigError("interp_steps must be >= 2");
  if (demo_dump_every == 0) throw ConfigError("demo_dump_every must be positive");
  parse_widths(enc_data_hidden);
  parse_widths(enc_noise_hidden);
  parse_widths(enc_comb_hidden);
  parse_widths(dec_hidden);
  parse_widths(sampler_hidden);
  parse_widths(vae_enc_hidden);
}

std::vector<std::size_t> parse_widths(std::string_view s) {
  std::vector<std::size_t> out;
  s = trim(s);
  if (s.empty() || s == "none") return out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    const auto item = trim(s.substr(0, comma));
    const auto w = parse_number<std::size_t>("widths", item);
    if (w == 0) throw ConfigError("layer widths must be positive");
    out.push_back(w);
    s = comma == std::string_view::npos ? std::string_view{} : s.substr(comma + 1);
  }
  return out;
}

Architecture architecture_from(const Config& cfg, std::size_t data_dim) {
  Architecture a;
  a.data_dim = data_dim;
  a.latent_dim = cfg.latent_dim;
  a.noise_dim = cfg.effective_noise_dim();
  a.sampler_noise_dim = cfg.effective_sampler_noise_dim();
  a.enc_data_hidden = parse_widths(cfg.enc_data_hidden);
  a.enc_noise_hidden = parse_widths(cfg.enc_noise_hidden);
  a.enc_comb_hidden = parse_widths(cfg.enc_comb_hidden);
  a.dec_hidden = parse_widths(cfg.dec_hidden);
  a.sampler_hidden = parse_widths(cfg.sampler_hidden);
  a.vae_enc_hidden = parse_widths(cfg.vae_enc_hidden);
  a.activation = parse_activation(cfg.activation);
  a.decoder_output = parse_activation(cfg.decoder_output);
  return a;
}

}  // namespace ldc
