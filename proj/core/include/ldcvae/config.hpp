#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ldcvae/models.hpp"

namespace ldc {

/// Every tunable of a run. Each field is one key of the key=value config file
/// and one --flag of the CLI; config_keys() is the single registry of both.
struct Config {
  // run
  std::string mode = "ldc";  // ldc | baseline-vae
  std::uint64_t seed = 1;
  std::string out_dir = "runs/default";
  std::string checkpoint;  // empty: <out_dir>/model.ckpt
  std::string report;      // empty: <out_dir>/report.csv
  std::size_t checkpoint_every = 0;

  // data
  std::string dataset = "mnist";  // mnist | synth2d
  std::string mnist_dir = "data/mnist";
  std::size_t train_limit = 0;
  std::size_t test_limit = 0;
  std::string synth_kind = "gaussian_grid";
  std::size_t synth_grid = 3;
  double synth_std = 0.1;
  std::size_t synth_train_n = 900;
  std::size_t synth_test_n = 900;

  // architecture
  std::size_t latent_dim = 16;
  std::size_t noise_dim = 0;          // 0: same as latent_dim
  std::size_t sampler_noise_dim = 0;  // 0: same as latent_dim
  std::string enc_data_hidden = "256";
  std::string enc_noise_hidden = "64";
  std::string enc_comb_hidden = "128";
  std::string dec_hidden = "128,256";
  std::string sampler_hidden = "128,128";
  std::string vae_enc_hidden = "256,128";
  std::string activation = "relu";
  std::string decoder_output = "sigmoid";

  // optimization
  std::size_t batch_size = 100;
  std::size_t epochs = 10;
  double lr_encoder = 1e-3;
  double lr_decoder = 1e-3;
  double lr_sampler = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  // Stein / Gibbs
  std::string sigma2_mode = "norm";          // norm | sqnorm
  std::string bandwidth = "median";          // median | fixed
  double bandwidth_value = 1.0;
  std::string sampler_kernel_particles = "self";  // self | encoder

  // evaluation and generation
  std::size_t metric_samples = 500;
  std::size_t sample_count = 64;
  std::size_t interp_pairs = 8;
  std::size_t interp_steps = 10;

  // svgd-demo
  std::string demo_target = "gauss";  // gauss | mixture
  double demo_mean = 3.0;
  double demo_std = 2.0;
  double demo_mode_sep = 4.0;
  double demo_mode_std = 1.0;
  std::size_t demo_particles = 200;
  std::size_t demo_steps = 500;
  double demo_step_size = 1e-2;
  double demo_init_mean = 0.0;
  double demo_init_std = 1.0;
  std::size_t demo_dump_every = 1;

  std::filesystem::path checkpoint_path() const;
  std::filesystem::path report_path() const;
  std::size_t effective_noise_dim() const { return noise_dim ? noise_dim : latent_dim; }
  std::size_t effective_sampler_noise_dim() const { return sampler_noise_dim ? sampler_noise_dim : latent_dim; }

  // Rejects out-of-range values and unknown enumerators.
  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, std::string_view)> set;
};

const std::vector<ConfigKey>& config_keys();
const ConfigKey* find_config_key(std::string_view name);

void set_config_value(Config& cfg, std::string_view key, std::string_view value);

// "key = value" lines; '#' starts a comment. Unknown keys are errors.
void apply_config_text(Config& cfg, std::string_view text, const std::string& source = "<text>");
void apply_config_file(Config& cfg, const std::filesystem::path& path);
std::string config_to_text(const Config& cfg);
void write_config_file(const Config& cfg, const std::filesystem::path& path);

std::vector<std::size_t> parse_widths(std::string_view s);
Architecture architecture_from(const Config& cfg, std::size_t data_dim);

}  // namespace ldc
