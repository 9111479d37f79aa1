#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ldcvae/checkpoint.hpp"
#include "ldcvae/config.hpp"
#include "ldcvae/svgd.hpp"
#include "ldcvae/trainer.hpp"

namespace ldc::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kNonFinite = 3 };

/// Parses argv (argv[0] is the program name) and runs one subcommand.
/// Diagnostics go to err; exceptions never escape.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

const std::vector<std::string>& command_names();

// "batch_size" -> "--batch-size"
std::string flag_name(std::string_view key);

struct Overrides {
  std::optional<std::filesystem::path> config_file;
  std::vector<std::pair<std::string, std::string>> flags;  // config key, raw value
};

/// defaults < <checkpoint>.cfg (if wanted and present) < config file < flags.
Config resolve_config(const Overrides& o, bool use_checkpoint_cfg);

int cmd_train(const Config& cfg, std::ostream& out);
int cmd_sample(const Config& cfg, std::ostream& out);
int cmd_reconstruct(const Config& cfg, std::ostream& out);
int cmd_interpolate(const Config& cfg, std::ostream& out);
int cmd_eval(const Config& cfg, std::ostream& out);
int cmd_svgd_demo(const Config& cfg, std::ostream& out);

struct LoadedModel {
  Architecture arch;
  AnyModel model;
};

// Rebuilds the configured architecture and fills it from cfg.checkpoint_path().
LoadedModel load_model(const Config& cfg);

// Output width of the decoder stored in a checkpoint.
std::size_t checkpoint_data_dim(const std::vector<NamedTensor>& records);

// k / (steps - 1) for k = 0 .. steps-1.
std::vector<double> blend_weights(std::size_t steps);
// Row k is (1 - w_k) a + w_k b.
Tensor interpolate_latents(const Tensor& a, const Tensor& b, std::size_t steps);

// Closed-form 1-D demo target: N(demo_mean, demo_std^2), or an equal mixture
// of N(+-demo_mode_sep, demo_mode_std^2).
ScoreFunction demo_score(const Config& cfg);
Tensor demo_initial_particles(const Config& cfg);
// Runs the demo transport; writes the trajectory CSV when os is non-null.
Tensor run_svgd_demo(const Config& cfg, std::ostream* trajectory);

// Columns of the eval metrics CSV, in order.
const std::vector<std::string>& eval_columns();

}  // namespace ldc::cli
