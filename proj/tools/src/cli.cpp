#include <exception>
#include <map>
#include <memory>
#include <ostream>
#include <string>

#include <CLI11.hpp>

#include "ldcvae/errors.hpp"
#include "ldcvae_cli/cli.hpp"

namespace ldc::cli {

namespace {

using CommandFn = int (*)(const Config&, std::ostream&);

struct CommandSpec {
  std::string name;
  std::string help;
  CommandFn fn;
  bool reads_checkpoint;
};

const std::vector<CommandSpec>& commands() {
  static const std::vector<CommandSpec> cmds{
      {"train", "Train an LDC-VAE (or the baseline VAE) and write a checkpoint and report", cmd_train, false},
      {"sample", "Generate images through the sampler net and decoder", cmd_sample, true},
      {"reconstruct", "Reconstruct test images (reconstruction and original side by side)", cmd_reconstruct, true},
      {"interpolate", "Decode linear blends between encoded pairs of test images", cmd_interpolate, true},
      {"eval", "Reconstruction error, latent MMD and PCA export for a checkpoint", cmd_eval, true},
      {"svgd-demo", "Run SVGD on a closed-form 1-D target and dump trajectories", cmd_svgd_demo, false},
  };
  return cmds;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& c : commands()) v.push_back(c.name);
    return v;
  }();
  return names;
}

std::string flag_name(std::string_view key) {
  std::string f = "--";
  for (char c : key) f += c == '_' ? '-' : c;
  return f;
}

Config resolve_config(const Overrides& o, bool use_checkpoint_cfg) {
  auto layer = [&](Config& cfg) {
    if (o.config_file) apply_config_file(cfg, *o.config_file);
    for (const auto& [k, v] : o.flags) set_config_value(cfg, k, v);
  };
  Config cfg;
  if (use_checkpoint_cfg) {
    Config probe;
    layer(probe);
    std::filesystem::path saved = probe.checkpoint_path();
    saved += ".cfg";
    if (std::filesystem::exists(saved)) apply_config_file(cfg, saved);
  }
  layer(cfg);
  cfg.validate();
  return cfg;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"LDC-VAE: Stein-variational training of a latent-consistent autoencoder", "ldcvae"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  struct Parsed {
    CLI::App* app = nullptr;
    std::string config_file;
    std::map<std::string, std::string> values;
  };
  std::vector<std::unique_ptr<Parsed>> parsed;
  for (const auto& c : commands()) {
    auto p = std::make_unique<Parsed>();
    p->app = app.add_subcommand(c.name, c.help);
    p->app->add_option("--config", p->config_file, "key = value config file; flags override it");
    for (const auto& key : config_keys()) {
      p->app->add_option(flag_name(key.name), p->values[key.name], key.help);
    }
    parsed.push_back(std::move(p));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  for (std::size_t i = 0; i < parsed.size(); ++i) {
    const Parsed& p = *parsed[i];
    if (!p.app->parsed()) continue;
    const CommandSpec& spec = commands()[i];
    try {
      Overrides o;
      if (p.app->count("--config") > 0) o.config_file = p.config_file;
      for (const auto& key : config_keys()) {
        if (p.app->count(flag_name(key.name)) > 0) o.flags.emplace_back(key.name, p.values.at(key.name));
      }
      const Config cfg = resolve_config(o, spec.reads_checkpoint);
      return spec.fn(cfg, out);
    } catch (const NonFiniteError& e) {
      err << spec.name << ": non-finite value, aborted: " << e.what() << '\n';
      return kNonFinite;
    } catch (const std::logic_error& e) {
      // ConfigError, DimensionError, ContractError and friends.
      err << spec.name << ": " << e.what() << '\n';
      return kUsage;
    } catch (const std::runtime_error& e) {
      // ParseError and IoError.
      err << spec.name << ": " << e.what() << '\n';
      return kUsage;
    } catch (const std::exception& e) {
      err << spec.name << ": unexpected error: " << e.what() << '\n';
      return kFailure;
    }
  }
  return kUsage;
}

}  // namespace ldc::cli
