// bonlab: command-line front end for the Best-of-N scaling experiments.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bonlab/harness/config.hpp"
#include "bonlab/harness/recipes.hpp"

#ifndef BONLAB_VERSION
#define BONLAB_VERSION "dev"
#endif

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> threads;
};

std::filesystem::path resolve_out_dir(const Options& opt, const bonlab::harness::ExperimentConfig& config) {
  if (!opt.out.empty()) return opt.out;
  if (const char* env = std::getenv("BONLAB_OUT_DIR"); env != nullptr && *env != '\0') return env;
  if (!config.output_dir.empty()) return config.output_dir;
  return std::filesystem::path("bonlab_out") / to_string(config.command);
}

int run(bonlab::harness::Command command, const Options& opt) {
  using namespace bonlab::harness;
  ExperimentConfig config;
  try {
    config = opt.config.empty() ? default_config(command) : load_config(command, opt.config);
    if (opt.seed) apply_seed(config, *opt.seed);
    if (opt.threads) {
      if (*opt.threads < 1) throw ConfigError("--threads must be >= 1");
      config.threads = *opt.threads;
    }
  } catch (const ConfigError& e) {
    std::cerr << "bonlab: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const auto out_dir = resolve_out_dir(opt, config);
    const RunManifest m = run_experiment(config, out_dir, BONLAB_VERSION);
    std::cout << m.command << ": wrote " << m.outputs.size() << " files to " << out_dir.string() << '\n';
    return EXIT_SUCCESS;
  } catch (const ConfigError& e) {
    std::cerr << "bonlab: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "bonlab: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Best-of-N scaling-law experiments"};
  app.set_version_flag("--version", BONLAB_VERSION);
  app.require_subcommand(1);

  Options opt;
  for (const auto& name : bonlab::harness::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config, "YAML configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "Global seed (overrides the config)");
    sub->add_option("--out", opt.out, "Output directory (overrides BONLAB_OUT_DIR and the config)");
    sub->add_option("--threads", opt.threads, "Worker threads");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  for (auto* sub : app.get_subcommands()) {
    return run(*bonlab::harness::parse_command(sub->get_name()), opt);
  }
  return kExitConfig;
}
