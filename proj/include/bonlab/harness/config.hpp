#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bonlab/diagnostics.hpp"
#include "bonlab/prm/experiment.hpp"
#include "bonlab/prm/features.hpp"
#include "bonlab/prm/loss.hpp"
#include "bonlab/selection.hpp"
#include "bonlab/synth.hpp"

namespace bonlab::harness {

/// Schema violation or invalid value in a configuration file (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Command {
  SimulateOracle,
  SimulateCorrelation,
  ValidateUnifiedLaw,
  Diagnose,
  TrainPrm,
  FailureExperiment,
  Strategies,
  IngestCheck,
};

std::optional<Command> parse_command(const std::string& name);
std::string to_string(Command command);
std::vector<std::string> command_names();

struct CurveSection {
  std::vector<int> n_grid{1, 5, 10, 15, 20, 30};
  int trials = 3;
};

struct DiagnosticsSection {
  double collapse_threshold = kDefaultCollapseThreshold;
  CorrelationMode mode = CorrelationMode::Pooled;
  int bins = 10;
};

/// Everything a recipe may read. Sections a command does not use keep their
/// defaults. Sub-seeds are derived from `seed`; sections carry no seeds.
struct ExperimentConfig {
  Command command = Command::SimulateOracle;
  std::uint64_t seed = 1;
  std::string output_dir;
  unsigned threads = 1;

  PopulationSpec population;
  CurveSection curve;
  std::vector<double> rho_values{-0.5, 0.0, 0.5, 0.9};
  std::vector<Strategy> strategies{Strategy::oracle(),    Strategy::random(),     Strategy::mean(),
                                   Strategy::lcb(0.5),    Strategy::ucb(0.5),     Strategy::var_filter(0.2),
                                   Strategy::snr()};
  DiagnosticsSection diagnostics;
  /// Scores CSV; empty when the command synthesises its data.
  std::filesystem::path scores_csv;

  prm::FeaturePopulationSpec features = prm::default_failure_population();
  int hidden = 16;
  prm::TrainConfig train = prm::default_failure_experiment().nll;
  prm::TrainConfig failure_mse = prm::default_failure_experiment().mse;
  prm::TrainConfig failure_nll = prm::default_failure_experiment().nll;
};

/// Defaults for `command`, with the seed-derived sub-seeds applied.
ExperimentConfig default_config(Command command);

/// Parses YAML text. Unknown keys, sections the command does not use, type
/// mismatches and invalid values all raise ConfigError before any work.
/// Relative input paths resolve against `base_dir`.
ExperimentConfig parse_config(Command command, const std::string& yaml_text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(Command command, const std::filesystem::path& path);

/// Replaces the global seed and re-derives every sub-seed.
void apply_seed(ExperimentConfig& config, std::uint64_t seed);

/// Stream tags used to derive sub-seeds from the global seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept;

/// The effective configuration of the sections `config.command` uses, with
/// sorted keys. Its SHA-256 is the manifest's config hash.
nlohmann::json config_to_json(const ExperimentConfig& config);

}  // namespace bonlab::harness
