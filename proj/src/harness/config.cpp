#include "bonlab/harness/config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "bonlab/rng.hpp"

namespace bonlab::harness {
namespace {

constexpr std::array<std::pair<Command, const char*>, 8> kCommands = {{
    {Command::SimulateOracle, "simulate-oracle"},
    {Command::SimulateCorrelation, "simulate-correlation"},
    {Command::ValidateUnifiedLaw, "validate-unified-law"},
    {Command::Diagnose, "diagnose"},
    {Command::TrainPrm, "train-prm"},
    {Command::FailureExperiment, "failure-experiment"},
    {Command::Strategies, "strategies"},
    {Command::IngestCheck, "ingest-check"},
}};

// Sub-seed tags.
constexpr std::uint64_t kPopulationTag = 1;
constexpr std::uint64_t kFeatureTag = 3;
constexpr std::uint64_t kTrainTag = 4;
constexpr std::uint64_t kFailureTag = 5;

std::set<std::string> sections_for(Command c) {
  switch (c) {
    case Command::SimulateOracle: return {"population", "curve"};
    case Command::SimulateCorrelation: return {"population", "curve", "correlation"};
    case Command::ValidateUnifiedLaw: return {"population", "curve", "diagnostics"};
    case Command::Diagnose: return {"population", "input", "diagnostics"};
    case Command::TrainPrm: return {"features", "model", "train", "diagnostics"};
    case Command::FailureExperiment: return {"features", "model", "failure", "diagnostics"};
    case Command::Strategies: return {"population", "input", "curve", "strategies"};
    case Command::IngestCheck: return {"input"};
  }
  return {};
}

template <class T>
std::string type_name() {
  if constexpr (std::is_same_v<T, bool>) return "a boolean";
  else if constexpr (std::is_integral_v<T>) return "an integer";
  else if constexpr (std::is_floating_point_v<T>) return "a number";
  else if constexpr (std::is_same_v<T, std::string>) return "a string";
  else return "a list";
}

// Reads keys from one YAML mapping and rejects any key it was not asked for.
class MapReader {
 public:
  MapReader(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(where() + "expected a mapping");
  }

  template <class T>
  void read(const std::string& key, T& out) {
    known_.insert(key);
    if (!node_ || node_.IsNull()) return;
    const YAML::Node v = node_[key];
    if (!v) return;
    try {
      if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.IsScalar()) throw YAML::BadConversion(v.Mark());
        out = v.as<T>();
      } else {
        out = v.as<T>();
      }
    } catch (const YAML::Exception&) {
      throw ConfigError(where() + "'" + key + "' must be " + type_name<T>());
    }
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  MapReader section(const std::string& key) {
    known_.insert(key);
    return MapReader(node_ && node_.IsMap() ? node_[key] : YAML::Node(), child_path(key));
  }

  YAML::Node raw(const std::string& key) {
    known_.insert(key);
    return node_ && node_.IsMap() ? node_[key] : YAML::Node();
  }

  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!known_.contains(key)) throw ConfigError(where() + "unknown key '" + key + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config: " : path_ + ": "; }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> known_;
};

void read_population(MapReader r, PopulationSpec& p) {
  r.read("n_users", p.n_users);
  r.read("queries_per_user", p.queries_per_user);
  r.read("candidates_per_query", p.candidates_per_query);
  r.read("reward_mean", p.base_reward.mean);
  r.read("reward_sigma", p.base_reward.sigma);
  r.read("pred_sigma", p.pred_sigma);
  r.read("collapse_fraction", p.collapse_fraction);
  r.read("hacking_fraction", p.hacking_fraction);
  r.read("rho_plus", p.rho_plus);
  r.read("rho_minus", p.rho_minus);
  r.read("rho_collapsed", p.rho_collapsed);
  r.read("collapsed_pred_scale", p.collapsed_pred_scale);
  r.read("rho_spread", p.rho_spread);
  r.read("user_sigma_spread", p.user_sigma_spread);
  r.read("emit_variance", p.emit_variance);
  std::string assignment = p.collapse_assignment == CollapseAssignment::Random ? "random" : "lowest_label_variance";
  r.read("collapse_assignment", assignment);
  if (assignment == "random") p.collapse_assignment = CollapseAssignment::Random;
  else if (assignment == "lowest_label_variance") p.collapse_assignment = CollapseAssignment::LowestLabelVariance;
  else throw ConfigError(r.child_path("collapse_assignment") + ": expected random or lowest_label_variance");
  r.finish();
}

void read_train(MapReader r, prm::TrainConfig& t, bool allow_loss) {
  if (allow_loss) {
    std::string loss = to_string(t.loss_kind);
    r.read("loss", loss);
    try {
      t.loss_kind = prm::parse_loss_kind(loss);
    } catch (const std::invalid_argument&) {
      throw ConfigError(r.child_path("loss") + ": expected mse or nll");
    }
  }
  r.read("lambda", t.lambda);
  r.read("tau", t.tau);
  r.read("margin", t.margin);
  r.read("weight_lo", t.weight_lo);
  r.read("weight_hi", t.weight_hi);
  r.read("learning_rate", t.learning_rate);
  r.read("epochs", t.epochs);
  r.read("batch_size", t.batch_size);
  r.read("patience", t.patience);
  r.read("warmup_fraction", t.warmup_fraction);
  r.read("momentum", t.momentum);
  r.read("weight_decay", t.weight_decay);
  r.read("validation_fraction", t.validation_fraction);
  MapReader init = r.section("init");
  init.read("backbone_scale", t.init.backbone_scale);
  init.read("head_scale", t.init.head_scale);
  init.read("initial_mu", t.init.initial_mu);
  init.read("initial_var", t.init.initial_var);
  init.finish();
  r.finish();
}

void read_features(MapReader r, prm::FeaturePopulationSpec& f) {
  r.read("feature_dim", f.feature_dim);
  r.read("train_queries", f.train_queries);
  r.read("train_candidates", f.train_candidates);
  r.read("eval_queries", f.eval_queries);
  r.read("eval_candidates", f.eval_candidates);
  const YAML::Node regimes = r.raw("regimes");
  if (regimes && !regimes.IsNull()) {
    if (!regimes.IsSequence()) throw ConfigError(r.child_path("regimes") + ": expected a list");
    f.regimes.clear();
    for (std::size_t i = 0; i < regimes.size(); ++i) {
      MapReader rr(regimes[i], r.child_path("regimes") + "[" + std::to_string(i) + "]");
      prm::FeatureRegime g;
      rr.read("name", g.name);
      rr.read("n_users", g.n_users);
      rr.read("label_mean", g.label_mean);
      rr.read("label_std", g.label_std);
      rr.read("signal_fraction", g.signal_fraction);
      rr.finish();
      f.regimes.push_back(std::move(g));
    }
  }
  r.finish();
}

template <class Fn>
void checked(const std::string& what, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

void validate(const ExperimentConfig& c) {
  const auto used = sections_for(c.command);
  if (used.contains("population")) checked("population", [&] { validate_population_spec(c.population); });
  if (used.contains("curve")) {
    checked("curve", [&] { validate_n_grid(c.curve.n_grid); });
    if (c.curve.trials < 1) throw ConfigError("curve: trials must be >= 1");
  }
  if (used.contains("correlation")) {
    if (c.rho_values.empty()) throw ConfigError("correlation: rho_values must be non-empty");
    for (double r : c.rho_values) {
      if (!(r >= -1.0 && r <= 1.0)) throw ConfigError("correlation: rho values must lie in [-1,1]");
    }
  }
  if (used.contains("strategies") && c.strategies.empty()) throw ConfigError("strategies: list must be non-empty");
  if (used.contains("diagnostics")) {
    if (!(c.diagnostics.collapse_threshold > -1.0 && c.diagnostics.collapse_threshold < 1.0)) {
      throw ConfigError("diagnostics: collapse_threshold must lie in (-1,1)");
    }
    if (c.diagnostics.bins < 3) throw ConfigError("diagnostics: bins must be >= 3");
  }
  if (used.contains("features")) checked("features", [&] { prm::validate_feature_population_spec(c.features); });
  if (used.contains("model") && c.hidden < 1) throw ConfigError("model: hidden must be >= 1");
  if (used.contains("train")) checked("train", [&] { prm::validate_train_config(c.train); });
  if (used.contains("failure")) {
    checked("failure.mse", [&] { prm::validate_train_config(c.failure_mse); });
    checked("failure.nll", [&] { prm::validate_train_config(c.failure_nll); });
  }
  if (c.command == Command::IngestCheck && c.scores_csv.empty()) {
    throw ConfigError("input: scores_csv is required for ingest-check");
  }
  if (c.threads < 1) throw ConfigError("config: threads must be >= 1");
}

nlohmann::json train_json(const prm::TrainConfig& t) {
  return {{"loss", prm::to_string(t.loss_kind)},
          {"lambda", t.lambda},
          {"tau", t.tau},
          {"margin", t.margin},
          {"weight_lo", t.weight_lo},
          {"weight_hi", t.weight_hi},
          {"learning_rate", t.learning_rate},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"patience", t.patience},
          {"warmup_fraction", t.warmup_fraction},
          {"momentum", t.momentum},
          {"weight_decay", t.weight_decay},
          {"validation_fraction", t.validation_fraction},
          {"seed", t.seed},
          {"init",
           {{"backbone_scale", t.init.backbone_scale},
            {"head_scale", t.init.head_scale},
            {"initial_mu", t.init.initial_mu},
            {"initial_var", t.init.initial_var}}}};
}

}  // namespace

std::optional<Command> parse_command(const std::string& name) {
  for (const auto& [c, n] : kCommands) {
    if (name == n) return c;
  }
  return std::nullopt;
}

std::string to_string(Command command) {
  for (const auto& [c, n] : kCommands) {
    if (c == command) return n;
  }
  return "unknown";
}

std::vector<std::string> command_names() {
  std::vector<std::string> out;
  for (const auto& [c, n] : kCommands) out.emplace_back(n);
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept { return mix64(seed ^ mix64(tag)); }

void apply_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.population.seed = derive_seed(seed, kPopulationTag);
  config.features.seed = derive_seed(seed, kFeatureTag);
  config.train.seed = derive_seed(seed, kTrainTag);
  config.failure_mse.seed = derive_seed(seed, kFailureTag);
  config.failure_nll.seed = derive_seed(seed, kFailureTag);
}

ExperimentConfig default_config(Command command) {
  ExperimentConfig c;
  c.command = command;
  if (command == Command::ValidateUnifiedLaw || command == Command::Diagnose ||
      command == Command::Strategies) {
    c.population.collapse_fraction = 0.2;
    c.population.hacking_fraction = 0.3;
  }
  if (command == Command::Strategies) {
    c.population.emit_variance = true;
    c.population.n_users = 50;
  }
  apply_seed(c, c.seed);
  return c;
}

ExperimentConfig parse_config(Command command, const std::string& yaml_text,
                              const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: not valid YAML: ") + e.what());
  }
  ExperimentConfig c = default_config(command);
  MapReader top(root, "");
  std::uint64_t seed = c.seed;
  top.read("seed", seed);
  top.read("output_dir", c.output_dir);
  top.read("threads", c.threads);

  const auto used = sections_for(command);
  for (const char* name : {"population", "curve", "correlation", "strategies", "diagnostics", "input",
                           "features", "model", "train", "failure"}) {
    if (top.has(name) && !used.contains(name)) {
      throw ConfigError(std::string("config: section '") + name + "' is not used by " + to_string(command));
    }
  }

  if (used.contains("population")) read_population(top.section("population"), c.population);
  if (used.contains("curve")) {
    MapReader r = top.section("curve");
    r.read("n_grid", c.curve.n_grid);
    r.read("trials", c.curve.trials);
    r.finish();
  }
  if (used.contains("correlation")) {
    MapReader r = top.section("correlation");
    r.read("rho_values", c.rho_values);
    r.finish();
  }
  if (used.contains("strategies") && top.has("strategies")) {
    std::vector<std::string> names;
    top.read("strategies", names);
    c.strategies.clear();
    for (const auto& n : names) {
      try {
        c.strategies.push_back(parse_strategy(n));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("strategies: ") + e.what());
      }
    }
  }
  if (used.contains("diagnostics")) {
    MapReader r = top.section("diagnostics");
    r.read("collapse_threshold", c.diagnostics.collapse_threshold);
    std::string mode = to_string(c.diagnostics.mode);
    r.read("mode", mode);
    try {
      c.diagnostics.mode = parse_correlation_mode(mode);
    } catch (const std::invalid_argument&) {
      throw ConfigError("diagnostics.mode: expected pooled or averaged");
    }
    r.read("bins", c.diagnostics.bins);
    r.finish();
  }
  if (used.contains("input")) {
    MapReader r = top.section("input");
    std::string path;
    r.read("scores_csv", path);
    r.finish();
    if (!path.empty()) {
      c.scores_csv = std::filesystem::path(path);
      if (c.scores_csv.is_relative() && !base_dir.empty()) c.scores_csv = base_dir / c.scores_csv;
    }
  }
  if (used.contains("features")) read_features(top.section("features"), c.features);
  if (used.contains("model")) {
    MapReader r = top.section("model");
    r.read("hidden", c.hidden);
    r.finish();
  }
  if (used.contains("train")) read_train(top.section("train"), c.train, true);
  if (used.contains("failure")) {
    MapReader r = top.section("failure");
    read_train(r.section("mse"), c.failure_mse, false);
    read_train(r.section("nll"), c.failure_nll, false);
    r.finish();
  }
  top.finish();

  apply_seed(c, seed);
  validate(c);
  return c;
}

ExperimentConfig load_config(Command command, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(command, ss.str(), path.parent_path());
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  const auto used = sections_for(c.command);
  nlohmann::json j;
  j["command"] = to_string(c.command);
  j["seed"] = c.seed;
  if (used.contains("population")) {
    const auto& p = c.population;
    j["population"] = {{"n_users", p.n_users},
                       {"queries_per_user", p.queries_per_user},
                       {"candidates_per_query", p.candidates_per_query},
                       {"reward_mean", p.base_reward.mean},
                       {"reward_sigma", p.base_reward.sigma},
                       {"pred_sigma", p.pred_sigma},
                       {"collapse_fraction", p.collapse_fraction},
                       {"hacking_fraction", p.hacking_fraction},
                       {"rho_plus", p.rho_plus},
                       {"rho_minus", p.rho_minus},
                       {"rho_collapsed", p.rho_collapsed},
                       {"collapsed_pred_scale", p.collapsed_pred_scale},
                       {"rho_spread", p.rho_spread},
                       {"user_sigma_spread", p.user_sigma_spread},
                       {"collapse_assignment", p.collapse_assignment == CollapseAssignment::Random
                                                   ? "random"
                                                   : "lowest_label_variance"},
                       {"emit_variance", p.emit_variance},
                       {"seed", p.seed}};
  }
  if (used.contains("curve")) j["curve"] = {{"n_grid", c.curve.n_grid}, {"trials", c.curve.trials}};
  if (used.contains("correlation")) j["correlation"] = {{"rho_values", c.rho_values}};
  if (used.contains("strategies")) {
    std::vector<std::string> names;
    for (const auto& s : c.strategies) names.push_back(to_string(s));
    j["strategies"] = names;
  }
  if (used.contains("diagnostics")) {
    j["diagnostics"] = {{"collapse_threshold", c.diagnostics.collapse_threshold},
                        {"mode", to_string(c.diagnostics.mode)},
                        {"bins", c.diagnostics.bins}};
  }
  if (used.contains("input")) j["input"] = {{"scores_csv", c.scores_csv.generic_string()}};
  if (used.contains("features")) {
    const auto& f = c.features;
    auto regimes = nlohmann::json::array();
    for (const auto& g : f.regimes) {
      regimes.push_back({{"name", g.name},
                         {"n_users", g.n_users},
                         {"label_mean", g.label_mean},
                         {"label_std", g.label_std},
                         {"signal_fraction", g.signal_fraction}});
    }
    j["features"] = {{"feature_dim", f.feature_dim},     {"train_queries", f.train_queries},
                     {"train_candidates", f.train_candidates}, {"eval_queries", f.eval_queries},
                     {"eval_candidates", f.eval_candidates},   {"regimes", regimes},
                     {"seed", f.seed}};
  }
  if (used.contains("model")) j["model"] = {{"hidden", c.hidden}};
  if (used.contains("train")) j["train"] = train_json(c.train);
  if (used.contains("failure")) j["failure"] = {{"mse", train_json(c.failure_mse)}, {"nll", train_json(c.failure_nll)}};
  return j;
}

}  // namespace bonlab::harness
