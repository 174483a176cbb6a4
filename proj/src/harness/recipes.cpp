#include "bonlab/harness/recipes.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "bonlab/diagnostics.hpp"
#include "bonlab/harness/csv.hpp"
#include "bonlab/harness/model_io.hpp"
#include "bonlab/parallel.hpp"
#include "bonlab/prm/experiment.hpp"
#include "bonlab/prm/train.hpp"
#include "bonlab/scaling.hpp"
#include "bonlab/selection.hpp"
#include "bonlab/synth.hpp"

namespace bonlab::harness {
namespace {

using nlohmann::json;

constexpr std::uint64_t kCurveTag = 2;

// Collects output files and their digests.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& rel, const std::string& content) {
    const auto path = dir_ / rel;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    out.close();
    if (!out) throw std::runtime_error("error writing " + path.string());
    records_.push_back({rel, sha256_hex(content), content.size()});
  }

  void write_json(const std::string& rel, const json& j) { write(rel, j.dump(2) + "\n"); }

  const std::vector<OutputRecord>& records() const noexcept { return records_; }

 private:
  std::filesystem::path dir_;
  std::vector<OutputRecord> records_;
};

std::string curves_csv(const std::vector<ScalingCurve>& curves) {
  std::ostringstream ss;
  write_curves_csv(ss, curves);
  return ss.str();
}

CurveRequest curve_request(const ExperimentConfig& c) {
  return {c.curve.n_grid, c.curve.trials, derive_seed(c.seed, kCurveTag)};
}

json fit_json(const ScaleFit& f) { return {{"a", f.mu_bar}, {"b", f.scale}, {"r_squared", f.r_squared}}; }

json score_json(const PredictionScore& s) { return {{"rel_mae", s.rel_mae}, {"r_squared", s.r_squared}}; }

json report_summary(const DiagnosticReport& r) {
  return {{"alpha", r.alpha},
          {"beta", r.beta},
          {"rho_plus_mean", r.rho_plus_mean},
          {"rho_minus_mean", r.rho_minus_mean},
          {"rho_collapsed_mean", r.rho_collapsed_mean},
          {"rho_eff", effective_correlation(r.alpha, r.beta, r.rho_plus_mean, r.rho_minus_mean)},
          {"collapse_threshold", r.collapse_threshold},
          {"mode", to_string(r.mode)},
          {"n_users", r.per_user.size()},
          {"n_collapsed", r.n_collapsed},
          {"n_counted_queries", r.n_counted_queries},
          {"n_hacked", r.n_hacked}};
}

std::string per_query_csv(const DiagnosticReport& r) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& q : r.per_query) {
    rows.push_back({q.user_id, q.query_id, format_real(q.rho.value), q.rho.degenerate ? "1" : "0",
                    q.counted ? "1" : "0", q.hacked ? "1" : "0"});
  }
  std::ostringstream ss;
  write_table_csv(ss, {"user_id", "query_id", "rho", "degenerate", "counted", "hacked"}, rows);
  return ss.str();
}

std::vector<UserDataset> input_or_population(const ExperimentConfig& c) {
  if (!c.scores_csv.empty()) return ingest_scores_csv(c.scores_csv);
  return generate_population(c.population, c.threads).users;
}

void run_simulate_oracle(const ExperimentConfig& c, OutputSet& out) {
  const auto pop = generate_population(c.population, c.threads);
  const ScalingCurve observed = estimate_utility_curve(pop.users, Strategy::oracle(), curve_request(c), c.threads);
  const ScaleFit fit = calibrate_scale(observed);
  const double bound = theoretical_scale(c.population.base_reward.sigma);
  const auto grid = observed.n_grid();
  out.write("curves.csv", curves_csv({observed, predict_oracle(fit.mu_bar, fit.scale, grid, "oracle_fit"),
                                      predict_oracle(c.population.base_reward.mean, bound, grid,
                                                     "subgaussian_bound")}));
  out.write_json("fit.json", {{"fit", fit_json(fit)},
                              {"reward_mean", c.population.base_reward.mean},
                              {"reward_sigma", c.population.base_reward.sigma},
                              {"theoretical_scale", bound},
                              {"slope_within_bound", fit.scale <= bound}});
}

void run_simulate_correlation(const ExperimentConfig& c, OutputSet& out) {
  const CurveRequest req = curve_request(c);
  // Bivariate populations share true scores across rho, so one oracle curve serves all.
  const auto base = generate_bivariate_population(c.population, 0.0, c.threads);
  const ScalingCurve oracle = estimate_utility_curve(base.users, Strategy::oracle(), req, c.threads);
  const ScaleFit oracle_fit = calibrate_scale(oracle);
  const double mu_bar = mean_true_score(base.users);

  std::vector<ScalingCurve> curves{oracle};
  json rows = json::array();
  for (double rho : c.rho_values) {
    const auto pop = generate_bivariate_population(c.population, rho, c.threads);
    const ScalingCurve mean = estimate_utility_curve(pop.users, Strategy::mean(), req, c.threads);
    const ScaleFit fit = calibrate_scale(mean);
    const std::string tag = "rho=" + format_real(rho);
    curves.emplace_back("mean@" + tag, std::vector<CurvePoint>(mean.points().begin(), mean.points().end()));
    std::vector<CurvePoint> law;
    for (int n : mean.n_grid()) {
      law.push_back({n, mu_bar + rho * oracle_fit.scale * std::sqrt(std::log(static_cast<double>(n))), 1});
    }
    curves.emplace_back("law@" + tag, std::move(law));
    rows.push_back({{"rho", rho},
                    {"fit", fit_json(fit)},
                    {"slope_ratio", fit.scale / oracle_fit.scale},
                    {"predicted_slope", rho * oracle_fit.scale}});
  }
  out.write("curves.csv", curves_csv(curves));
  out.write_json("correlation.json", {{"oracle_fit", fit_json(oracle_fit)}, {"mu_bar", mu_bar}, {"sweep", rows}});
}

void run_validate_unified_law(const ExperimentConfig& c, OutputSet& out) {
  const auto pop = generate_population(c.population, c.threads);
  const DiagnosticReport report =
      compute_report(pop.users, c.diagnostics.collapse_threshold, c.diagnostics.mode, c.threads);
  const CurveRequest req = curve_request(c);
  const ScalingCurve oracle = estimate_utility_curve(pop.users, Strategy::oracle(), req, c.threads);
  const ScalingCurve mean = estimate_utility_curve(pop.users, Strategy::mean(), req, c.threads);
  const ScaleFit calib = calibrate_scale(oracle);

  ScalingLawParams params;
  params.mu_bar = mean_true_score(pop.users);
  params.scale = calib.scale;
  params.alpha = report.alpha;
  params.beta = report.beta;
  params.rho_plus = report.rho_plus_mean;
  params.rho_minus = report.rho_minus_mean;
  params.rho_collapsed = report.rho_collapsed_mean;
  const auto grid = mean.n_grid();
  const ScalingCurve unified = predict_unified(params, grid);
  const ScalingCurve refined = predict_refined(params, grid);

  out.write("curves.csv", curves_csv({oracle, mean, unified, refined}));
  out.write_json("report.json",
                 {{"generated",
                   {{"alpha", c.population.collapse_fraction},
                    {"beta", c.population.hacking_fraction},
                    {"rho_plus", c.population.rho_plus},
                    {"rho_minus", c.population.rho_minus}}},
                  {"measured", report_summary(report)},
                  {"calibration", fit_json(calib)},
                  {"mu_bar", params.mu_bar},
                  {"unified_law", score_json(score_prediction(unified, mean))},
                  {"refined_law", score_json(score_prediction(refined, mean))}});
  std::vector<std::vector<std::string>> rows;
  for (std::size_t u = 0; u < report.per_user.size(); ++u) {
    const auto& r = report.per_user[u];
    rows.push_back({r.user_id, format_real(r.rho.value), r.rho.degenerate ? "1" : "0", r.collapsed ? "1" : "0",
                    pop.user_collapsed[u] ? "1" : "0"});
  }
  std::ostringstream ss;
  write_table_csv(ss, {"user_id", "rho", "degenerate", "collapsed", "generated_collapsed"}, rows);
  out.write("per_user.csv", ss.str());
}

void run_diagnose(const ExperimentConfig& c, OutputSet& out) {
  const auto datasets = input_or_population(c);
  const DiagnosticReport report =
      compute_report(datasets, c.diagnostics.collapse_threshold, c.diagnostics.mode, c.threads);

  json j{{"diagnostics", report_summary(report)}};
  bool all_var = true;
  for (const auto& ds : datasets) {
    for (const auto& pool : ds.pools()) all_var = all_var && pool.has_variances();
  }
  if (all_var) {
    const Correlation ve = variance_error_correlation(datasets);
    j["variance_error_spearman"] = {{"value", ve.value}, {"degenerate", ve.degenerate}};
  }
  if (datasets.size() >= 2) {
    json groups = json::array();
    for (const auto& g : label_variance_split(datasets, report.per_user_rho(), c.diagnostics.collapse_threshold)) {
      groups.push_back({{"group", g.group},
                        {"n_users", g.n_users},
                        {"mean_label_std", g.mean_label_std},
                        {"collapse_rate", g.collapse_rate}});
    }
    j["label_variance_split"] = groups;
  }
  out.write_json("report.json", j);

  // Assumption checks need enough pairs per bin; users below that get empty cells.
  const std::size_t min_pairs = static_cast<std::size_t>(c.diagnostics.bins) * 5;
  std::vector<std::vector<std::string>> rows(datasets.size());
  parallel_for(datasets.size(), c.threads, [&](std::size_t u) {
    const auto& ds = datasets[u];
    const auto& r = report.per_user[u];
    std::vector<double> ys;
    for (const auto& pool : ds.pools()) {
      for (const auto& cand : pool.candidates()) ys.push_back(cand.true_score);
    }
    std::string sg, slope, r2;
    if (ds.candidate_count() >= min_pairs) {
      const AssumptionCheck a = check_assumptions(ds, c.diagnostics.bins);
      sg = format_real(a.subgaussian_sigma_hat);
      slope = format_real(a.linearity_slope);
      r2 = format_real(a.linearity_r2);
    }
    rows[u] = {r.user_id, format_real(r.rho.value), r.rho.degenerate ? "1" : "0", r.collapsed ? "1" : "0",
               format_real(stddev(ys)), sg, slope, r2};
  });
  std::ostringstream ss;
  write_table_csv(ss, {"user_id", "rho", "degenerate", "collapsed", "label_std", "subgaussian_sigma",
                       "linearity_slope", "linearity_r2"},
                  rows);
  out.write("per_user.csv", ss.str());
  out.write("per_query.csv", per_query_csv(report));
}

void run_train_prm(const ExperimentConfig& c, OutputSet& out) {
  const auto population = prm::generate_feature_population(c.features, c.threads);
  const std::size_t n = population.size();
  std::vector<std::optional<prm::TrainResult>> results(n);
  std::vector<std::optional<UserDataset>> scored(n);
  parallel_for(n, c.threads, [&](std::size_t u) {
    prm::TrainConfig tc = c.train;
    tc.seed = derive_seed(c.train.seed, u);
    results[u] = prm::train_user_rm(population[u].train, tc, c.hidden);
    scored[u] = prm::score_dataset(results[u]->model, population[u].eval);
  });

  std::vector<UserDataset> eval_sets;
  std::vector<std::vector<std::string>> history_rows;
  json users = json::array();
  for (std::size_t u = 0; u < n; ++u) {
    const auto& id = population[u].train.user_id();
    const auto& res = *results[u];
    out.write("models/" + id + ".json", model_to_json(res.model));
    for (const auto& e : res.history.epochs) {
      history_rows.push_back({id, std::to_string(e.epoch), format_real(e.data_term), format_real(e.contrastive),
                              format_real(e.train_loss), format_real(e.validation_loss)});
    }
    double var_sum = 0.0;
    std::size_t count = 0;
    for (const auto& pool : scored[u]->pools()) {
      for (const auto& cand : pool.candidates()) {
        var_sum += *cand.pred_var;
        ++count;
      }
    }
    users.push_back({{"user_id", id},
                     {"regime", population[u].regime},
                     {"label_std", population[u].label_std},
                     {"stop_epoch", res.history.stop_epoch},
                     {"best_epoch", res.history.best_epoch},
                     {"early_stopped", res.history.early_stopped},
                     {"mean_pred_var", var_sum / static_cast<double>(count)}});
    eval_sets.push_back(std::move(*scored[u]));
  }
  std::ostringstream hist;
  write_table_csv(hist, {"user_id", "epoch", "data_term", "contrastive", "train_loss", "validation_loss"},
                  history_rows);
  out.write("history.csv", hist.str());
  std::ostringstream scores;
  write_scores_csv(scores, eval_sets);
  out.write("eval_scores.csv", scores.str());
  const DiagnosticReport report =
      compute_report(eval_sets, c.diagnostics.collapse_threshold, c.diagnostics.mode, c.threads);
  out.write_json("report.json", {{"loss", prm::to_string(c.train.loss_kind)},
                                 {"diagnostics", report_summary(report)},
                                 {"users", users}});
}

void run_failure_experiment(const ExperimentConfig& c, OutputSet& out) {
  prm::FailureExperimentConfig fc;
  fc.population = c.features;
  fc.mse = c.failure_mse;
  fc.nll = c.failure_nll;
  fc.hidden = c.hidden;
  fc.collapse_threshold = c.diagnostics.collapse_threshold;
  fc.mode = c.diagnostics.mode;
  const prm::FailureExperimentResult r = prm::failure_mode_experiment(fc, c.threads);

  json by_regime = json::object();
  for (const auto& [name, v] : r.mean_var_nll_by_regime) by_regime[name] = v;
  out.write_json("failure.json", {{"alpha_mse", r.alpha_mse},
                                  {"alpha_nll", r.alpha_nll},
                                  {"beta_mse", r.beta_mse},
                                  {"beta_nll", r.beta_nll},
                                  {"mean_var_nll_by_regime", by_regime},
                                  {"mse", report_summary(r.mse_report)},
                                  {"nll", report_summary(r.nll_report)}});
  std::vector<std::vector<std::string>> rows;
  for (const auto& u : r.users) {
    rows.push_back({u.user_id, u.regime, format_real(u.label_std), format_real(u.rho_mse), format_real(u.rho_nll),
                    format_real(u.mean_var_nll), std::to_string(u.stop_epoch_mse),
                    std::to_string(u.stop_epoch_nll)});
  }
  std::ostringstream ss;
  write_table_csv(ss, {"user_id", "regime", "label_std", "rho_mse", "rho_nll", "mean_var_nll", "stop_epoch_mse",
                       "stop_epoch_nll"},
                  rows);
  out.write("users.csv", ss.str());
}

void run_strategies(const ExperimentConfig& c, OutputSet& out) {
  const auto datasets = input_or_population(c);
  bool preds = true, vars = true;
  for (const auto& ds : datasets) {
    for (const auto& pool : ds.pools()) {
      preds = preds && pool.has_predictions();
      vars = vars && pool.has_variances();
    }
  }
  const CurveRequest req = curve_request(c);
  std::vector<ScalingCurve> curves;
  json summary = json::object();
  for (const auto& s : c.strategies) {
    const std::string name = to_string(s);
    if (s.needs_predictions() && !preds) throw std::runtime_error("strategy " + name + " needs pred_mean for every candidate");
    if (s.needs_variances() && !vars) throw std::runtime_error("strategy " + name + " needs pred_var for every candidate");
    const ScalingCurve curve = estimate_utility_curve(datasets, s, req, c.threads);
    summary[name] = {{"utility_at_max_n", curve.points().back().utility},
                     {"utility_at_min_n", curve.points().front().utility}};
    curves.push_back(curve);
  }
  out.write("curves.csv", curves_csv(curves));
  out.write_json("strategies.json", {{"max_n", req.n_grid.back()}, {"strategies", summary}});
}

void run_ingest_check(const ExperimentConfig& c, OutputSet& out) {
  const auto datasets = ingest_scores_csv(c.scores_csv);
  std::size_t pools = 0, candidates = 0;
  bool preds = true, vars = true;
  double lo = 1.0, hi = 0.0;
  std::size_t dim = 0;
  for (const auto& ds : datasets) {
    for (const auto& pool : ds.pools()) {
      ++pools;
      preds = preds && pool.has_predictions();
      vars = vars && pool.has_variances();
      for (const auto& cand : pool.candidates()) {
        ++candidates;
        lo = std::min(lo, cand.true_score);
        hi = std::max(hi, cand.true_score);
        dim = cand.features.size();
      }
    }
  }
  out.write_json("summary.json", {{"n_users", datasets.size()},
                                  {"n_pools", pools},
                                  {"n_candidates", candidates},
                                  {"has_predictions", preds},
                                  {"has_variances", vars},
                                  {"feature_dim", dim},
                                  {"true_score_min", lo},
                                  {"true_score_max", hi}});
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                           const std::string& tool_version) {
  RunManifest manifest;
  manifest.command = to_string(config.command);
  manifest.tool_version = tool_version;
  manifest.seed = config.seed;
  manifest.threads = config.threads;
  manifest.started_at = utc_timestamp();

  const json effective = config_to_json(config);
  const std::string config_text = effective.dump(2) + "\n";
  manifest.config_sha256 = sha256_hex(config_text);

  std::filesystem::create_directories(out_dir);
  OutputSet out(out_dir);
  out.write("config.json", config_text);
  switch (config.command) {
    case Command::SimulateOracle: run_simulate_oracle(config, out); break;
    case Command::SimulateCorrelation: run_simulate_correlation(config, out); break;
    case Command::ValidateUnifiedLaw: run_validate_unified_law(config, out); break;
    case Command::Diagnose: run_diagnose(config, out); break;
    case Command::TrainPrm: run_train_prm(config, out); break;
    case Command::FailureExperiment: run_failure_experiment(config, out); break;
    case Command::Strategies: run_strategies(config, out); break;
    case Command::IngestCheck: run_ingest_check(config, out); break;
  }

  manifest.outputs = out.records();
  manifest.finished_at = utc_timestamp();
  std::ofstream mf(out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!mf) throw std::runtime_error("cannot write manifest");
  mf << manifest_to_json(manifest);
  return manifest;
}

}  // namespace bonlab::harness
