#include "bonlab/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bonlab {

void validate_candidate(const ScoredCandidate& c) {
  if (!std::isfinite(c.true_score) || c.true_score < 0.0 || c.true_score > 1.0) {
    throw std::invalid_argument("true_score must lie in [0,1], got " +
                                std::to_string(c.true_score));
  }
  if (c.pred_mean && !std::isfinite(*c.pred_mean)) {
    throw std::invalid_argument("pred_mean must be finite");
  }
  if (c.pred_var && (!std::isfinite(*c.pred_var) || *c.pred_var < 0.0)) {
    throw std::invalid_argument("pred_var must be finite and >= 0");
  }
}

CandidatePool::CandidatePool(std::string user_id, std::string query_id,
                             std::vector<ScoredCandidate> candidates)
    : user_id_(std::move(user_id)),
      query_id_(std::move(query_id)),
      candidates_(std::move(candidates)) {
  if (candidates_.empty()) {
    throw std::invalid_argument("candidate pool " + user_id_ + "/" + query_id_ +
                                " is empty");
  }
  for (const auto& c : candidates_) validate_candidate(c);
}

bool CandidatePool::has_predictions() const noexcept {
  return std::all_of(candidates_.begin(), candidates_.end(),
                     [](const ScoredCandidate& c) { return c.pred_mean.has_value(); });
}

bool CandidatePool::has_variances() const noexcept {
  return std::all_of(candidates_.begin(), candidates_.end(),
                     [](const ScoredCandidate& c) { return c.pred_var.has_value(); });
}

bool CandidatePool::has_features() const noexcept {
  const std::size_t d = candidates_.front().features.size();
  return d > 0 && std::all_of(candidates_.begin(), candidates_.end(),
                              [d](const ScoredCandidate& c) { return c.features.size() == d; });
}

CandidatePool CandidatePool::with_predictions(std::span<const double> means,
                                              std::span<const double> vars) const {
  if (means.size() != candidates_.size() || (!vars.empty() && vars.size() != means.size())) {
    throw std::invalid_argument("prediction count does not match pool size");
  }
  std::vector<ScoredCandidate> out = candidates_;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].pred_mean = means[i];
    if (!vars.empty()) out[i].pred_var = vars[i];
  }
  return CandidatePool(user_id_, query_id_, std::move(out));
}

UserDataset::UserDataset(std::string user_id, std::vector<CandidatePool> pools)
    : user_id_(std::move(user_id)), pools_(std::move(pools)) {
  for (const auto& p : pools_) {
    if (p.user_id() != user_id_) {
      throw std::invalid_argument("pool " + p.query_id() + " belongs to user " +
                                  p.user_id() + ", not " + user_id_);
    }
  }
}

std::size_t UserDataset::candidate_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : pools_) n += p.size();
  return n;
}

void validate_n_grid(std::span<const int> n_grid) {
  if (n_grid.empty()) throw std::invalid_argument("N grid is empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1) throw std::invalid_argument("N grid values must be >= 1");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) {
      throw std::invalid_argument("N grid must be strictly increasing");
    }
  }
}

ScalingCurve::ScalingCurve(std::string label, std::vector<CurvePoint> points)
    : label_(std::move(label)), points_(std::move(points)) {
  const auto grid = n_grid();
  validate_n_grid(grid);
  for (const auto& p : points_) {
    if (p.trials < 1) throw std::invalid_argument("curve point trials must be >= 1");
    if (!std::isfinite(p.utility)) throw std::invalid_argument("curve utility must be finite");
  }
}

std::vector<int> ScalingCurve::n_grid() const {
  std::vector<int> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.n);
  return out;
}

std::vector<double> ScalingCurve::utilities() const {
  std::vector<double> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.utility);
  return out;
}

bool ScalingCurve::same_grid(const ScalingCurve& other) const noexcept {
  if (points_.size() != other.points_.size()) return false;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].n != other.points_[i].n) return false;
  }
  return true;
}

}  // namespace bonlab
