#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bonlab {

/// One scored response. `true_score` is the ground-truth reward proxy; the
/// optional fields hold a reward model's predicted mean and variance.
/// `features` is empty unless the candidate carries a feature vector for
/// reward-model training.
struct ScoredCandidate {
  double true_score = 0.0;
  std::optional<double> pred_mean;
  std::optional<double> pred_var;
  std::vector<double> features;

  bool operator==(const ScoredCandidate&) const = default;
};

/// Throws std::invalid_argument unless true_score is in [0,1] and pred_var,
/// when present, is non-negative.
void validate_candidate(const ScoredCandidate& c);

/// The candidate set generated for one (user, query). Non-empty; candidate
/// order is significant because selection ties resolve to the lowest index.
class CandidatePool {
 public:
  CandidatePool(std::string user_id, std::string query_id,
                std::vector<ScoredCandidate> candidates);

  const std::string& user_id() const noexcept { return user_id_; }
  const std::string& query_id() const noexcept { return query_id_; }
  std::span<const ScoredCandidate> candidates() const noexcept { return candidates_; }
  const ScoredCandidate& operator[](std::size_t i) const { return candidates_[i]; }
  std::size_t size() const noexcept { return candidates_.size(); }

  bool has_predictions() const noexcept;
  bool has_variances() const noexcept;
  bool has_features() const noexcept;

  /// Copy with predictions replaced. `vars` may be empty to leave variances unset.
  CandidatePool with_predictions(std::span<const double> means,
                                 std::span<const double> vars) const;

  bool operator==(const CandidatePool&) const = default;

 private:
  std::string user_id_;
  std::string query_id_;
  std::vector<ScoredCandidate> candidates_;
};

/// All pools belonging to one user.
class UserDataset {
 public:
  UserDataset(std::string user_id, std::vector<CandidatePool> pools);

  const std::string& user_id() const noexcept { return user_id_; }
  std::span<const CandidatePool> pools() const noexcept { return pools_; }
  std::size_t candidate_count() const noexcept;

  bool operator==(const UserDataset&) const = default;

 private:
  std::string user_id_;
  std::vector<CandidatePool> pools_;
};

struct CurvePoint {
  int n = 1;
  double utility = 0.0;
  int trials = 1;

  bool operator==(const CurvePoint&) const = default;
};

/// (N, utility) points; N strictly increasing, trials positive.
class ScalingCurve {
 public:
  ScalingCurve() = default;
  ScalingCurve(std::string label, std::vector<CurvePoint> points);

  const std::string& label() const noexcept { return label_; }
  std::span<const CurvePoint> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  std::vector<int> n_grid() const;
  std::vector<double> utilities() const;

  bool same_grid(const ScalingCurve& other) const noexcept;

  bool operator==(const ScalingCurve&) const = default;

 private:
  std::string label_;
  std::vector<CurvePoint> points_;
};

/// Throws std::invalid_argument unless the grid is non-empty, every n >= 1
/// and values strictly increase.
void validate_n_grid(std::span<const int> n_grid);

}  // namespace bonlab
