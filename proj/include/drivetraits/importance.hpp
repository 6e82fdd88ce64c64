#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drivetraits/features.hpp"
#include "drivetraits/models.hpp"
#include "drivetraits/signals.hpp"

namespace drivetraits {

// Absolute standardized coefficients per column of `all_columns`; columns the
// model never saw (removed by the correlation filter) contribute 0. Only
// ridge and lasso models are supported.
Eigen::VectorXd feature_contributions(const FittedModel& model,
                                      const std::vector<FeatureName>& all_columns);

// Percentage of the total contribution mass per sensor channel; sums to 100.
std::map<ChannelId, double> aggregate_by_sensor(
    const std::vector<FeatureName>& columns,
    const Eigen::Ref<const Eigen::VectorXd>& contributions);

struct DurationShares {
  std::map<double, double> unnormalized;  // percent per duration target
  std::map<double, double> normalized;    // divided by the window count, rescaled
};

// Duration-level shares for an arterial multi-duration model;
// `window_counts` is the K(d) plan the features were built with.
DurationShares aggregate_by_duration(
    const std::vector<FeatureName>& columns,
    const Eigen::Ref<const Eigen::VectorXd>& contributions,
    const std::map<double, int>& window_counts);

struct ImportanceReport {
  std::string target;
  ModelKind kind = ModelKind::ridge;
  double reg = 0;                 // hyperparameter of the refitted model
  std::string road_scope;
  std::string variant;
  int surviving_features = 0;
  std::map<ChannelId, double> sensor_shares;
  bool has_duration_shares = false;
  DurationShares duration_shares;

  nlohmann::ordered_json to_json() const;
  void write_sensor_csv(const std::filesystem::path& file) const;
  void write_duration_csv(const std::filesystem::path& file) const;
};

// Refits one model on all sessions (filter at `corr_threshold`, then fit with
// `reg`) and aggregates its coefficient mass. `window_counts` enables the
// duration breakdown and may be empty for single-duration feature sets.
ImportanceReport importance_for_target(const FeatureMatrix& features,
                                       const Eigen::Ref<const Eigen::VectorXd>& y,
                                       const std::string& target, ModelKind kind,
                                       double reg, double corr_threshold,
                                       const std::map<double, int>& window_counts);

}  // namespace drivetraits
