#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drivetraits/features.hpp"
#include "drivetraits/metrics.hpp"
#include "drivetraits/models.hpp"
#include "drivetraits/segmentation.hpp"
#include "drivetraits/signals.hpp"

namespace drivetraits {

// --- experiment configuration ---------------------------------------------------

enum class Variant {
  RoadAndDuration,  // (i)   road type + multi-duration windows
  RoadOnly,         // (ii)  road type only
  NoSegmentation,   // (iii) whole drive, labels ignored
};

std::string_view variant_name(Variant v);                    // "i", "ii", "iii"
std::optional<Variant> variant_from_name(std::string_view);

enum class RoadScope { Arterial, Intersection, Whole };
std::string_view road_scope_name(RoadScope s);
std::optional<RoadScope> road_scope_from_name(std::string_view);

struct ExperimentConfig {
  std::string target = "tmt_b";
  Variant variant = Variant::RoadAndDuration;
  RoadScope road_scope = RoadScope::Arterial;
  std::vector<ModelKind> models;  // empty -> defaults for the target's task
  std::vector<double> reg_grid = default_reg_grid();
  std::vector<int> depth_grid = default_depth_grid();
  int n_trees = 200;
  bool forest_bootstrap = true;
  double corr_threshold = 0.1;
  std::uint64_t seed = 0;
  int jobs = 1;
  DurationGrid duration_grid;
  double brake_epsilon_mpa = kDefaultBrakeEpsilonMpa;
  FeaturizeOptions featurize;

  // Resolves defaults and enforces cross-field invariants (variant iii
  // forces the whole-drive scope).
  void normalize();
};

// --- cohort I/O -------------------------------------------------------------------

struct Cohort {
  std::vector<DriveSession> sessions;  // with derived channels
  TraitTable traits;
  RouteMap route;
};

// Reads route_map.json, traits.csv and every *.csv telemetry file named
// <driver>_s<k>.csv from `dir`, deriving the difference channels.
Cohort load_cohort(const std::filesystem::path& dir);

// Feature matrix for the configured variant and road scope.
FeatureMatrix featurize_cohort(const Cohort& cohort, const ExperimentConfig& config);

// --- protocol pieces ---------------------------------------------------------------

// Binary labels via the cohort median: 1 (high) iff score > median.
// Throws DegenerateError when every score is identical.
std::vector<int> median_split(const std::vector<double>& scores);

struct Fold {
  std::string test_driver;
  std::vector<int> train_rows;
  std::vector<int> test_rows;
};

struct FoldPlan {
  std::vector<Fold> folds;  // one per driver, in first-appearance order
};

// Leave-one-person-out folds from per-row driver ids.
FoldPlan make_folds(const std::vector<std::string>& row_drivers);
FoldPlan make_folds(const std::vector<DriveSession>& sessions);

// Surviving column indices: |pearson(column, target)| > threshold.
// Zero-variance columns are dropped.
std::vector<int> filter_features(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                 const Eigen::Ref<const Eigen::VectorXd>& y,
                                 double threshold = 0.1);

struct TuneChoice {
  double reg = 0;      // linear kinds
  int depth = 0;       // forest kinds
  bool fallback = false;
  std::string note;
};

// Inner leave-one-person-out over the training drivers; minimizes inner RMSE
// (regression) or maximizes inner macro F1 (classification). Ties break to the
// smaller grid value.
TuneChoice tune_hyperparams(const Eigen::Ref<const Eigen::MatrixXd>& x,
                            const Eigen::Ref<const Eigen::VectorXd>& y,
                            const std::vector<std::string>& row_drivers,
                            ModelKind kind, const std::vector<double>& reg_grid,
                            const std::vector<int>& depth_grid,
                            const ForestOptions& forest_base);

struct DriverAggregate {
  std::vector<std::string> drivers;  // first-appearance order
  Eigen::VectorXd values;
};

// Arithmetic mean of each driver's per-session values.
DriverAggregate aggregate_sessions(const std::vector<std::string>& row_drivers,
                                   const Eigen::Ref<const Eigen::VectorXd>& values);

// --- reports ----------------------------------------------------------------------

struct FoldRecord {
  std::string test_driver;
  double chosen_reg = 0;
  int chosen_depth = 0;
  int surviving_count = 0;
  std::vector<int> surviving_columns;  // kept in memory for auditing
  bool empty_filter = false;
  std::string note;
};

struct ModelResult {
  ModelKind kind = ModelKind::ridge;
  double pearson = std::numeric_limits<double>::quiet_NaN();
  double p_value = std::numeric_limits<double>::quiet_NaN();
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double macro_f1 = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> drivers;
  Eigen::VectorXd aggregated;        // per-driver prediction (score for classifiers)
  Eigen::VectorXd predicted_labels;  // classifiers only
  Eigen::VectorXd truth;             // per-driver target (binary for classifiers)
  std::vector<FoldRecord> folds;
  std::vector<std::string> notes;
};

struct EvalReport {
  std::string target;
  bool regression = true;
  Variant variant = Variant::RoadAndDuration;
  RoadScope road_scope = RoadScope::Arterial;
  std::uint64_t seed = 0;
  int feature_columns = 0;
  std::vector<ModelResult> results;
  std::vector<std::string> warnings;
  nlohmann::ordered_json config_echo;  // resolved run configuration

  nlohmann::ordered_json to_json() const;
  // Flat table: one row per model, metric columns for this target.
  void write_csv(const std::filesystem::path& file) const;
};

// Full protocol: featurize per variant, remove missing-valued columns, then
// per model run filter -> tune -> fit -> predict per fold, aggregate sessions
// per driver and compute the metrics. Deterministic for a fixed seed.
EvalReport run_experiment(const ExperimentConfig& config, const Cohort& cohort);

// Same protocol on a prebuilt, missing-free feature matrix (featurization is
// unaffected by trait permutations, so null-model harnesses reuse it).
EvalReport run_experiment_on_features(const ExperimentConfig& config,
                                      const FeatureMatrix& features,
                                      const TraitTable& traits);

}  // namespace drivetraits
