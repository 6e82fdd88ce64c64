#include "drivetraits/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>

#include "drivetraits/parallel.hpp"
#include "drivetraits/rng.hpp"

namespace drivetraits {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::RoadAndDuration: return "i";
    case Variant::RoadOnly: return "ii";
    case Variant::NoSegmentation: return "iii";
  }
  return "?";
}

std::optional<Variant> variant_from_name(std::string_view name) {
  if (name == "i") return Variant::RoadAndDuration;
  if (name == "ii") return Variant::RoadOnly;
  if (name == "iii") return Variant::NoSegmentation;
  return std::nullopt;
}

std::string_view road_scope_name(RoadScope s) {
  switch (s) {
    case RoadScope::Arterial: return "arterial";
    case RoadScope::Intersection: return "intersection";
    case RoadScope::Whole: return "whole";
  }
  return "?";
}

std::optional<RoadScope> road_scope_from_name(std::string_view name) {
  if (name == "arterial") return RoadScope::Arterial;
  if (name == "intersection") return RoadScope::Intersection;
  if (name == "whole") return RoadScope::Whole;
  return std::nullopt;
}

void ExperimentConfig::normalize() {
  bool known = false;
  for (const auto& t : all_targets()) known = known || t == target;
  if (!known) throw ConfigError("unknown target '" + target + "'");

  if (variant == Variant::NoSegmentation) {
    road_scope = RoadScope::Whole;
  } else if (road_scope == RoadScope::Whole) {
    throw ConfigError("the whole-drive scope is only used by variant iii");
  }

  if (models.empty()) {
    models = is_regression_target(target)
                 ? std::vector<ModelKind>{ModelKind::ridge, ModelKind::lasso,
                                          ModelKind::random_forest_reg}
                 : std::vector<ModelKind>{ModelKind::logistic_l2,
                                          ModelKind::linear_svm,
                                          ModelKind::random_forest_clf};
  }
  const bool regression = is_regression_target(target);
  for (ModelKind kind : models) {
    if (regression && is_classifier_kind(kind)) {
      throw ConfigError("classification model for regression target");
    }
    if (!regression && !is_classifier_kind(kind)) {
      throw ConfigError("regression model for classification target");
    }
  }
  if (reg_grid.empty() || depth_grid.empty()) {
    throw ConfigError("hyperparameter grids must be nonempty");
  }
  if (corr_threshold < 0) throw ConfigError("corr_threshold must be >= 0");
  if (n_trees < 1) throw ConfigError("n_trees must be >= 1");
  duration_grid.validate();
}

Cohort load_cohort(const std::filesystem::path& dir) {
  Cohort cohort;
  cohort.route = load_route_map(dir / "route_map.json");
  cohort.traits = load_traits(dir / "traits.csv");

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.path().extension() == ".csv" && name != "traits.csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    const std::string stem = file.stem().string();
    const auto sep = stem.rfind("_s");
    if (sep == std::string::npos) {
      throw SchemaError("telemetry file name '" + stem +
                        "' is not of the form <driver>_s<index>");
    }
    const std::string driver = stem.substr(0, sep);
    const int index = std::atoi(stem.substr(sep + 2).c_str());
    if (index < 1) {
      throw SchemaError("bad session index in telemetry file name '" + stem + "'");
    }
    cohort.sessions.push_back(
        derive_channels(load_session(file, driver, index)));
  }
  if (cohort.sessions.empty()) {
    throw ValidationError("no telemetry files found in " + dir.string());
  }
  return cohort;
}

FeatureMatrix featurize_cohort(const Cohort& cohort, const ExperimentConfig& config) {
  ExperimentConfig cfg = config;
  cfg.normalize();

  if (cfg.variant == Variant::NoSegmentation) {
    std::map<std::string, SegmentSet> empty;
    return build_feature_matrix(cohort.sessions, empty, cfg.duration_grid,
                                cohort.route, FeatureScope::WholeDrive,
                                cfg.featurize);
  }

  DurationGrid grid = cfg.duration_grid;
  if (cfg.variant == Variant::RoadOnly) {
    grid.targets = {kWholeArterial};
  }

  std::map<std::string, SegmentSet> sets;
  for (const auto& session : cohort.sessions) {
    const RoadLabels labels = classify_frames(session, cohort.route);
    sets.emplace(session.session_id(),
                 build_segment_set(session, labels, cohort.route, grid,
                                   cfg.brake_epsilon_mpa));
  }
  const FeatureScope scope = cfg.road_scope == RoadScope::Arterial
                                 ? FeatureScope::Arterial
                                 : FeatureScope::Intersection;
  return build_feature_matrix(cohort.sessions, sets, grid, cohort.route, scope,
                              cfg.featurize);
}

std::vector<int> median_split(const std::vector<double>& scores) {
  if (scores.size() < 2) {
    throw ValidationError("median split needs at least 2 scores");
  }
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) {
    throw DegenerateError("all scores identical; median split is degenerate");
  }
  const std::size_t n = sorted.size();
  const double median = n % 2 == 1 ? sorted[n / 2]
                                   : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  std::vector<int> labels(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    labels[i] = scores[i] > median ? 1 : 0;
  }
  return labels;
}

FoldPlan make_folds(const std::vector<std::string>& row_drivers) {
  std::vector<std::string> order;
  for (const auto& d : row_drivers) {
    if (std::find(order.begin(), order.end(), d) == order.end()) {
      order.push_back(d);
    }
  }
  if (order.size() < 2) {
    throw ValidationError("leave-one-person-out needs at least 2 drivers");
  }
  FoldPlan plan;
  for (const auto& driver : order) {
    Fold fold;
    fold.test_driver = driver;
    for (std::size_t r = 0; r < row_drivers.size(); ++r) {
      (row_drivers[r] == driver ? fold.test_rows : fold.train_rows)
          .push_back(static_cast<int>(r));
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

FoldPlan make_folds(const std::vector<DriveSession>& sessions) {
  std::vector<std::string> drivers;
  drivers.reserve(sessions.size());
  for (const auto& s : sessions) drivers.push_back(s.driver_id);
  return make_folds(drivers);
}

std::vector<int> filter_features(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                 const Eigen::Ref<const Eigen::VectorXd>& y,
                                 double threshold) {
  if (x.rows() != y.size() || x.rows() == 0) {
    throw ConsistencyError("filter_features needs matching nonempty inputs");
  }
  const Eigen::VectorXd yc = y.array() - y.mean();
  const double y_ss = yc.squaredNorm();
  if (y_ss <= 0) return {};

  const Eigen::RowVectorXd col_mean = x.colwise().mean();
  const Eigen::VectorXd cov = x.transpose() * yc;  // = centered-column dot yc
  std::vector<int> survivors;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double x_ss = (x.col(j).array() - col_mean[j]).square().sum();
    if (x_ss <= 0) continue;  // undefined correlation
    const double r = cov[j] / std::sqrt(x_ss * y_ss);
    if (std::abs(r) > threshold) survivors.push_back(static_cast<int>(j));
  }
  return survivors;
}

namespace {

Eigen::MatrixXd gather_rows(const Eigen::Ref<const Eigen::MatrixXd>& x,
                            const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  }
  return out;
}

Eigen::VectorXd gather(const Eigen::Ref<const Eigen::VectorXd>& v,
                       const std::vector<int>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = v[rows[i]];
  }
  return out;
}

Eigen::MatrixXd gather_cols(const Eigen::Ref<const Eigen::MatrixXd>& x,
                            const std::vector<int>& cols) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = x.col(cols[j]);
  }
  return out;
}

bool single_class(const Eigen::VectorXd& y01) {
  for (Eigen::Index i = 1; i < y01.size(); ++i) {
    if (y01[i] != y01[0]) return false;
  }
  return true;
}

}  // namespace

DriverAggregate aggregate_sessions(const std::vector<std::string>& row_drivers,
                                   const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (row_drivers.size() != static_cast<std::size_t>(values.size())) {
    throw ConsistencyError("aggregate_sessions inputs differ in length");
  }
  DriverAggregate agg;
  std::vector<double> sums;
  std::vector<int> counts;
  for (std::size_t r = 0; r < row_drivers.size(); ++r) {
    auto it = std::find(agg.drivers.begin(), agg.drivers.end(), row_drivers[r]);
    std::size_t k;
    if (it == agg.drivers.end()) {
      agg.drivers.push_back(row_drivers[r]);
      sums.push_back(0);
      counts.push_back(0);
      k = agg.drivers.size() - 1;
    } else {
      k = static_cast<std::size_t>(it - agg.drivers.begin());
    }
    sums[k] += values[static_cast<Eigen::Index>(r)];
    counts[k] += 1;
  }
  agg.values.resize(static_cast<Eigen::Index>(agg.drivers.size()));
  for (std::size_t k = 0; k < agg.drivers.size(); ++k) {
    agg.values[static_cast<Eigen::Index>(k)] = sums[k] / counts[k];
  }
  return agg;
}

TuneChoice tune_hyperparams(const Eigen::Ref<const Eigen::MatrixXd>& x,
                            const Eigen::Ref<const Eigen::VectorXd>& y,
                            const std::vector<std::string>& row_drivers,
                            ModelKind kind, const std::vector<double>& reg_grid,
                            const std::vector<int>& depth_grid,
                            const ForestOptions& forest_base) {
  const bool classification = is_classifier_kind(kind);
  const bool forest = !is_linear_kind(kind);
  const std::size_t grid_size = forest ? depth_grid.size() : reg_grid.size();
  if (grid_size == 0) throw ConfigError("empty hyperparameter grid");

  TuneChoice choice;
  auto set_value = [&](std::size_t gi) {
    if (forest) choice.depth = depth_grid[gi];
    else choice.reg = reg_grid[gi];
  };

  if (grid_size == 1) {
    set_value(0);
    return choice;
  }

  FoldPlan inner;
  try {
    inner = make_folds(row_drivers);
  } catch (const ValidationError&) {
    set_value((grid_size - 1) / 2);
    choice.fallback = true;
    choice.note = "single training driver; grid midpoint used";
    return choice;
  }

  // Per grid value: per-session predictions and matching drivers/truths.
  std::vector<std::vector<std::string>> pred_drivers(grid_size);
  std::vector<std::vector<double>> preds(grid_size);
  std::vector<std::vector<double>> truths(grid_size);
  int skipped = 0;

  for (std::size_t fi = 0; fi < inner.folds.size(); ++fi) {
    const Fold& fold = inner.folds[fi];
    const Eigen::MatrixXd x_tr = gather_rows(x, fold.train_rows);
    const Eigen::VectorXd y_tr = gather(y, fold.train_rows);
    const Eigen::MatrixXd x_te = gather_rows(x, fold.test_rows);
    if (classification && single_class(y_tr)) {
      ++skipped;
      continue;
    }

    std::vector<Eigen::VectorXd> fold_preds(grid_size);
    if (forest) {
      for (std::size_t gi = 0; gi < grid_size; ++gi) {
        ForestOptions opts = forest_base;
        opts.max_depth = depth_grid[gi];
        opts.seed = derive_seed(forest_base.seed, fi * 64 + gi);
        const FittedModel model =
            forest_fit(x_tr, y_tr, opts, classification);
        fold_preds[gi] = classification ? model.decision_score(x_te)
                                        : model.predict(x_te);
      }
    } else {
      const Eigen::VectorXd y_fit =
          kind == ModelKind::linear_svm ? Eigen::VectorXd(2.0 * y_tr.array() - 1.0)
                                        : y_tr;
      const auto models = fit_linear_path(kind, x_tr, y_fit, reg_grid);
      for (std::size_t gi = 0; gi < grid_size; ++gi) {
        fold_preds[gi] = classification ? models[gi].decision_score(x_te)
                                        : models[gi].predict(x_te);
      }
    }

    const double truth = y[fold.test_rows.front()];
    for (std::size_t gi = 0; gi < grid_size; ++gi) {
      pred_drivers[gi].push_back(fold.test_driver);
      preds[gi].push_back(fold_preds[gi].mean());  // session-mean aggregation
      truths[gi].push_back(truth);
    }
  }

  if (preds[0].empty()) {
    set_value((grid_size - 1) / 2);
    choice.fallback = true;
    choice.note = "every inner fold degenerate; grid midpoint used";
    return choice;
  }
  if (skipped > 0) {
    choice.note = std::to_string(skipped) + " degenerate inner folds skipped";
  }

  // Ascending grids with strict improvement implement the smaller-value tie
  // rule.
  std::size_t best = 0;
  double best_score = 0;
  bool have = false;
  for (std::size_t gi = 0; gi < grid_size; ++gi) {
    const Eigen::Map<const Eigen::VectorXd> p(preds[gi].data(),
                                              static_cast<Eigen::Index>(preds[gi].size()));
    const Eigen::Map<const Eigen::VectorXd> t(truths[gi].data(),
                                              static_cast<Eigen::Index>(truths[gi].size()));
    double score;
    if (classification) {
      Eigen::VectorXd labels = (p.array() > 0).cast<double>();
      score = macro_f1(labels, t);  // maximize
    } else {
      score = -rmse(p, t);  // maximize
    }
    if (!have || score > best_score) {
      have = true;
      best = gi;
      best_score = score;
    }
  }
  set_value(best);
  return choice;
}

namespace {

struct FoldOutput {
  FoldRecord record;
  Eigen::VectorXd test_predictions;  // value (reg) or score (clf)
};

FoldOutput run_fold(const ExperimentConfig& cfg, ModelKind kind,
                    const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    const std::vector<std::string>& row_drivers, const Fold& fold,
                    std::uint64_t fold_seed) {
  const bool classification = is_classifier_kind(kind);
  FoldOutput out;
  out.record.test_driver = fold.test_driver;

  const Eigen::MatrixXd x_tr = gather_rows(x, fold.train_rows);
  const Eigen::VectorXd y_tr = gather(y, fold.train_rows);
  const Eigen::MatrixXd x_te = gather_rows(x, fold.test_rows);

  if (classification && single_class(y_tr)) {
    const double prior = 2.0 * y_tr.mean() - 1.0;
    out.test_predictions =
        Eigen::VectorXd::Constant(static_cast<Eigen::Index>(fold.test_rows.size()), prior);
    out.record.note = "single-class training labels; prior score used";
    return out;
  }

  out.record.surviving_columns = filter_features(x_tr, y_tr, cfg.corr_threshold);
  out.record.surviving_count = static_cast<int>(out.record.surviving_columns.size());

  if (out.record.surviving_columns.empty()) {
    out.record.empty_filter = true;
    if (classification) {
      const double prior = 2.0 * y_tr.mean() - 1.0;
      out.test_predictions = Eigen::VectorXd::Constant(
          static_cast<Eigen::Index>(fold.test_rows.size()), prior);
      out.record.note = "no features passed the filter; training majority used";
    } else {
      out.test_predictions = Eigen::VectorXd::Constant(
          static_cast<Eigen::Index>(fold.test_rows.size()), y_tr.mean());
      out.record.note = "no features passed the filter; training mean used";
    }
    return out;
  }

  const Eigen::MatrixXd x_tr_f = gather_cols(x_tr, out.record.surviving_columns);
  const Eigen::MatrixXd x_te_f = gather_cols(x_te, out.record.surviving_columns);

  std::vector<std::string> train_drivers;
  train_drivers.reserve(fold.train_rows.size());
  for (int r : fold.train_rows) train_drivers.push_back(row_drivers[static_cast<std::size_t>(r)]);

  ForestOptions forest_base;
  forest_base.n_trees = cfg.n_trees;
  forest_base.bootstrap = cfg.forest_bootstrap;
  forest_base.seed = derive_seed(fold_seed, 0xf0);

  const TuneChoice tune = tune_hyperparams(x_tr_f, y_tr, train_drivers, kind,
                                           cfg.reg_grid, cfg.depth_grid,
                                           forest_base);
  out.record.chosen_reg = tune.reg;
  out.record.chosen_depth = tune.depth;
  if (!tune.note.empty()) out.record.note = tune.note;

  FittedModel model;
  if (is_linear_kind(kind)) {
    const Eigen::VectorXd y_fit =
        kind == ModelKind::linear_svm ? Eigen::VectorXd(2.0 * y_tr.array() - 1.0)
                                      : y_tr;
    switch (kind) {
      case ModelKind::ridge: model = ridge_fit(x_tr_f, y_fit, tune.reg); break;
      case ModelKind::lasso: model = lasso_fit(x_tr_f, y_fit, tune.reg); break;
      case ModelKind::logistic_l2:
        model = logistic_fit(x_tr_f, y_fit, tune.reg);
        break;
      case ModelKind::linear_svm: model = svm_fit(x_tr_f, y_fit, tune.reg); break;
      default: break;
    }
  } else {
    ForestOptions opts = forest_base;
    opts.max_depth = tune.depth;
    opts.seed = derive_seed(fold_seed, 0xff);
    model = forest_fit(x_tr_f, y_tr, opts, classification);
  }

  out.test_predictions =
      classification ? model.decision_score(x_te_f) : model.predict(x_te_f);
  return out;
}

}  // namespace

EvalReport run_experiment_on_features(const ExperimentConfig& config,
                                      const FeatureMatrix& features,
                                      const TraitTable& traits) {
  ExperimentConfig cfg = config;
  cfg.normalize();

  EvalReport report;
  report.target = cfg.target;
  report.regression = is_regression_target(cfg.target);
  report.variant = cfg.variant;
  report.road_scope = cfg.road_scope;
  report.seed = cfg.seed;
  report.feature_columns = static_cast<int>(features.cols());

  const std::size_t n_rows = features.driver_ids.size();
  if (n_rows == 0) throw ValidationError("empty feature matrix");
  if (!features.values.allFinite()) {
    throw ValidationError(
        "feature matrix still contains missing values; run drop_missing first");
  }

  {
    nlohmann::ordered_json echo;
    echo["target"] = cfg.target;
    echo["variant"] = std::string(variant_name(cfg.variant));
    echo["road_scope"] = std::string(road_scope_name(cfg.road_scope));
    echo["corr_threshold"] = cfg.corr_threshold;
    echo["reg_grid"] = cfg.reg_grid;
    echo["depth_grid"] = cfg.depth_grid;
    echo["n_trees"] = cfg.n_trees;
    echo["seed"] = cfg.seed;
    echo["duration_targets"] = nlohmann::json::array();
    for (double t : cfg.duration_grid.targets) {
      echo["duration_targets"].push_back(duration_label(t));
    }
    echo["cohort_mean_arterial_s"] = cfg.duration_grid.cohort_mean_arterial_s;
    echo["brake_epsilon_mpa"] = cfg.brake_epsilon_mpa;
    echo["include_whole_pass"] = cfg.featurize.include_whole_pass;
    report.config_echo = std::move(echo);
  }

  // Session-level targets.
  Eigen::VectorXd y(static_cast<Eigen::Index>(n_rows));
  std::map<std::string, double> driver_truth;
  if (report.regression) {
    for (std::size_t r = 0; r < n_rows; ++r) {
      const double v = traits.row(features.driver_ids[r]).value(cfg.target);
      y[static_cast<Eigen::Index>(r)] = v;
      driver_truth[features.driver_ids[r]] = v;
    }
  } else {
    std::vector<std::string> drivers;
    for (const auto& d : features.driver_ids) {
      if (std::find(drivers.begin(), drivers.end(), d) == drivers.end()) {
        drivers.push_back(d);
      }
    }
    std::vector<double> scores;
    scores.reserve(drivers.size());
    for (const auto& d : drivers) scores.push_back(traits.row(d).value(cfg.target));
    std::vector<int> labels;
    try {
      labels = median_split(scores);
    } catch (const DegenerateError& e) {
      report.warnings.push_back("target '" + cfg.target + "' skipped: " + e.what());
      return report;
    }
    std::map<std::string, int> label_of;
    for (std::size_t k = 0; k < drivers.size(); ++k) {
      label_of[drivers[k]] = labels[k];
      driver_truth[drivers[k]] = labels[k];
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
      y[static_cast<Eigen::Index>(r)] = label_of.at(features.driver_ids[r]);
    }
  }

  const FoldPlan plan = make_folds(features.driver_ids);

  for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
    const ModelKind kind = cfg.models[mi];
    ModelResult result;
    result.kind = kind;

    std::vector<FoldOutput> outputs(plan.folds.size());
    parallel_for(static_cast<int>(plan.folds.size()), cfg.jobs, [&](int fi) {
      outputs[static_cast<std::size_t>(fi)] =
          run_fold(cfg, kind, features.values, y, features.driver_ids,
                   plan.folds[static_cast<std::size_t>(fi)],
                   derive_seed(cfg.seed, mi * 1024 + static_cast<std::size_t>(fi)));
    });

    // Stitch per-session predictions back in row order.
    Eigen::VectorXd session_pred(static_cast<Eigen::Index>(n_rows));
    for (std::size_t fi = 0; fi < plan.folds.size(); ++fi) {
      const Fold& fold = plan.folds[fi];
      for (std::size_t t = 0; t < fold.test_rows.size(); ++t) {
        session_pred[fold.test_rows[t]] =
            outputs[fi].test_predictions[static_cast<Eigen::Index>(t)];
      }
      result.folds.push_back(std::move(outputs[fi].record));
    }

    const DriverAggregate agg = aggregate_sessions(features.driver_ids, session_pred);
    result.drivers = agg.drivers;
    result.aggregated = agg.values;
    result.truth.resize(agg.values.size());
    for (std::size_t k = 0; k < agg.drivers.size(); ++k) {
      result.truth[static_cast<Eigen::Index>(k)] = driver_truth.at(agg.drivers[k]);
    }

    if (report.regression) {
      result.rmse = rmse(agg.values, result.truth);
      try {
        result.pearson = pearson_r(agg.values, result.truth);
        if (agg.values.size() >= 3) {
          result.p_value = pearson_p_value(result.pearson,
                                           static_cast<int>(agg.values.size()));
        }
      } catch (const UndefinedValueError& e) {
        result.notes.push_back(std::string("pearson undefined: ") + e.what());
      }
    } else {
      result.predicted_labels = (agg.values.array() > 0).cast<double>();
      result.macro_f1 = macro_f1(result.predicted_labels, result.truth);
    }
    report.results.push_back(std::move(result));
  }
  return report;
}

EvalReport run_experiment(const ExperimentConfig& config, const Cohort& cohort) {
  const FeatureMatrix features = drop_missing(featurize_cohort(cohort, config));
  return run_experiment_on_features(config, features, cohort.traits);
}

namespace {

nlohmann::ordered_json metric_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

}  // namespace

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["target"] = target;
  j["task"] = regression ? "regression" : "classification";
  j["variant"] = std::string(variant_name(variant));
  j["road_scope"] = std::string(road_scope_name(road_scope));
  j["seed"] = seed;
  j["feature_columns"] = feature_columns;
  if (!config_echo.is_null()) j["config"] = config_echo;
  j["results"] = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::ordered_json rj;
    rj["model"] = std::string(model_kind_name(r.kind));
    rj["metrics"]["pearson_r"] = metric_or_null(r.pearson);
    rj["metrics"]["p_value"] = metric_or_null(r.p_value);
    rj["metrics"]["rmse"] = metric_or_null(r.rmse);
    rj["metrics"]["macro_f1"] = metric_or_null(r.macro_f1);
    rj["per_driver"] = nlohmann::json::array();
    for (std::size_t k = 0; k < r.drivers.size(); ++k) {
      nlohmann::ordered_json dj;
      dj["driver"] = r.drivers[k];
      dj["prediction"] = r.aggregated[static_cast<Eigen::Index>(k)];
      if (!regression) {
        dj["predicted_label"] = r.predicted_labels[static_cast<Eigen::Index>(k)];
      }
      dj["truth"] = r.truth[static_cast<Eigen::Index>(k)];
      rj["per_driver"].push_back(dj);
    }
    rj["folds"] = nlohmann::json::array();
    for (const auto& f : r.folds) {
      nlohmann::ordered_json fj;
      fj["test_driver"] = f.test_driver;
      fj["chosen_reg"] = f.chosen_reg;
      fj["chosen_depth"] = f.chosen_depth;
      fj["surviving_features"] = f.surviving_count;
      fj["empty_filter"] = f.empty_filter;
      if (!f.note.empty()) fj["note"] = f.note;
      rj["folds"].push_back(fj);
    }
    if (!r.notes.empty()) rj["notes"] = r.notes;
    j["results"].push_back(rj);
  }
  if (!warnings.empty()) j["warnings"] = warnings;
  return j;
}

void EvalReport::write_csv(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write report csv " + file.string());
  out << "model,road_scope,variant,target,pearson_r,p_value,rmse,macro_f1\n";
  char buf[40];
  auto fmt = [&](double v) -> std::string {
    if (std::isnan(v)) return "";
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
  };
  for (const auto& r : results) {
    out << model_kind_name(r.kind) << ',' << road_scope_name(road_scope) << ','
        << variant_name(variant) << ',' << target << ',' << fmt(r.pearson) << ','
        << fmt(r.p_value) << ',' << fmt(r.rmse) << ',' << fmt(r.macro_f1) << "\n";
  }
}

}  // namespace drivetraits
