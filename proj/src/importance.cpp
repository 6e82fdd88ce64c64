#include "drivetraits/importance.hpp"

#include <cmath>
#include <fstream>

#include "drivetraits/evaluation.hpp"

namespace drivetraits {

Eigen::VectorXd feature_contributions(const FittedModel& model,
                                      const std::vector<FeatureName>& all_columns) {
  if (model.kind != ModelKind::ridge && model.kind != ModelKind::lasso) {
    throw UnsupportedKindError(
        "coefficient importance is defined for ridge and lasso models only");
  }
  std::map<std::string, double> by_name;
  for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
    by_name[model.feature_names[j]] = std::abs(model.beta[static_cast<Eigen::Index>(j)]);
  }
  Eigen::VectorXd out =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(all_columns.size()));
  std::size_t matched = 0;
  for (std::size_t i = 0; i < all_columns.size(); ++i) {
    auto it = by_name.find(all_columns[i].canonical());
    if (it != by_name.end()) {
      out[static_cast<Eigen::Index>(i)] = it->second;
      ++matched;
    }
  }
  if (matched != model.feature_names.size()) {
    throw ConsistencyError("model columns are not a subset of the feature set");
  }
  return out;
}

std::map<ChannelId, double> aggregate_by_sensor(
    const std::vector<FeatureName>& columns,
    const Eigen::Ref<const Eigen::VectorXd>& contributions) {
  if (columns.size() != static_cast<std::size_t>(contributions.size()) ||
      columns.empty()) {
    throw ConsistencyError("columns and contributions differ in length");
  }
  const double total = contributions.sum();
  if (!(total > 0)) {
    throw UndefinedValueError("zero total contribution; shares are undefined");
  }
  std::map<ChannelId, double> shares;
  for (ChannelId ch : kAllChannels) shares[ch] = 0.0;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    shares[columns[i].channel] += contributions[static_cast<Eigen::Index>(i)];
  }
  for (auto& [ch, v] : shares) v = v / total * 100.0;
  return shares;
}

DurationShares aggregate_by_duration(
    const std::vector<FeatureName>& columns,
    const Eigen::Ref<const Eigen::VectorXd>& contributions,
    const std::map<double, int>& window_counts) {
  if (columns.size() != static_cast<std::size_t>(contributions.size()) ||
      columns.empty()) {
    throw ConsistencyError("columns and contributions differ in length");
  }
  std::map<double, double> mass;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].scope != FeatureScope::Arterial) {
      throw ValidationError(
          "duration shares are defined for arterial feature sets only");
    }
    mass[columns[i].duration_target] += contributions[static_cast<Eigen::Index>(i)];
  }
  double total = 0;
  for (const auto& [d, m] : mass) total += m;
  if (!(total > 0)) {
    throw UndefinedValueError("zero total contribution; shares are undefined");
  }

  DurationShares shares;
  double norm_total = 0;
  for (const auto& [d, m] : mass) {
    shares.unnormalized[d] = m / total * 100.0;
    auto it = window_counts.find(d);
    if (it == window_counts.end() || it->second < 1) {
      throw ConsistencyError("missing window count for duration target " +
                             duration_label(d));
    }
    norm_total += m / it->second;
  }
  for (const auto& [d, m] : mass) {
    shares.normalized[d] = (m / window_counts.at(d)) / norm_total * 100.0;
  }
  return shares;
}

ImportanceReport importance_for_target(const FeatureMatrix& features,
                                       const Eigen::Ref<const Eigen::VectorXd>& y,
                                       const std::string& target, ModelKind kind,
                                       double reg, double corr_threshold,
                                       const std::map<double, int>& window_counts) {
  ImportanceReport report;
  report.target = target;
  report.kind = kind;
  report.reg = reg;

  const std::vector<int> survivors =
      filter_features(features.values, y, corr_threshold);
  if (survivors.empty()) {
    throw DegenerateError("no features pass the correlation filter for '" +
                          target + "'");
  }
  Eigen::MatrixXd x(features.rows(), static_cast<Eigen::Index>(survivors.size()));
  std::vector<std::string> names;
  names.reserve(survivors.size());
  for (std::size_t j = 0; j < survivors.size(); ++j) {
    x.col(static_cast<Eigen::Index>(j)) = features.values.col(survivors[j]);
    names.push_back(features.columns[static_cast<std::size_t>(survivors[j])].canonical());
  }

  FittedModel model = kind == ModelKind::ridge ? ridge_fit(x, y, reg)
                                               : lasso_fit(x, y, reg);
  model.feature_names = std::move(names);
  report.surviving_features = static_cast<int>(survivors.size());

  const Eigen::VectorXd contributions =
      feature_contributions(model, features.columns);
  report.sensor_shares = aggregate_by_sensor(features.columns, contributions);

  const bool arterial = !features.columns.empty() &&
                        features.columns.front().scope == FeatureScope::Arterial;
  if (arterial && !window_counts.empty()) {
    report.duration_shares =
        aggregate_by_duration(features.columns, contributions, window_counts);
    report.has_duration_shares = true;
  }
  return report;
}

nlohmann::ordered_json ImportanceReport::to_json() const {
  nlohmann::ordered_json j;
  j["target"] = target;
  j["model"] = std::string(model_kind_name(kind));
  j["reg"] = reg;
  if (!road_scope.empty()) j["road_scope"] = road_scope;
  if (!variant.empty()) j["variant"] = variant;
  j["surviving_features"] = surviving_features;

  // Sensors sorted by descending share, mirroring the top-k table layout.
  std::vector<std::pair<ChannelId, double>> sorted(sensor_shares.begin(),
                                                   sensor_shares.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  j["sensor_shares"] = nlohmann::json::array();
  for (const auto& [ch, share] : sorted) {
    j["sensor_shares"].push_back({{"sensor", std::string(channel_name(ch))},
                                  {"share_pct", share}});
  }
  if (has_duration_shares) {
    j["duration_shares"] = nlohmann::json::array();
    for (const auto& [d, u] : duration_shares.unnormalized) {
      j["duration_shares"].push_back(
          {{"duration", duration_label(d)},
           {"unnormalized_pct", u},
           {"normalized_pct", duration_shares.normalized.at(d)}});
    }
  }
  return j;
}

void ImportanceReport::write_sensor_csv(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  std::vector<std::pair<ChannelId, double>> sorted(sensor_shares.begin(),
                                                   sensor_shares.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  out << "sensor,share_pct\n";
  char buf[32];
  for (const auto& [ch, share] : sorted) {
    std::snprintf(buf, sizeof(buf), "%.4f", share);
    out << channel_name(ch) << ',' << buf << "\n";
  }
}

void ImportanceReport::write_duration_csv(const std::filesystem::path& file) const {
  if (!has_duration_shares) {
    throw UnsupportedKindError("no duration shares in this report");
  }
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out << "duration,unnormalized_pct,normalized_pct\n";
  char b1[32], b2[32];
  // Emit in grid order: longest duration first, with "all" leading.
  std::vector<double> order;
  for (const auto& [d, u] : duration_shares.unnormalized) order.push_back(d);
  std::sort(order.begin(), order.end(), std::greater<double>());
  for (double d : order) {
    std::snprintf(b1, sizeof(b1), "%.4f", duration_shares.unnormalized.at(d));
    std::snprintf(b2, sizeof(b2), "%.4f", duration_shares.normalized.at(d));
    out << duration_label(d) << ',' << b1 << ',' << b2 << "\n";
  }
}

}  // namespace drivetraits
