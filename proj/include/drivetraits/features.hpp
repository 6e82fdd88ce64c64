#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "drivetraits/segmentation.hpp"
#include "drivetraits/signals.hpp"
#include "drivetraits/stats.hpp"

namespace drivetraits {

enum class FeatureScope { Arterial, Intersection, WholeDrive };
enum class IntersectionPhase { Before, After, Whole };

std::string_view phase_name(IntersectionPhase p);

// Identifies one feature column: where it was measured, which channel, and
// which statistic. Names are stable across sessions.
struct FeatureName {
  FeatureScope scope = FeatureScope::WholeDrive;
  double duration_target = kWholeArterial;  // Arterial scope
  int window_index = 0;                     // Arterial scope, 0-based
  std::string zone_id;                      // Intersection scope
  IntersectionPhase phase = IntersectionPhase::Whole;
  ChannelId channel = ChannelId::steering_angle;
  StatId stat = StatId::mean;

  // "art.d60.w03.steering_angle.kurtosis", "int.int2.before.brake_pressure.mean",
  // "whole.speed.variance"
  std::string canonical() const;
};

// Rows are driving sessions, columns named features; NaN marks missing values.
struct FeatureMatrix {
  std::vector<std::string> session_ids;
  std::vector<std::string> driver_ids;  // parallel to session_ids
  std::vector<FeatureName> columns;
  Eigen::MatrixXd values;  // session x feature, NaN = missing

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  bool any_missing_in_column(Eigen::Index j) const {
    return values.col(j).array().isNaN().any();
  }
};

struct FeaturizeOptions {
  bool include_whole_pass = true;  // intersection whole-pass columns
};

// Column layout for a scope; depends only on the grid / zones, never on
// session content.
std::vector<FeatureName> arterial_columns(const DurationGrid& grid);
std::vector<FeatureName> intersection_columns(const RouteMap& map,
                                              const FeaturizeOptions& opts = {});
std::vector<FeatureName> whole_drive_columns();

// Assembles the feature matrix for one scope. `sessions` must already carry
// the derived channels; `segment_sets` is keyed by session id.
FeatureMatrix build_feature_matrix(
    const std::vector<DriveSession>& sessions,
    const std::map<std::string, SegmentSet>& segment_sets, const DurationGrid& grid,
    const RouteMap& map, FeatureScope scope, const FeaturizeOptions& opts = {});

// Removes every column that is missing in at least one row; survivor order is
// preserved. Throws EmptyMatrixError when nothing survives.
FeatureMatrix drop_missing(const FeatureMatrix& matrix);

void write_feature_csv(const FeatureMatrix& matrix,
                       const std::filesystem::path& file);

}  // namespace drivetraits
