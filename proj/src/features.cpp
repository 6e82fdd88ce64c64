#include "drivetraits/features.hpp"

#include <cstdio>
#include <fstream>

#include "drivetraits/errors.hpp"

namespace drivetraits {

Stats6 stats6_at(const Eigen::VectorXd& series, const std::vector<int>& frames) {
  Eigen::VectorXd gathered(static_cast<Eigen::Index>(frames.size()));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    gathered[static_cast<Eigen::Index>(i)] = series[frames[i]];
  }
  return stats6(gathered);
}

Stats6 stats6_range(const Eigen::VectorXd& series, int begin, int end) {
  if (end <= begin) return Stats6{};
  return stats6(series.segment(begin, end - begin));
}

std::string_view stat_name(StatId id) {
  switch (id) {
    case StatId::mean: return "mean";
    case StatId::median: return "median";
    case StatId::variance: return "variance";
    case StatId::maximum: return "maximum";
    case StatId::kurtosis: return "kurtosis";
    case StatId::skewness: return "skewness";
  }
  return "unknown";
}

std::string_view phase_name(IntersectionPhase p) {
  switch (p) {
    case IntersectionPhase::Before: return "before";
    case IntersectionPhase::After: return "after";
    case IntersectionPhase::Whole: return "whole";
  }
  return "unknown";
}

std::string FeatureName::canonical() const {
  std::string s;
  switch (scope) {
    case FeatureScope::Arterial: {
      char w[16];
      std::snprintf(w, sizeof(w), "w%02d", window_index + 1);
      s = "art." + duration_label(duration_target) + "." + w;
      break;
    }
    case FeatureScope::Intersection:
      s = "int." + zone_id + "." + std::string(phase_name(phase));
      break;
    case FeatureScope::WholeDrive:
      s = "whole";
      break;
  }
  s += ".";
  s += channel_name(channel);
  s += ".";
  s += stat_name(stat);
  return s;
}

std::vector<FeatureName> arterial_columns(const DurationGrid& grid) {
  const auto plan = plan_arterial_windows(grid);
  std::vector<FeatureName> cols;
  for (double target : grid.targets) {
    const int k = plan.at(target);
    for (int w = 0; w < k; ++w) {
      for (ChannelId ch : kAllChannels) {
        for (StatId st : kAllStats) {
          FeatureName f;
          f.scope = FeatureScope::Arterial;
          f.duration_target = target;
          f.window_index = w;
          f.channel = ch;
          f.stat = st;
          cols.push_back(f);
        }
      }
    }
  }
  return cols;
}

std::vector<FeatureName> intersection_columns(const RouteMap& map,
                                              const FeaturizeOptions& opts) {
  std::vector<FeatureName> cols;
  std::vector<IntersectionPhase> phases = {IntersectionPhase::Before,
                                           IntersectionPhase::After};
  if (opts.include_whole_pass) phases.push_back(IntersectionPhase::Whole);
  for (const auto& zone : map.intersections) {
    for (IntersectionPhase ph : phases) {
      for (ChannelId ch : kAllChannels) {
        for (StatId st : kAllStats) {
          FeatureName f;
          f.scope = FeatureScope::Intersection;
          f.zone_id = zone.id;
          f.phase = ph;
          f.channel = ch;
          f.stat = st;
          cols.push_back(f);
        }
      }
    }
  }
  return cols;
}

std::vector<FeatureName> whole_drive_columns() {
  std::vector<FeatureName> cols;
  for (ChannelId ch : kAllChannels) {
    for (StatId st : kAllStats) {
      FeatureName f;
      f.scope = FeatureScope::WholeDrive;
      f.channel = ch;
      f.stat = st;
      cols.push_back(f);
    }
  }
  return cols;
}

namespace {

int zone_index_of(const RouteMap& map, const std::string& zone_id) {
  for (std::size_t z = 0; z < map.intersections.size(); ++z) {
    if (map.intersections[z].id == zone_id) return static_cast<int>(z);
  }
  throw ConsistencyError("unknown intersection zone '" + zone_id + "'");
}

}  // namespace

FeatureMatrix build_feature_matrix(
    const std::vector<DriveSession>& sessions,
    const std::map<std::string, SegmentSet>& segment_sets, const DurationGrid& grid,
    const RouteMap& map, FeatureScope scope, const FeaturizeOptions& opts) {
  FeatureMatrix matrix;
  switch (scope) {
    case FeatureScope::Arterial:
      matrix.columns = arterial_columns(grid);
      break;
    case FeatureScope::Intersection:
      matrix.columns = intersection_columns(map, opts);
      break;
    case FeatureScope::WholeDrive:
      matrix.columns = whole_drive_columns();
      break;
  }

  matrix.values.resize(static_cast<Eigen::Index>(sessions.size()),
                       static_cast<Eigen::Index>(matrix.columns.size()));
  matrix.values.setConstant(missing_value());

  for (std::size_t s = 0; s < sessions.size(); ++s) {
    const DriveSession& session = sessions[s];
    matrix.session_ids.push_back(session.session_id());
    matrix.driver_ids.push_back(session.driver_id);

    const SegmentSet* set = nullptr;
    if (scope != FeatureScope::WholeDrive) {
      auto it = segment_sets.find(session.session_id());
      if (it == segment_sets.end()) {
        throw ConsistencyError("no segment set for session " +
                               session.session_id());
      }
      set = &it->second;
    }

    // Cache the six statistics per (segment, channel) so each segment is
    // scanned once.
    Stats6 cached;
    const FeatureName* cached_key = nullptr;
    auto same_segment = [](const FeatureName& a, const FeatureName& b) {
      return a.scope == b.scope && a.duration_target == b.duration_target &&
             a.window_index == b.window_index && a.zone_id == b.zone_id &&
             a.phase == b.phase && a.channel == b.channel;
    };

    for (std::size_t j = 0; j < matrix.columns.size(); ++j) {
      const FeatureName& name = matrix.columns[j];
      if (cached_key == nullptr || !same_segment(*cached_key, name)) {
        const Eigen::VectorXd& series = session.channel(name.channel);
        switch (name.scope) {
          case FeatureScope::WholeDrive:
            cached = stats6(series);
            break;
          case FeatureScope::Arterial: {
            auto it = set->arterial.find(name.duration_target);
            if (it == set->arterial.end()) {
              cached = Stats6{};  // insufficient data for this target
            } else {
              cached = stats6_at(series,
                                 it->second[static_cast<std::size_t>(name.window_index)]);
            }
            break;
          }
          case FeatureScope::Intersection: {
            const int zone = zone_index_of(map, name.zone_id);
            auto it = set->intersections.find(zone);
            if (it == set->intersections.end()) {
              cached = Stats6{};  // zone never visited
            } else {
              FrameRange r;
              switch (name.phase) {
                case IntersectionPhase::Before: r = it->second.before; break;
                case IntersectionPhase::After: r = it->second.after; break;
                case IntersectionPhase::Whole: r = it->second.pass; break;
              }
              cached = stats6_range(series, r.begin, r.end);
            }
            break;
          }
        }
        cached_key = &name;
      }
      matrix.values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) =
          cached.get(name.stat);
    }
  }
  return matrix;
}

FeatureMatrix drop_missing(const FeatureMatrix& matrix) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
    if (!matrix.any_missing_in_column(j)) keep.push_back(j);
  }
  if (keep.empty()) {
    throw EmptyMatrixError("every feature column contains a missing value");
  }
  FeatureMatrix out;
  out.session_ids = matrix.session_ids;
  out.driver_ids = matrix.driver_ids;
  out.values.resize(matrix.rows(), static_cast<Eigen::Index>(keep.size()));
  out.columns.reserve(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.columns.push_back(matrix.columns[static_cast<std::size_t>(keep[i])]);
    out.values.col(static_cast<Eigen::Index>(i)) = matrix.values.col(keep[i]);
  }
  return out;
}

void write_feature_csv(const FeatureMatrix& matrix,
                       const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write feature matrix " + file.string());
  out << "session_id,driver_id";
  for (const auto& c : matrix.columns) out << ',' << c.canonical();
  out << "\n";
  char buf[40];
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    out << matrix.session_ids[static_cast<std::size_t>(r)] << ','
        << matrix.driver_ids[static_cast<std::size_t>(r)];
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      const double v = matrix.values(r, j);
      if (is_missing(v)) {
        out << ',';
      } else {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << ',' << buf;
      }
    }
    out << "\n";
  }
}

}  // namespace drivetraits
