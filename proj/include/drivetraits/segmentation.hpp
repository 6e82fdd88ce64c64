#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "drivetraits/signals.hpp"

namespace drivetraits {

// --- geography ---------------------------------------------------------------

struct GeoPoint {
  double lat = 0;
  double lon = 0;
};

// Equirectangular approximation; adequate for route extents of a few km.
double geo_distance_m(const GeoPoint& a, const GeoPoint& b);
double geo_distance_to_polyline_m(const GeoPoint& p,
                                  const std::vector<GeoPoint>& polyline);

// --- route configuration -----------------------------------------------------

struct IntersectionZone {
  std::string id;
  GeoPoint center;
  double radius_m = 0;
};

struct RouteMap {
  std::vector<GeoPoint> arterial_polyline;
  double arterial_radius_m = 0;
  std::vector<IntersectionZone> intersections;  // ordered, pairwise disjoint

  void validate() const;
};

RouteMap load_route_map(const std::filesystem::path& file);
void write_route_map(const RouteMap& map, const std::filesystem::path& file);

// --- per-frame road labels ---------------------------------------------------

enum class RoadType { Arterial, Intersection, Other };

struct FrameLabel {
  RoadType type = RoadType::Other;
  int zone = -1;  // index into RouteMap::intersections when type == Intersection
};

struct RoadLabels {
  std::vector<FrameLabel> labels;
  bool empty_route_warning = false;  // no frame fell inside any zone
  std::vector<std::string> warnings;

  std::size_t size() const { return labels.size(); }
};

// Intersection zones take priority over the arterial corridor; anything else
// is Other.
RoadLabels classify_frames(const DriveSession& session, const RouteMap& map);

// --- duration grid and segment sets ------------------------------------------

// Whole-segment sentinel: the "All" duration target.
inline constexpr double kWholeArterial = std::numeric_limits<double>::infinity();
inline bool is_whole_target(double seconds) {
  return seconds == kWholeArterial;
}
std::string duration_label(double seconds);  // "all", "d60", "d3", ...

struct DurationGrid {
  // Strictly decreasing after the leading "All" entry.
  std::vector<double> targets = {kWholeArterial, 60, 30, 15, 10, 5, 3};
  double cohort_mean_arterial_s = 355;

  void validate() const;
};

// Window counts shared by every session so feature columns align across
// drivers: K(All) = 1, K(d) = round(cohort_mean / d), at least 1.
std::map<double, int> plan_arterial_windows(const DurationGrid& grid);

// Contiguous frame range [begin, end).
struct FrameRange {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
  bool empty() const { return end <= begin; }
};

struct IntersectionSplit {
  int zone = -1;
  FrameRange pass;    // first contiguous pass through the zone
  FrameRange before;  // up to the brake-release frame
  FrameRange after;   // from the brake-release frame to pass end
  bool no_brake = false;  // driver never exceeded brake_epsilon in the pass
};

struct SegmentSet {
  // duration target -> K windows, each a sorted list of session frame indices.
  // Targets with fewer arterial frames than K are absent.
  std::map<double, std::vector<std::vector<int>>> arterial;
  // zone index -> split of the first pass; zones never visited are absent.
  std::map<int, IntersectionSplit> intersections;
  std::vector<int> arterial_frames;  // temporal order
  std::vector<std::string> warnings;
};

// Splits the session's arterial frames (temporal order, runs concatenated)
// into K near-equal contiguous chunks; sizes differ by at most one, the
// remainder going to the earlier chunks.
std::vector<std::vector<int>> segment_arterial(const RoadLabels& labels, int k);

// Brake-release split of the first pass through `zone_index`. The release
// frame is the first frame after the last maximal interval with
// brake_pressure > brake_epsilon at which pressure has dropped back to
// <= brake_epsilon.
IntersectionSplit split_intersection(const DriveSession& session,
                                     const RoadLabels& labels, int zone_index,
                                     double brake_epsilon_mpa);

inline constexpr double kDefaultBrakeEpsilonMpa = 0.02;

// Full segmentation of one session under a grid.
SegmentSet build_segment_set(const DriveSession& session, const RoadLabels& labels,
                             const RouteMap& map, const DurationGrid& grid,
                             double brake_epsilon_mpa = kDefaultBrakeEpsilonMpa);

}  // namespace drivetraits
