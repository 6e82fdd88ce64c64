#include "drivetraits/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "drivetraits/errors.hpp"

namespace drivetraits {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kEarthMetersPerDegLat = 111320.0;

struct LocalXY {
  double x = 0;
  double y = 0;
};

// Project relative to `ref`; both inputs in degrees.
LocalXY to_local(const GeoPoint& p, const GeoPoint& ref) {
  const double c = std::cos(ref.lat * kPi / 180.0);
  return {(p.lon - ref.lon) * kEarthMetersPerDegLat * c,
          (p.lat - ref.lat) * kEarthMetersPerDegLat};
}
}  // namespace

double geo_distance_m(const GeoPoint& a, const GeoPoint& b) {
  const GeoPoint mid{(a.lat + b.lat) / 2, (a.lon + b.lon) / 2};
  const LocalXY pa = to_local(a, mid);
  const LocalXY pb = to_local(b, mid);
  return std::hypot(pa.x - pb.x, pa.y - pb.y);
}

double geo_distance_to_polyline_m(const GeoPoint& p,
                                  const std::vector<GeoPoint>& polyline) {
  if (polyline.empty()) return std::numeric_limits<double>::infinity();
  if (polyline.size() == 1) return geo_distance_m(p, polyline.front());

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    const GeoPoint& a = polyline[i];
    const GeoPoint& b = polyline[i + 1];
    const LocalXY pp = to_local(p, a);
    const LocalXY pb = to_local(b, a);
    const double seg2 = pb.x * pb.x + pb.y * pb.y;
    double t = seg2 > 0 ? (pp.x * pb.x + pp.y * pb.y) / seg2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = pp.x - t * pb.x;
    const double dy = pp.y - t * pb.y;
    best = std::min(best, std::hypot(dx, dy));
  }
  return best;
}

void RouteMap::validate() const {
  if (arterial_polyline.size() < 2) {
    throw ValidationError("arterial polyline needs at least 2 points");
  }
  if (arterial_radius_m <= 0) {
    throw ValidationError("arterial capture radius must be positive");
  }
  if (intersections.empty()) {
    throw ValidationError("route map needs at least one intersection zone");
  }
  for (const auto& z : intersections) {
    if (z.radius_m <= 0) {
      throw ValidationError("intersection '" + z.id + "' radius must be positive");
    }
    if (z.id.empty()) throw ValidationError("intersection zone without id");
  }
  for (std::size_t i = 0; i < intersections.size(); ++i) {
    for (std::size_t j = i + 1; j < intersections.size(); ++j) {
      const auto& a = intersections[i];
      const auto& b = intersections[j];
      if (a.id == b.id) {
        throw ValidationError("duplicate intersection id '" + a.id + "'");
      }
      if (geo_distance_m(a.center, b.center) <= a.radius_m + b.radius_m) {
        throw ValidationError("intersection zones '" + a.id + "' and '" + b.id +
                              "' overlap");
      }
    }
  }
}

RouteMap load_route_map(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open route map " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("route map " + file.string() + ": " + e.what());
  }
  RouteMap map;
  try {
    for (const auto& pt : j.at("arterial").at("polyline")) {
      map.arterial_polyline.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
    }
    map.arterial_radius_m = j.at("arterial").at("radius_m").get<double>();
    for (const auto& z : j.at("intersections")) {
      IntersectionZone zone;
      zone.id = z.at("id").get<std::string>();
      zone.center = {z.at("center").at(0).get<double>(),
                     z.at("center").at(1).get<double>()};
      zone.radius_m = z.at("radius_m").get<double>();
      map.intersections.push_back(zone);
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("route map " + file.string() + ": " + e.what());
  }
  map.validate();
  return map;
}

void write_route_map(const RouteMap& map, const std::filesystem::path& file) {
  nlohmann::ordered_json j;
  j["arterial"]["polyline"] = nlohmann::json::array();
  for (const auto& p : map.arterial_polyline) {
    j["arterial"]["polyline"].push_back({p.lat, p.lon});
  }
  j["arterial"]["radius_m"] = map.arterial_radius_m;
  j["intersections"] = nlohmann::json::array();
  for (const auto& z : map.intersections) {
    nlohmann::ordered_json zj;
    zj["id"] = z.id;
    zj["center"] = {z.center.lat, z.center.lon};
    zj["radius_m"] = z.radius_m;
    j["intersections"].push_back(zj);
  }
  std::ofstream out(file);
  if (!out) throw IoError("cannot write route map " + file.string());
  out << j.dump(2) << "\n";
}

RoadLabels classify_frames(const DriveSession& session, const RouteMap& map) {
  map.validate();
  if (session.lat.size() == 0) {
    throw ValidationError("session " + session.session_id() + " has no position trace");
  }
  RoadLabels out;
  out.labels.resize(static_cast<std::size_t>(session.frame_count()));
  bool any_in_zone = false;
  for (Eigen::Index f = 0; f < session.frame_count(); ++f) {
    const GeoPoint p{session.lat[f], session.lon[f]};
    FrameLabel label;
    for (std::size_t z = 0; z < map.intersections.size(); ++z) {
      if (geo_distance_m(p, map.intersections[z].center) <=
          map.intersections[z].radius_m) {
        label = {RoadType::Intersection, static_cast<int>(z)};
        break;
      }
    }
    if (label.type != RoadType::Intersection &&
        geo_distance_to_polyline_m(p, map.arterial_polyline) <=
            map.arterial_radius_m) {
      label = {RoadType::Arterial, -1};
    }
    any_in_zone = any_in_zone || label.type != RoadType::Other;
    out.labels[static_cast<std::size_t>(f)] = label;
  }
  if (!any_in_zone) {
    out.empty_route_warning = true;
    out.warnings.push_back("session " + session.session_id() +
                           " never entered the arterial corridor or any intersection");
  }
  return out;
}

std::string duration_label(double seconds) {
  if (is_whole_target(seconds)) return "all";
  if (seconds == std::floor(seconds)) {
    return "d" + std::to_string(static_cast<long long>(seconds));
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "d%g", seconds);
  return buf;
}

void DurationGrid::validate() const {
  if (targets.empty()) throw ValidationError("duration grid is empty");
  if (cohort_mean_arterial_s <= 0) {
    throw ValidationError("cohort mean arterial duration must be positive");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!(targets[i] > 0)) {
      throw ValidationError("duration targets must be positive");
    }
    if (i > 0 && !(targets[i] < targets[i - 1])) {
      throw ValidationError("duration targets must be strictly decreasing");
    }
  }
}

std::map<double, int> plan_arterial_windows(const DurationGrid& grid) {
  grid.validate();
  std::map<double, int> plan;
  for (double t : grid.targets) {
    if (is_whole_target(t)) {
      plan[t] = 1;
    } else {
      plan[t] = std::max(1, static_cast<int>(std::lround(
                                grid.cohort_mean_arterial_s / t)));
    }
  }
  return plan;
}

std::vector<std::vector<int>> segment_arterial(const RoadLabels& labels, int k) {
  if (k < 1) throw ValidationError("window count must be at least 1");
  std::vector<int> frames;
  for (std::size_t f = 0; f < labels.size(); ++f) {
    if (labels.labels[f].type == RoadType::Arterial) {
      frames.push_back(static_cast<int>(f));
    }
  }
  const int n = static_cast<int>(frames.size());
  if (n < k) {
    throw InsufficientDataError("only " + std::to_string(n) +
                                " arterial frames for " + std::to_string(k) +
                                " windows");
  }
  std::vector<std::vector<int>> windows(static_cast<std::size_t>(k));
  const int base = n / k;
  const int extra = n % k;  // earlier windows absorb the remainder
  int pos = 0;
  for (int w = 0; w < k; ++w) {
    const int len = base + (w < extra ? 1 : 0);
    windows[static_cast<std::size_t>(w)].assign(frames.begin() + pos,
                                                frames.begin() + pos + len);
    pos += len;
  }
  return windows;
}

namespace {

// First contiguous run of Intersection(zone) labels; further runs produce
// warnings in `warnings`.
FrameRange first_pass(const RoadLabels& labels, int zone,
                      std::vector<std::string>* warnings) {
  FrameRange pass;
  bool found = false;
  std::size_t f = 0;
  const std::size_t n = labels.size();
  while (f < n) {
    if (labels.labels[f].type == RoadType::Intersection &&
        labels.labels[f].zone == zone) {
      std::size_t start = f;
      while (f < n && labels.labels[f].type == RoadType::Intersection &&
             labels.labels[f].zone == zone) {
        ++f;
      }
      if (!found) {
        pass = {static_cast<int>(start), static_cast<int>(f)};
        found = true;
      } else if (warnings) {
        warnings->push_back("repeat pass through intersection zone " +
                            std::to_string(zone) + " at frame " +
                            std::to_string(start) + " ignored");
      }
    } else {
      ++f;
    }
  }
  if (!found) {
    throw InsufficientDataError("no pass through intersection zone " +
                                std::to_string(zone));
  }
  return pass;
}

}  // namespace

IntersectionSplit split_intersection(const DriveSession& session,
                                     const RoadLabels& labels, int zone_index,
                                     double brake_epsilon_mpa) {
  if (labels.size() != static_cast<std::size_t>(session.frame_count())) {
    throw ConsistencyError("road labels do not match session length");
  }
  IntersectionSplit split;
  split.zone = zone_index;
  split.pass = first_pass(labels, zone_index, nullptr);

  const Eigen::VectorXd& brake = session.channel(ChannelId::brake_pressure);

  // Locate the end of the last maximal braking interval within the pass.
  int last_braking = -1;
  for (int f = split.pass.begin; f < split.pass.end; ++f) {
    if (brake[f] > brake_epsilon_mpa) last_braking = f;
  }
  if (last_braking < 0) {
    split.no_brake = true;
    split.before = {split.pass.begin, split.pass.begin};
    split.after = split.pass;
    return split;
  }
  const int release = last_braking + 1;  // may be pass.end: never released
  split.before = {split.pass.begin, release};
  split.after = {release, split.pass.end};
  return split;
}

SegmentSet build_segment_set(const DriveSession& session, const RoadLabels& labels,
                             const RouteMap& map, const DurationGrid& grid,
                             double brake_epsilon_mpa) {
  SegmentSet set;
  set.warnings = labels.warnings;

  for (std::size_t f = 0; f < labels.size(); ++f) {
    if (labels.labels[f].type == RoadType::Arterial) {
      set.arterial_frames.push_back(static_cast<int>(f));
    }
  }

  const auto plan = plan_arterial_windows(grid);
  for (const auto& [target, k] : plan) {
    if (static_cast<int>(set.arterial_frames.size()) < k) {
      set.warnings.push_back("session " + session.session_id() + ": only " +
                             std::to_string(set.arterial_frames.size()) +
                             " arterial frames for duration target " +
                             duration_label(target) + " (needs " +
                             std::to_string(k) + ")");
      continue;
    }
    set.arterial[target] = segment_arterial(labels, k);
  }

  for (std::size_t z = 0; z < map.intersections.size(); ++z) {
    bool visited = false;
    for (const auto& l : labels.labels) {
      if (l.type == RoadType::Intersection && l.zone == static_cast<int>(z)) {
        visited = true;
        break;
      }
    }
    if (!visited) {
      set.warnings.push_back("session " + session.session_id() +
                             " never passed intersection '" +
                             map.intersections[z].id + "'");
      continue;
    }
    first_pass(labels, static_cast<int>(z), &set.warnings);  // repeat-pass warnings
    set.intersections[static_cast<int>(z)] =
        split_intersection(session, labels, static_cast<int>(z), brake_epsilon_mpa);
  }
  return set;
}

}  // namespace drivetraits
