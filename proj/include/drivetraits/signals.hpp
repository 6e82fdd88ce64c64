#pragma once

#include <Eigen/Core>
#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "drivetraits/channels.hpp"

namespace drivetraits {

// One driver's one drive: aligned multichannel sensor series plus the GPS
// position trace. Immutable after construction.
struct DriveSession {
  std::string driver_id;
  int session_index = 1;  // 1 or 2
  double sample_rate_hz = 10.0;
  std::map<ChannelId, Eigen::VectorXd> channels;
  Eigen::VectorXd lat;
  Eigen::VectorXd lon;

  Eigen::Index frame_count() const { return lat.size(); }

  // Elapsed time between first and last sample.
  double duration_s() const {
    return frame_count() < 2 ? 0.0
                             : static_cast<double>(frame_count() - 1) / sample_rate_hz;
  }

  std::string session_id() const {
    return driver_id + "_s" + std::to_string(session_index);
  }

  const Eigen::VectorXd& channel(ChannelId id) const;
  bool has_channel(ChannelId id) const { return channels.count(id) > 0; }
};

inline constexpr int kDsqItems = 8;
inline constexpr int kWsqItems = 10;
inline constexpr int kTargetCount = 4 + kDsqItems + kWsqItems;  // 22

// Per-driver ground truth: 4 continuous cognitive scores plus the ordinal
// questionnaire items.
struct TraitRow {
  double tmt_a = 0;  // seconds
  double tmt_b = 0;  // seconds
  double maze = 0;   // seconds
  double ufov = 0;   // milliseconds
  std::array<int, kDsqItems> dsq{};  // each in 1..4
  std::array<int, kWsqItems> wsq{};  // each in 1..5

  // Target value by canonical name ("tmt_b", "dsq_3", "wsq_10", ...).
  double value(const std::string& target) const;
};

struct TraitTable {
  // Ordered by insertion (file order).
  std::vector<std::string> driver_ids;
  std::map<std::string, TraitRow> rows;

  const TraitRow& row(const std::string& driver_id) const;
  std::size_t size() const { return driver_ids.size(); }
};

// Canonical list of the 22 prediction targets; first 4 are the continuous
// cognitive scores, the rest the binary-classified questionnaire items.
const std::vector<std::string>& all_targets();
bool is_regression_target(const std::string& target);

// --- telemetry / trait CSV interfaces ---------------------------------------

// Telemetry CSV columns, in order. `t` is seconds and must be strictly
// increasing.
inline constexpr std::array<std::string_view, 12> kTelemetryColumns = {
    "t",         "steering_deg", "eps_torque_nm", "acc_fwd_ms2",
    "acc_lat_ms2", "yaw_deg_s",  "speed_kmh",     "accel_pct",
    "brake_mpa", "fuel_ml",      "lat",           "lon"};

// Loads one session. The 9 measured channels are populated; derived channels
// are absent until derive_channels(). An optional leading comment line
// `# sample_rate_hz=<R>` overrides the default 10 Hz.
DriveSession load_session(const std::filesystem::path& telemetry_file,
                          const std::string& driver_id, int session_index);

void write_session(const DriveSession& session,
                   const std::filesystem::path& telemetry_file);

// Returns a copy of `session` with the 4 first-difference channels added:
// derived[t] = (parent[t] - parent[t-1]) * sample_rate, derived[0] = 0.
// Throws ValidationError if any derived channel is already present.
DriveSession derive_channels(const DriveSession& session);

// Traits CSV: header driver_id,tmt_a,tmt_b,maze,ufov,dsq_1..dsq_8,wsq_1..wsq_10
TraitTable load_traits(const std::filesystem::path& traits_file);
void write_traits(const TraitTable& table, const std::filesystem::path& traits_file);

}  // namespace drivetraits
