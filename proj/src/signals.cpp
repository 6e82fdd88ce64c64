#include "drivetraits/signals.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "drivetraits/errors.hpp"

namespace drivetraits {

std::string_view channel_name(ChannelId id) {
  switch (id) {
    case ChannelId::steering_angle: return "steering_angle";
    case ChannelId::eps_torque: return "eps_torque";
    case ChannelId::forward_accel: return "forward_accel";
    case ChannelId::lateral_accel: return "lateral_accel";
    case ChannelId::yaw_rate: return "yaw_rate";
    case ChannelId::speed: return "speed";
    case ChannelId::accelerator_position: return "accelerator_position";
    case ChannelId::brake_pressure: return "brake_pressure";
    case ChannelId::fuel_consumption: return "fuel_consumption";
    case ChannelId::steering_velocity: return "steering_velocity";
    case ChannelId::forward_jerk: return "forward_jerk";
    case ChannelId::lateral_jerk: return "lateral_jerk";
    case ChannelId::accelerator_rate: return "accelerator_rate";
  }
  return "unknown";
}

std::string_view channel_unit(ChannelId id) {
  switch (id) {
    case ChannelId::steering_angle: return "deg";
    case ChannelId::eps_torque: return "Nm";
    case ChannelId::forward_accel: return "m/s^2";
    case ChannelId::lateral_accel: return "m/s^2";
    case ChannelId::yaw_rate: return "deg/s";
    case ChannelId::speed: return "km/h";
    case ChannelId::accelerator_position: return "%";
    case ChannelId::brake_pressure: return "MPa";
    case ChannelId::fuel_consumption: return "ml";
    case ChannelId::steering_velocity: return "deg/s";
    case ChannelId::forward_jerk: return "m/s^3";
    case ChannelId::lateral_jerk: return "m/s^3";
    case ChannelId::accelerator_rate: return "%/s";
  }
  return "";
}

std::optional<ChannelId> channel_from_name(std::string_view name) {
  for (ChannelId id : kAllChannels) {
    if (channel_name(id) == name) return id;
  }
  return std::nullopt;
}

const Eigen::VectorXd& DriveSession::channel(ChannelId id) const {
  auto it = channels.find(id);
  if (it == channels.end()) {
    throw SchemaError("session " + session_id() + " has no channel '" +
                      std::string(channel_name(id)) + "'");
  }
  return it->second;
}

double TraitRow::value(const std::string& target) const {
  if (target == "tmt_a") return tmt_a;
  if (target == "tmt_b") return tmt_b;
  if (target == "maze") return maze;
  if (target == "ufov") return ufov;
  if (target.rfind("dsq_", 0) == 0) {
    int i = std::atoi(target.c_str() + 4);
    if (i >= 1 && i <= kDsqItems) return static_cast<double>(dsq[i - 1]);
  }
  if (target.rfind("wsq_", 0) == 0) {
    int i = std::atoi(target.c_str() + 4);
    if (i >= 1 && i <= kWsqItems) return static_cast<double>(wsq[i - 1]);
  }
  throw ConfigError("unknown target '" + target + "'");
}

const TraitRow& TraitTable::row(const std::string& driver_id) const {
  auto it = rows.find(driver_id);
  if (it == rows.end()) {
    throw ConsistencyError("unknown driver '" + driver_id + "' in trait table");
  }
  return it->second;
}

const std::vector<std::string>& all_targets() {
  static const std::vector<std::string> targets = [] {
    std::vector<std::string> t = {"tmt_a", "tmt_b", "maze", "ufov"};
    for (int i = 1; i <= kDsqItems; ++i) t.push_back("dsq_" + std::to_string(i));
    for (int i = 1; i <= kWsqItems; ++i) t.push_back("wsq_" + std::to_string(i));
    return t;
  }();
  return targets;
}

bool is_regression_target(const std::string& target) {
  return target == "tmt_a" || target == "tmt_b" || target == "maze" ||
         target == "ufov";
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& field, const std::string& context) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || *end != '\0' || errno == ERANGE) {
    throw ParseError("malformed value '" + field + "' " + context);
  }
  return v;
}

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

DriveSession load_session(const std::filesystem::path& telemetry_file,
                          const std::string& driver_id, int session_index) {
  std::ifstream in(telemetry_file);
  if (!in) throw IoError("cannot open telemetry file " + telemetry_file.string());

  DriveSession session;
  session.driver_id = driver_id;
  session.session_index = session_index;

  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("empty telemetry file " + telemetry_file.string());
  }

  // Optional rate comment before the header.
  if (!line.empty() && line[0] == '#') {
    auto pos = line.find("sample_rate_hz=");
    if (pos != std::string::npos) {
      session.sample_rate_hz =
          parse_double(line.substr(pos + 15), "in sample_rate_hz header of " +
                                                  telemetry_file.string());
      if (session.sample_rate_hz <= 0) {
        throw ValidationError("sample_rate_hz must be positive in " +
                              telemetry_file.string());
      }
    }
    if (!std::getline(in, line)) {
      throw ParseError("missing header row in " + telemetry_file.string());
    }
  }

  const auto header = split_csv_line(line);
  if (header.size() != kTelemetryColumns.size()) {
    throw SchemaError("telemetry header of " + telemetry_file.string() + " has " +
                      std::to_string(header.size()) + " columns, expected " +
                      std::to_string(kTelemetryColumns.size()));
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] != kTelemetryColumns[i]) {
      throw SchemaError("telemetry column " + std::to_string(i + 1) + " of " +
                        telemetry_file.string() + " is '" + header[i] +
                        "', expected '" + std::string(kTelemetryColumns[i]) + "'");
    }
  }

  std::vector<std::array<double, 12>> rows;
  int row_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row_index;
    const auto fields = split_csv_line(line);
    if (fields.size() != kTelemetryColumns.size()) {
      throw ParseError("row " + std::to_string(row_index) + " of " +
                       telemetry_file.string() + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(kTelemetryColumns.size()));
    }
    std::array<double, 12> vals{};
    for (std::size_t i = 0; i < fields.size(); ++i) {
      vals[i] = parse_double(fields[i], "at row " + std::to_string(row_index) +
                                            ", column '" +
                                            std::string(kTelemetryColumns[i]) +
                                            "' of " + telemetry_file.string());
    }
    if (!rows.empty() && vals[0] <= rows.back()[0]) {
      throw ValidationError("timestamp not strictly increasing at row " +
                            std::to_string(row_index) + " of " +
                            telemetry_file.string());
    }
    rows.push_back(vals);
  }

  if (rows.size() < 2) {
    throw ValidationError("telemetry file " + telemetry_file.string() +
                          " has fewer than 2 samples");
  }

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  std::array<Eigen::VectorXd, 12> cols;
  for (auto& c : cols) c.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int c = 0; c < 12; ++c) cols[static_cast<std::size_t>(c)][r] = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }

  session.channels[ChannelId::steering_angle] = std::move(cols[1]);
  session.channels[ChannelId::eps_torque] = std::move(cols[2]);
  session.channels[ChannelId::forward_accel] = std::move(cols[3]);
  session.channels[ChannelId::lateral_accel] = std::move(cols[4]);
  session.channels[ChannelId::yaw_rate] = std::move(cols[5]);
  session.channels[ChannelId::speed] = std::move(cols[6]);
  session.channels[ChannelId::accelerator_position] = std::move(cols[7]);
  session.channels[ChannelId::brake_pressure] = std::move(cols[8]);
  session.channels[ChannelId::fuel_consumption] = std::move(cols[9]);
  session.lat = std::move(cols[10]);
  session.lon = std::move(cols[11]);
  return session;
}

void write_session(const DriveSession& session,
                   const std::filesystem::path& telemetry_file) {
  std::ofstream out(telemetry_file);
  if (!out) throw IoError("cannot write telemetry file " + telemetry_file.string());

  out << "# sample_rate_hz=" << fmt_g17(session.sample_rate_hz) << "\n";
  for (std::size_t i = 0; i < kTelemetryColumns.size(); ++i) {
    out << (i ? "," : "") << kTelemetryColumns[i];
  }
  out << "\n";

  const double dt = 1.0 / session.sample_rate_hz;
  const Eigen::Index n = session.frame_count();
  std::array<const Eigen::VectorXd*, 9> measured{};
  for (std::size_t i = 0; i < kMeasuredChannels.size(); ++i) {
    measured[i] = &session.channel(kMeasuredChannels[i]);
  }
  for (Eigen::Index r = 0; r < n; ++r) {
    out << fmt_g17(static_cast<double>(r) * dt);
    for (const auto* col : measured) out << ',' << fmt_g17((*col)[r]);
    out << ',' << fmt_g17(session.lat[r]) << ',' << fmt_g17(session.lon[r]) << "\n";
  }
}

DriveSession derive_channels(const DriveSession& session) {
  for (ChannelId id : kDerivedChannels) {
    if (session.has_channel(id)) {
      throw ValidationError("derived channel '" + std::string(channel_name(id)) +
                            "' already present in session " + session.session_id());
    }
  }
  DriveSession out = session;
  const double rate = session.sample_rate_hz;
  for (ChannelId id : kDerivedChannels) {
    const Eigen::VectorXd& parent = session.channel(*derived_parent(id));
    Eigen::VectorXd d = Eigen::VectorXd::Zero(parent.size());
    if (parent.size() > 1) {
      d.tail(parent.size() - 1) =
          (parent.tail(parent.size() - 1) - parent.head(parent.size() - 1)) * rate;
    }
    out.channels[id] = std::move(d);
  }
  return out;
}

namespace {

const std::vector<std::string>& trait_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c = {"driver_id", "tmt_a", "tmt_b", "maze", "ufov"};
    for (int i = 1; i <= kDsqItems; ++i) c.push_back("dsq_" + std::to_string(i));
    for (int i = 1; i <= kWsqItems; ++i) c.push_back("wsq_" + std::to_string(i));
    return c;
  }();
  return cols;
}

int parse_ordinal(const std::string& field, int lo, int hi,
                  const std::string& context) {
  double v = parse_double(field, context);
  int iv = static_cast<int>(v);
  if (static_cast<double>(iv) != v || iv < lo || iv > hi) {
    throw ValidationError("ordinal value " + field + " out of range " +
                          std::to_string(lo) + ".." + std::to_string(hi) + " " +
                          context);
  }
  return iv;
}

}  // namespace

TraitTable load_traits(const std::filesystem::path& traits_file) {
  std::ifstream in(traits_file);
  if (!in) throw IoError("cannot open traits file " + traits_file.string());

  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError("traits file " + traits_file.string() + " is empty");
  }
  const auto header = split_csv_line(line);
  const auto& expect = trait_columns();
  if (header.size() != expect.size()) {
    throw SchemaError("traits header of " + traits_file.string() + " has " +
                      std::to_string(header.size()) + " columns, expected " +
                      std::to_string(expect.size()));
  }
  for (std::size_t i = 0; i < expect.size(); ++i) {
    if (header[i] != expect[i]) {
      throw SchemaError("traits column " + std::to_string(i + 1) + " is '" +
                        header[i] + "', expected '" + expect[i] + "'");
    }
  }

  TraitTable table;
  int row_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row_index;
    const auto fields = split_csv_line(line);
    if (fields.size() != expect.size()) {
      throw ParseError("row " + std::to_string(row_index) + " of " +
                       traits_file.string() + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(expect.size()));
    }
    const std::string ctx = "at row " + std::to_string(row_index) + " of " +
                            traits_file.string();
    const std::string& driver = fields[0];
    if (table.rows.count(driver)) {
      throw ValidationError("duplicate driver_id '" + driver + "' " + ctx);
    }
    TraitRow row;
    row.tmt_a = parse_double(fields[1], ctx);
    row.tmt_b = parse_double(fields[2], ctx);
    row.maze = parse_double(fields[3], ctx);
    row.ufov = parse_double(fields[4], ctx);
    for (double v : {row.tmt_a, row.tmt_b, row.maze, row.ufov}) {
      if (!(v > 0)) {
        throw ValidationError("cognitive score must be strictly positive " + ctx);
      }
    }
    for (int i = 0; i < kDsqItems; ++i) {
      row.dsq[static_cast<std::size_t>(i)] =
          parse_ordinal(fields[static_cast<std::size_t>(5 + i)], 1, 4, ctx);
    }
    for (int i = 0; i < kWsqItems; ++i) {
      row.wsq[static_cast<std::size_t>(i)] =
          parse_ordinal(fields[static_cast<std::size_t>(5 + kDsqItems + i)], 1, 5, ctx);
    }
    table.driver_ids.push_back(driver);
    table.rows.emplace(driver, row);
  }

  if (table.driver_ids.empty()) {
    throw ValidationError("traits file " + traits_file.string() +
                          " contains no rows");
  }
  return table;
}

void write_traits(const TraitTable& table, const std::filesystem::path& traits_file) {
  std::ofstream out(traits_file);
  if (!out) throw IoError("cannot write traits file " + traits_file.string());
  const auto& cols = trait_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const auto& driver : table.driver_ids) {
    const TraitRow& r = table.rows.at(driver);
    out << driver << ',' << fmt_g17(r.tmt_a) << ',' << fmt_g17(r.tmt_b) << ','
        << fmt_g17(r.maze) << ',' << fmt_g17(r.ufov);
    for (int v : r.dsq) out << ',' << v;
    for (int v : r.wsq) out << ',' << v;
    out << "\n";
  }
}

}  // namespace drivetraits
