#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace drivetraits {

// The 13 telemetry channels: 9 measured in-vehicle sensors plus the 4
// first-difference channels derived from them.
enum class ChannelId {
  steering_angle,        // deg
  eps_torque,            // Nm
  forward_accel,         // m/s^2
  lateral_accel,         // m/s^2
  yaw_rate,              // deg/s
  speed,                 // km/h
  accelerator_position,  // %
  brake_pressure,        // MPa
  fuel_consumption,      // ml
  steering_velocity,     // deg/s   (d/dt steering_angle)
  forward_jerk,          // m/s^3   (d/dt forward_accel)
  lateral_jerk,          // m/s^3   (d/dt lateral_accel)
  accelerator_rate,      // %/s     (d/dt accelerator_position)
};

inline constexpr std::size_t kChannelCount = 13;
inline constexpr std::size_t kMeasuredChannelCount = 9;
inline constexpr std::size_t kDerivedChannelCount = 4;

inline constexpr std::array<ChannelId, kChannelCount> kAllChannels = {
    ChannelId::steering_angle,   ChannelId::eps_torque,
    ChannelId::forward_accel,    ChannelId::lateral_accel,
    ChannelId::yaw_rate,         ChannelId::speed,
    ChannelId::accelerator_position, ChannelId::brake_pressure,
    ChannelId::fuel_consumption, ChannelId::steering_velocity,
    ChannelId::forward_jerk,     ChannelId::lateral_jerk,
    ChannelId::accelerator_rate,
};

inline constexpr std::array<ChannelId, kMeasuredChannelCount> kMeasuredChannels = {
    ChannelId::steering_angle,   ChannelId::eps_torque,
    ChannelId::forward_accel,    ChannelId::lateral_accel,
    ChannelId::yaw_rate,         ChannelId::speed,
    ChannelId::accelerator_position, ChannelId::brake_pressure,
    ChannelId::fuel_consumption,
};

inline constexpr std::array<ChannelId, kDerivedChannelCount> kDerivedChannels = {
    ChannelId::steering_velocity, ChannelId::forward_jerk,
    ChannelId::lateral_jerk, ChannelId::accelerator_rate,
};

constexpr bool is_derived(ChannelId id) {
  switch (id) {
    case ChannelId::steering_velocity:
    case ChannelId::forward_jerk:
    case ChannelId::lateral_jerk:
    case ChannelId::accelerator_rate:
      return true;
    default:
      return false;
  }
}

// Measured parent of a derived channel; nullopt for measured channels.
constexpr std::optional<ChannelId> derived_parent(ChannelId id) {
  switch (id) {
    case ChannelId::steering_velocity:
      return ChannelId::steering_angle;
    case ChannelId::forward_jerk:
      return ChannelId::forward_accel;
    case ChannelId::lateral_jerk:
      return ChannelId::lateral_accel;
    case ChannelId::accelerator_rate:
      return ChannelId::accelerator_position;
    default:
      return std::nullopt;
  }
}

std::string_view channel_name(ChannelId id);
std::string_view channel_unit(ChannelId id);
std::optional<ChannelId> channel_from_name(std::string_view name);

}  // namespace drivetraits
