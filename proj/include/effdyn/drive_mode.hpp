#pragma once

#include <optional>
#include <string_view>

namespace effdyn {

/// Direction of power flow through a transmission.
///  Forward:  motor drives the output (positive actuator work).
///  Backward: the load drives the motor through the gears.
///  Ideal:    lossless, used as the frictionless reference.
enum class DriveMode { Forward, Backward, Ideal };

inline std::string_view to_string(DriveMode mode) {
  switch (mode) {
  case DriveMode::Forward:
    return "forward";
  case DriveMode::Backward:
    return "backward";
  case DriveMode::Ideal:
    return "ideal";
  }
  return "?";
}

inline std::optional<DriveMode> parse_drive_mode(std::string_view text) {
  if (text == "forward" || text == "fwd")
    return DriveMode::Forward;
  if (text == "backward" || text == "bwd")
    return DriveMode::Backward;
  if (text == "ideal")
    return DriveMode::Ideal;
  return std::nullopt;
}

} // namespace effdyn
