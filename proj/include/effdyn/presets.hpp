#pragma once

#include <numbers>

#include "effdyn/dynamics.hpp"

namespace effdyn::presets {

/// Planar two-link leg on a free-floating square torso with serial hip and
/// knee actuators (hip rotor on the torso, knee rotor on the thigh).
inline RobotModel leg2dof() {
  RobotModel model;
  model.base = BaseBody::uniform_square(5.0, 0.4);
  model.links = {Link::uniform_rod(0.4, 0.3), Link::uniform_rod(0.4, 0.3)};
  TransmissionSpec hip{20.0, 0.8, 6.4e-5, 17.0};
  TransmissionSpec knee{20.0, 0.7, 6.4e-5, 17.0};
  model.transmissions = {hip, knee};
  model.topology = ActuationTopology::serial(2);
  model.gravity = Vector2d(0.0, -9.81);
  return model;
}

/// Torso at the origin, level, hip and knee at the given angles [deg].
inline VectorXd leg2dof_configuration(double hip_deg = 60.0, double knee_deg = 60.0) {
  constexpr double deg = std::numbers::pi / 180.0;
  VectorXd y(5);
  y << 0.0, 0.0, 0.0, hip_deg * deg, knee_deg * deg;
  return y;
}

} // namespace effdyn::presets
