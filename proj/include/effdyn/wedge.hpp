#pragma once

// Wedge-block transmission analogue: a block M on x driven through a sliding
// wedge m on u, coupled by the holonomic constraint -x + u cos(alpha) = 0 and
// Coulomb friction mu on the slope. Everything here is closed form.

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <sstream>

#include "effdyn/drive_mode.hpp"
#include "effdyn/errors.hpp"

namespace effdyn::wedge {

inline constexpr double kMinSlopeAngle = 1e-6;

// mu * tan(alpha) within this distance of 1 counts as the locking limit.
inline constexpr double kLockingTolerance = 1e-12;

struct WedgeParams {
  double block_mass = 1.0; ///< M [kg]
  double wedge_mass = 1.0; ///< m [kg]
  double slope_angle = std::numbers::pi / 4; ///< alpha [rad]
  double friction_coeff = 0.0; ///< mu [-]

  void validate() const {
    if (!(block_mass > 0.0) || !(wedge_mass > 0.0))
      throw InvalidArgument("wedge: masses must be positive");
    if (!(friction_coeff >= 0.0) || !std::isfinite(friction_coeff))
      throw InvalidArgument("wedge: friction coefficient must be >= 0");
    if (!(slope_angle >= kMinSlopeAngle) ||
        !(slope_angle < std::numbers::pi / 2))
      throw InvalidArgument("wedge: slope angle must lie in [1e-6, pi/2)");
  }

  /// mu * tan(alpha); the transmission self-locks once this reaches 1.
  double friction_load() const { return friction_coeff * std::tan(slope_angle); }

  /// Speed ratio u_dot / x_dot of the wedge, 1/cos(alpha).
  double reduction_ratio() const { return 1.0 / std::cos(slope_angle); }
};

struct WedgeForces {
  double f_x = 0.0; ///< on the block along +x [N]
  double f_u = 0.0; ///< on the wedge, applied as -f_u along u [N]

  /// f_u expressed in the block frame, f_u / cos(alpha).
  double projected_f_u(const WedgeParams &p) const {
    return f_u / std::cos(p.slope_angle);
  }
};

inline double forward_efficiency(const WedgeParams &p) {
  p.validate();
  return 1.0 / (1.0 + p.friction_load());
}

/// Throws NonBackdrivable when mu tan(alpha) > 1. Exactly at the limit the
/// efficiency is reported as 0.
inline double backward_efficiency(const WedgeParams &p) {
  p.validate();
  const double load = p.friction_load();
  if (std::abs(load - 1.0) <= kLockingTolerance)
    return 0.0;
  if (load > 1.0) {
    std::ostringstream msg;
    msg << "wedge is non-backdrivable: mu*tan(alpha) = " << load << " > 1";
    throw NonBackdrivable(msg.str());
  }
  return 1.0 - load;
}

/// Multiplier applied to the wedge-side terms of the reduced dynamics:
/// eta_f when forward driven, 1/eta_b when backward driven, 1 if ideal.
inline double effective_efficiency(const WedgeParams &p, DriveMode mode) {
  switch (mode) {
  case DriveMode::Forward:
    return forward_efficiency(p);
  case DriveMode::Backward: {
    const double eta_b = backward_efficiency(p);
    if (eta_b == 0.0)
      throw DivergentInertia("wedge: backward efficiency is zero");
    return 1.0 / eta_b;
  }
  case DriveMode::Ideal:
    p.validate();
    return 1.0;
  }
  return 1.0;
}

/// Block acceleration under sustained sliding in the given mode:
///   (f_x - eta f_u_hat) / (M + eta m / cos^2 alpha)
inline double reduced_acceleration(const WedgeParams &p, const WedgeForces &f,
                                   DriveMode mode) {
  const double eta = effective_efficiency(p, mode);
  const double c = std::cos(p.slope_angle);
  return (f.f_x - eta * f.projected_f_u(p)) /
         (p.block_mass + eta * p.wedge_mass / (c * c));
}

/// Coefficient of s in the mechanical impedance X(s).
///  Forward:  f_u_hat / x_dot  ->  M / eta_f + m / cos^2 alpha
///  Backward: f_x / x_dot      ->  M + m / (eta_b cos^2 alpha)
inline double impedance_coefficient(const WedgeParams &p, DriveMode mode) {
  const double c = std::cos(p.slope_angle);
  const double reflected = p.wedge_mass / (c * c);
  switch (mode) {
  case DriveMode::Forward:
    return p.block_mass / forward_efficiency(p) + reflected;
  case DriveMode::Backward:
    return p.block_mass + reflected * effective_efficiency(p, mode);
  case DriveMode::Ideal:
    p.validate();
    return p.block_mass + reflected;
  }
  return 0.0;
}

/// Meshing force per unit multiplier, [-1, cos(alpha) +/- mu sin(alpha)]:
/// '+' when forward driven, '-' when backward driven.
inline Eigen::Vector2d meshing_force_direction(const WedgeParams &p,
                                               DriveMode mode) {
  p.validate();
  const double c = std::cos(p.slope_angle);
  const double s = std::sin(p.slope_angle);
  switch (mode) {
  case DriveMode::Forward:
    return {-1.0, c + p.friction_coeff * s};
  case DriveMode::Backward:
    return {-1.0, c - p.friction_coeff * s};
  case DriveMode::Ideal:
    return {-1.0, c};
  }
  return {-1.0, c};
}

/// Constraint nullspace [1, sec(alpha)]^T: tangent motion per unit dx.
inline Eigen::Vector2d tangent_basis(const WedgeParams &p) {
  return {1.0, 1.0 / std::cos(p.slope_angle)};
}

/// Efficiency matrix diag(1, eta_mode) that stretches the tangent space.
inline Eigen::Matrix2d efficiency_matrix(const WedgeParams &p, DriveMode mode) {
  Eigen::Matrix2d e = Eigen::Matrix2d::Identity();
  e(1, 1) = effective_efficiency(p, mode);
  return e;
}

} // namespace effdyn::wedge
