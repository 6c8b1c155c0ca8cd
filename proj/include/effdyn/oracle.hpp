#pragma once

// Brute-force validation harness.
//
// Wedge: the two-body system is integrated with the constraint multiplier
// as an explicit unknown and Coulomb friction on the slope, with stick/slip
// switching. Nothing from wedge.hpp is used to produce the motion.
//
// Robot: the reduced dissipative equation of motion is integrated, or, as an
// independent route, the redundant system with explicit multipliers and
// efficiency-proportional meshing friction. Either way every step records
// the multipliers, meshing work and the efficiency-null residual.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

#include "effdyn/dynamics.hpp"
#include "effdyn/wedge.hpp"

namespace effdyn::oracle {

enum class Integrator { SemiImplicitEuler, RK4 };

struct OracleConfig {
  double step = 1e-5;           ///< h [s]
  double duration = 1.0;        ///< T [s]
  double stick_velocity = 1e-7; ///< slip speed treated as sticking [m/s]
  Integrator integrator = Integrator::SemiImplicitEuler;

  void validate() const {
    if (!(step > 0.0) || !(duration >= 0.0) || !(stick_velocity > 0.0))
      throw InvalidArgument("oracle: step and stick threshold must be positive");
  }
  std::size_t steps() const {
    return static_cast<std::size_t>(std::llround(duration / step));
  }
};

// ---------------------------------------------------------------------------
// Wedge
// ---------------------------------------------------------------------------

enum class SlipState { Stick, Forward, Backward };

struct WedgeSample {
  double t = 0.0;
  double x = 0.0, u = 0.0;
  double x_dot = 0.0, u_dot = 0.0;
  double x_ddot = 0.0, u_ddot = 0.0;
  double lambda = 0.0;   ///< meshing normal multiplier (>= 0)
  double friction = 0.0; ///< generalized friction force on u
  SlipState slip = SlipState::Stick;
  double mesh_work = 0.0;     ///< dW_r over the step along unscaled tangent motion
  double null_residual = 0.0; ///< |dZ| relative to its terms
};

struct WedgeTrajectory {
  wedge::WedgeParams params;
  wedge::WedgeForces forces;
  double step = 0.0;
  std::vector<WedgeSample> samples;

  /// Average block acceleration between the first and last sample.
  double mean_acceleration() const {
    const auto &a = samples.front();
    const auto &b = samples.back();
    return (b.x_dot - a.x_dot) / (b.t - a.t);
  }
  double displacement() const { return samples.back().x - samples.front().x; }
  double max_constraint_residual() const {
    const double c = std::cos(params.slope_angle);
    double r = 0.0;
    for (const auto &s : samples)
      r = std::max({r, std::abs(-s.x + c * s.u), std::abs(-s.x_dot + c * s.u_dot)});
    return r;
  }
};

namespace detail {

struct WedgeSolve {
  double x_ddot, u_ddot, lambda, friction;
};

// M x'' + lambda = f_x,  m u'' - (c lambda + f_d) = -f_u,  -x'' + c u'' = 0
// with f_d = -sigma mu s lambda (sigma = direction of u motion).
inline WedgeSolve solve_sliding(const wedge::WedgeParams &p,
                                const wedge::WedgeForces &f, double sigma) {
  const double c = std::cos(p.slope_angle), s = std::sin(p.slope_angle);
  const double k = c - sigma * p.friction_coeff * s;
  Eigen::Matrix3d a;
  a << p.block_mass, 0.0, 1.0,
       0.0, p.wedge_mass, -k,
       -1.0, c, 0.0;
  const Eigen::Vector3d rhs(f.f_x, -f.f_u, 0.0);
  const Eigen::Vector3d sol = a.partialPivLu().solve(rhs);
  return {sol(0), sol(1), sol(2), -sigma * p.friction_coeff * s * sol(2)};
}

inline double separation_tolerance(const wedge::WedgeForces &f) {
  return 1e-12 * (std::abs(f.f_x) + std::abs(f.f_u) + 1.0);
}

} // namespace detail

/// Meshing force [r_x, r_u] = [-lambda, c lambda + f_d].
inline Eigen::Vector2d meshing_force(const wedge::WedgeParams &p,
                                     const WedgeSample &s) {
  return {-s.lambda, std::cos(p.slope_angle) * s.lambda + s.friction};
}

/// Integrates the wedge from (x0, x_dot0) on the constraint.
inline WedgeTrajectory simulate_wedge(const wedge::WedgeParams &p,
                                      const wedge::WedgeForces &f,
                                      const OracleConfig &cfg, double x0,
                                      double x_dot0) {
  p.validate();
  cfg.validate();
  const double c = std::cos(p.slope_angle), s = std::sin(p.slope_angle);
  const double tol = detail::separation_tolerance(f);

  WedgeTrajectory traj;
  traj.params = p;
  traj.forces = f;
  traj.step = cfg.step;
  traj.samples.reserve(cfg.steps() + 1);

  WedgeSample cur;
  cur.x = x0;
  cur.u = x0 / c;
  cur.x_dot = x_dot0;
  cur.u_dot = x_dot0 / c;

  // Resolves contact state and accelerations at `cur`.
  auto resolve = [&](WedgeSample &st) {
    if (std::abs(st.u_dot) >= cfg.stick_velocity) {
      const double sigma = st.u_dot > 0 ? 1.0 : -1.0;
      const auto sol = detail::solve_sliding(p, f, sigma);
      if (sol.lambda < -tol) {
        std::ostringstream msg;
        msg << "wedge oracle: meshing contact separates (lambda = " << sol.lambda
            << ") at t = " << st.t;
        throw StiffnessFailure(msg.str());
      }
      st.slip = sigma > 0 ? SlipState::Backward : SlipState::Forward;
      st.x_ddot = sol.x_ddot;
      st.u_ddot = sol.u_ddot;
      st.lambda = sol.lambda;
      st.friction = sol.friction;
      return;
    }
    // Nearly at rest: stick if static friction can hold the load.
    const double lambda_static = f.f_x;
    const double needed = f.f_u - c * lambda_static;
    if (lambda_static >= -tol &&
        std::abs(needed) <= p.friction_coeff * s * lambda_static + tol) {
      st.slip = SlipState::Stick;
      st.x_ddot = st.u_ddot = 0.0;
      st.x_dot = st.u_dot = 0.0;
      st.lambda = lambda_static;
      st.friction = needed;
      return;
    }
    for (double sigma : {1.0, -1.0}) {
      const auto sol = detail::solve_sliding(p, f, sigma);
      if (sol.lambda >= -tol && sigma * sol.u_ddot > 0.0) {
        st.slip = sigma > 0 ? SlipState::Backward : SlipState::Forward;
        st.x_ddot = sol.x_ddot;
        st.u_ddot = sol.u_ddot;
        st.lambda = sol.lambda;
        st.friction = sol.friction;
        return;
      }
    }
    throw StiffnessFailure("wedge oracle: no consistent contact state");
  };

  const std::size_t n = cfg.steps();
  for (std::size_t k = 0; k <= n; ++k) {
    cur.t = static_cast<double>(k) * cfg.step;
    resolve(cur);
    if (k == n) {
      cur.mesh_work = 0.0;
      cur.null_residual = 0.0;
      traj.samples.push_back(cur);
      break;
    }

    WedgeSample next = cur;
    if (cfg.integrator == Integrator::SemiImplicitEuler || cur.slip == SlipState::Stick) {
      next.u_dot = cur.u_dot + cfg.step * cur.u_ddot;
      next.u = cur.u + cfg.step * next.u_dot;
    } else {
      // Accelerations are frozen within the step for a fixed slip direction,
      // so the stages share them; RK4 still integrates positions exactly.
      const double a = cur.u_ddot, h = cfg.step;
      const double k1v = a, k1x = cur.u_dot;
      const double k2x = cur.u_dot + 0.5 * h * k1v;
      const double k3x = cur.u_dot + 0.5 * h * a;
      const double k4x = cur.u_dot + h * a;
      next.u = cur.u + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
      next.u_dot = cur.u_dot + h * a;
    }
    // Project onto the constraint.
    next.x = c * next.u;
    next.x_dot = c * next.u_dot;

    // Tangent displacement over the step, K dx with dx the block displacement.
    const double dx = next.x - cur.x;
    const Eigen::Vector2d r = meshing_force(p, cur);
    const Eigen::Vector2d k_dx(dx, dx / c);
    cur.mesh_work = r.dot(k_dx);
    if (cur.slip != SlipState::Stick && dx != 0.0) {
      const double eta = cur.slip == SlipState::Forward
                             ? wedge::forward_efficiency(p)
                             : 1.0 / wedge::backward_efficiency(p);
      const double a_term = r(0) * k_dx(0);
      const double b_term = eta * r(1) * k_dx(1);
      const double scale = std::abs(a_term) + std::abs(b_term);
      cur.null_residual = scale > 0 ? std::abs(a_term + b_term) / scale : 0.0;
    } else {
      cur.null_residual = 0.0;
    }
    traj.samples.push_back(cur);

    next.mesh_work = next.null_residual = 0.0;
    cur = next;
  }
  return traj;
}

/// Ratio of output to input mesh power averaged over [t0, t1].
inline double measured_efficiency(const WedgeTrajectory &traj, double t0 = 0.0,
                                  double t1 = std::numeric_limits<double>::infinity()) {
  double in = 0.0, out = 0.0;
  std::optional<SlipState> dir;
  for (const auto &s : traj.samples) {
    if (s.t < t0 || s.t > t1)
      continue;
    if (s.slip == SlipState::Stick)
      throw NoSlip("measured efficiency: window contains sticking");
    if (dir && *dir != s.slip)
      throw NoSlip("measured efficiency: slip direction changes in the window");
    dir = s.slip;
    const Eigen::Vector2d r = meshing_force(traj.params, s);
    const double p_block = r(0) * s.x_dot;
    const double p_wedge = r(1) * s.u_dot;
    out += std::max(p_block, p_wedge);
    in -= std::min(p_block, p_wedge);
  }
  if (!(in > 0.0))
    throw NoSlip("measured efficiency: no power flows through the mesh");
  return out / in;
}

inline void write_csv(std::ostream &os, const WedgeTrajectory &traj) {
  os << "t,x,u,x_dot,u_dot,x_ddot,u_ddot,lambda,friction,slip,dW_r,dZ\n";
  os.precision(17);
  for (const auto &s : traj.samples) {
    os << s.t << ',' << s.x << ',' << s.u << ',' << s.x_dot << ',' << s.u_dot
       << ',' << s.x_ddot << ',' << s.u_ddot << ',' << s.lambda << ','
       << s.friction << ','
       << (s.slip == SlipState::Stick     ? "stick"
           : s.slip == SlipState::Forward ? "forward"
                                          : "backward")
       << ',' << s.mesh_work << ',' << s.null_residual << '\n';
  }
}

// ---------------------------------------------------------------------------
// Robot
// ---------------------------------------------------------------------------

enum class RobotRoute {
  Reduced,   ///< H(eta) y'' = rhs
  Redundant, ///< explicit multipliers on s, phi re-projected each step
};

struct RobotOracleConfig {
  double step = 1e-4;
  double duration = 1.0;
  Integrator integrator = Integrator::RK4;
  RobotRoute route = RobotRoute::Reduced;
  /// Joint power below this magnitude is not classified [W].
  double power_tolerance = 1e-12;
  /// Fraction of mode-violating steps beyond which a warning is raised.
  double violation_fraction = 0.01;
};

using TorqueProfile = std::function<VectorXd(double, const RobotState &)>;
using ForceProfile = std::function<Vector2d(double, const RobotState &)>;

struct RobotSample {
  double t = 0.0;
  VectorXd y, y_dot;
  VectorXd lambda;          ///< rotor/joint constraint multipliers
  double kinetic = 0.0;
  double potential = 0.0;
  double input_work = 0.0;  ///< cumulative actuator + foot-force work
  double dissipated = 0.0;  ///< input work - energy gain
  double mesh_work = 0.0;   ///< dW_r over the step
  double null_residual = 0.0;
  std::vector<DriveMode> realized; ///< per transmission, from power sign
  double route_gap = 0.0;   ///< |y''(reduced) - y''(redundant)|_inf
};

struct RobotTrajectory {
  std::vector<RobotSample> samples;
  std::size_t mode_violations = 0;
  bool mode_warning = false;
  std::string warning;

  double max_mesh_work() const {
    double w = -std::numeric_limits<double>::infinity();
    for (const auto &s : samples)
      w = std::max(w, s.mesh_work);
    return w;
  }
  double max_null_residual() const {
    double r = 0.0;
    for (const auto &s : samples)
      r = std::max(r, s.null_residual);
    return r;
  }
};

/// Redundant accelerations and multipliers from
///   M s'' - A^T lambda - f_d(lambda) = f - c,   A s'' = 0,
/// with rotor friction f_d = (I - eta^-1) (DG)^T lambda, the meshing law under
/// which each transmission's efficiency null vanishes.
struct RedundantSolution {
  VectorXd s_ddot;
  VectorXd lambda;
  VectorXd mesh_force; ///< r = A^T lambda + f_d
};

inline RedundantSolution solve_redundant(const RobotModel &model,
                                         const RobotState &state,
                                         const EfficiencyAssignment &assign,
                                         const Vector2d &foot_force,
                                         const VectorXd &rotor_torque) {
  const auto nb = model.base_dofs();
  const auto m = model.joints();
  const auto n = nb + m;
  const auto ns = n + m;
  const auto chain = model.chain();
  const MatrixXd a = constraint_jacobian(chain, nb);
  const VectorXd eta = assign.effective();

  MatrixXd friction_map = MatrixXd::Zero(ns, m);
  friction_map.bottomRows(m) =
      (VectorXd::Ones(m) - eta.cwiseInverse()).asDiagonal() * chain.DG().transpose();
  const MatrixXd r_map = a.transpose() + friction_map;

  VectorXd f = VectorXd::Zero(ns);
  f.head(n) = PlanarKinematics(model, state.y()).foot_jacobian().transpose() * foot_force;
  f.tail(m) = rotor_torque;

  MatrixXd kkt = MatrixXd::Zero(ns + m, ns + m);
  kkt.topLeftCorner(ns, ns) = redundant_mass_matrix(model, state);
  kkt.topRightCorner(ns, m) = -r_map;
  kkt.bottomLeftCorner(m, ns) = a;
  VectorXd rhs = VectorXd::Zero(ns + m);
  rhs.head(ns) = f - bias_forces(model, state);
  const VectorXd sol = kkt.partialPivLu().solve(rhs);

  RedundantSolution out;
  out.s_ddot = sol.head(ns);
  out.lambda = sol.tail(m);
  out.mesh_force = r_map * out.lambda;
  return out;
}

namespace detail {

inline VectorXd reduced_acceleration(const RobotModel &model, const RobotState &st,
                                     const EfficiencyAssignment &assign,
                                     const Vector2d &force, const VectorXd &tau,
                                     RobotRoute route) {
  if (route == RobotRoute::Reduced)
    return dissipative_eom(model, st, assign).acceleration(force, tau);
  return solve_redundant(model, st, assign, force, tau).s_ddot.head(model.reduced_dofs());
}

} // namespace detail

/// Integrates the robot from `initial` under rotor torques and a foot force.
/// Mode violations (realized power flow contradicting `assign` on more than
/// `violation_fraction` of the steps) set a warning but do not abort.
inline RobotTrajectory simulate_reduced_robot(const RobotModel &model,
                                              const RobotState &initial,
                                              const EfficiencyAssignment &assign,
                                              const TorqueProfile &torque,
                                              const ForceProfile &foot_force,
                                              const RobotOracleConfig &cfg) {
  model.validate();
  initial.check_consistent(model);
  if (!(cfg.step > 0.0) || !(cfg.duration >= 0.0))
    throw InvalidArgument("robot oracle: step must be positive");
  const VectorXd eta = assign.effective(); // throws LockedTransmission
  (void)eta;
  const auto nb = model.base_dofs();
  const auto m = model.joints();
  const auto chain = model.chain();
  const MatrixXd e_mat = efficiency_matrix(assign, nb);

  auto tau_at = [&](double t, const RobotState &s) -> VectorXd {
    return torque ? torque(t, s) : VectorXd::Zero(m);
  };
  auto force_at = [&](double t, const RobotState &s) -> Vector2d {
    return foot_force ? foot_force(t, s) : Vector2d::Zero();
  };

  RobotTrajectory traj;
  const auto steps = static_cast<std::size_t>(std::llround(cfg.duration / cfg.step));
  traj.samples.reserve(steps + 1);

  VectorXd y = initial.y(), yd = initial.y_dot();
  double input_work = 0.0;
  const double energy0 = kinetic_energy(model, initial) + potential_energy(model, initial);
  std::size_t classified = 0;

  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * cfg.step;
    const RobotState st = RobotState::from_reduced(model, y, yd);
    const VectorXd tau = tau_at(t, st);
    const Vector2d fext = force_at(t, st);
    const auto red = solve_redundant(model, st, assign, fext, tau);

    RobotSample smp;
    smp.t = t;
    smp.y = y;
    smp.y_dot = yd;
    smp.lambda = red.lambda;
    smp.kinetic = kinetic_energy(model, st);
    smp.potential = potential_energy(model, st);
    smp.input_work = input_work;
    smp.dissipated = input_work - (smp.kinetic + smp.potential - energy0);

    const VectorXd y_dd = detail::reduced_acceleration(model, st, assign, fext, tau, cfg.route);
    const VectorXd other = cfg.route == RobotRoute::Reduced
                               ? VectorXd(red.s_ddot.head(nb + m))
                               : dissipative_eom(model, st, assign).acceleration(fext, tau);
    smp.route_gap = (y_dd - other).lpNorm<Eigen::Infinity>();

    // Realized power flow per transmission: tau_psi = D^T lambda against
    // psi_dot = G phi_dot.
    const VectorXd tau_psi = chain.D().transpose() * red.lambda;
    const VectorXd psi_dot = chain.motor_motion(st.phi_dot);
    smp.realized.resize(m);
    bool violated = false;
    for (Eigen::Index j = 0; j < m; ++j) {
      smp.realized[j] = classify_mode(tau_psi(j), psi_dot(j), cfg.power_tolerance);
      if (smp.realized[j] != DriveMode::Ideal && assign[j].mode != DriveMode::Ideal) {
        ++classified;
        violated |= smp.realized[j] != assign[j].mode;
      }
    }
    traj.mode_violations += violated ? 1 : 0;

    if (k == steps) {
      traj.samples.push_back(std::move(smp));
      break;
    }

    // Integrate y; phi follows from the constraint.
    VectorXd y_next, yd_next;
    if (cfg.integrator == Integrator::SemiImplicitEuler) {
      yd_next = yd + cfg.step * y_dd;
      y_next = y + cfg.step * yd_next;
    } else {
      const double h = cfg.step;
      auto accel = [&](double tt, const VectorXd &yy, const VectorXd &vv) {
        const RobotState s = RobotState::from_reduced(model, yy, vv);
        return detail::reduced_acceleration(model, s, assign, force_at(tt, s),
                                            tau_at(tt, s), cfg.route);
      };
      const VectorXd &a1 = y_dd;
      const VectorXd v1 = yd;
      const VectorXd v2 = yd + 0.5 * h * a1;
      const VectorXd a2 = accel(t + 0.5 * h, y + 0.5 * h * v1, v2);
      const VectorXd v3 = yd + 0.5 * h * a2;
      const VectorXd a3 = accel(t + 0.5 * h, y + 0.5 * h * v2, v3);
      const VectorXd v4 = yd + h * a3;
      const VectorXd a4 = accel(t + h, y + h * v3, v4);
      y_next = y + h / 6.0 * (v1 + 2 * v2 + 2 * v3 + v4);
      yd_next = yd + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
    }

    // Work over the step (trapezoid on the power), meshing work and the
    // efficiency-null residual along the realized tangent motion.
    const RobotState st_next = RobotState::from_reduced(model, y_next, yd_next);
    // Tangent motion K dy; differencing absolute rotor angles would bury it in
    // rounding.
    const VectorXd ds = constraint_nullspace(chain, nb) * (y_next - y);
    const MatrixXd jf = PlanarKinematics(model, st.y()).foot_jacobian();
    const MatrixXd jf_next = PlanarKinematics(model, st_next.y()).foot_jacobian();
    const double p0 = tau.dot(st.phi_dot) + fext.dot(jf * yd);
    const double p1 = tau_at(t + cfg.step, st_next).dot(st_next.phi_dot) +
                      force_at(t + cfg.step, st_next).dot(jf_next * yd_next);
    input_work += 0.5 * cfg.step * (p0 + p1);

    const VectorXd &r = red.mesh_force;
    smp.mesh_work = ds.dot(r);
    const VectorXd weighted = e_mat * r;
    double scale = 0.0;
    for (Eigen::Index i = 0; i < ds.size(); ++i)
      scale += std::abs(ds(i) * weighted(i));
    smp.null_residual = scale > 0.0 ? std::abs(ds.dot(weighted)) / scale : 0.0;

    traj.samples.push_back(std::move(smp));
    y = y_next;
    yd = yd_next;
  }

  if (classified > 0 &&
      static_cast<double>(traj.mode_violations) >
          cfg.violation_fraction * static_cast<double>(traj.samples.size())) {
    traj.mode_warning = true;
    std::ostringstream msg;
    msg << "ModeViolation: realized power flow contradicts the assigned mode on "
        << traj.mode_violations << " of " << traj.samples.size() << " steps";
    traj.warning = msg.str();
  }
  return traj;
}

inline void write_csv(std::ostream &os, const RobotTrajectory &traj) {
  if (traj.samples.empty())
    return;
  const auto n = traj.samples.front().y.size();
  const auto m = traj.samples.front().lambda.size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i)
    os << ",y" << i;
  for (Eigen::Index i = 0; i < n; ++i)
    os << ",y_dot" << i;
  for (Eigen::Index j = 0; j < m; ++j)
    os << ",lambda" << j;
  os << ",kinetic,potential,input_work,dissipated,dW_r,dZ\n";
  os.precision(17);
  for (const auto &s : traj.samples) {
    os << s.t;
    for (Eigen::Index i = 0; i < n; ++i)
      os << ',' << s.y(i);
    for (Eigen::Index i = 0; i < n; ++i)
      os << ',' << s.y_dot(i);
    for (Eigen::Index j = 0; j < m; ++j)
      os << ',' << s.lambda(j);
    os << ',' << s.kinetic << ',' << s.potential << ',' << s.input_work << ','
       << s.dissipated << ',' << s.mesh_work << ',' << s.null_residual << '\n';
  }
}

} // namespace effdyn::oracle
