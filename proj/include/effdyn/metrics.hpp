#pragma once

// Design metrics at the foot: inertia ellipsoids as felt by an external force
// (backward) or by the actuators (forward), force capability polytopes with
// their efficiency-scaled variants, and the directional impact mitigation
// factor.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <vector>

#include "effdyn/dynamics.hpp"
#include "effdyn/polygon.hpp"

namespace effdyn {

/// Task Jacobians with a larger 2-norm condition number count as singular.
inline constexpr double kMaxJacobianCondition = 1e8;

struct InertiaEllipsoid {
  MatrixXd matrix;
  DriveMode mode = DriveMode::Ideal;

  MatrixXd symmetric_part() const { return 0.5 * (matrix + matrix.transpose()); }

  /// n^T Lambda n for unit n (only the symmetric part contributes).
  double directional(const VectorXd &n) const { return n.dot(matrix * n); }

  /// Effective mass along n: (n^T Lambda^-1 n)^-1.
  double apparent(const VectorXd &n) const {
    return 1.0 / n.dot(matrix.partialPivLu().solve(n));
  }
};

namespace detail {

inline void require_regular(const MatrixXd &j, const char *what) {
  if (condition_number(j) > kMaxJacobianCondition)
    throw SingularJacobian(std::string(what) + ": Jacobian is singular at this configuration");
}

// (J H^-1 J^T)^-1
inline MatrixXd task_inertia(const MatrixXd &h, const MatrixXd &j) {
  require_regular(j, "task inertia");
  const MatrixXd mobility = j * h.partialPivLu().solve(j.transpose());
  return mobility.partialPivLu().inverse();
}

inline MatrixXd pseudo_inverse(const MatrixXd &a) {
  return Eigen::CompleteOrthogonalDecomposition<MatrixXd>(a).pseudoInverse();
}

} // namespace detail

/// Conventional GIE. Expects an equation of motion built with all eta = 1.
inline InertiaEllipsoid gie(const DissipativeEoM &ideal) {
  if (!ideal.Ebar.isIdentity(0.0))
    throw InvalidArgument("gie: equation of motion must be lossless");
  return {detail::task_inertia(ideal.H, ideal.contact_jacobian), DriveMode::Ideal};
}

/// Backward GIE: same formula as the GIE but with H(eta) built from the
/// backward effective efficiencies.
inline InertiaEllipsoid bgie(const DissipativeEoM &backward) {
  return {detail::task_inertia(backward.H, backward.contact_jacobian),
          DriveMode::Backward};
}

/// Forward GIE: inertia the actuators feel when producing a virtual task
/// force f through tau_act = Gbar^T Dbar^T Jbar^T f. Composing that map with
/// the dissipative equation of motion gives
///   xdd = Jbar H^-1 (Dbar Gbar)^-T Ebar (Dbar Gbar)^T Jbar^T f,
/// whose inverse is returned. When Jbar Dbar Gbar is square this is the
/// product of the task inertia and the inverse efficiency distortion
/// ((Jbar Dbar Gbar)^-T Ebar (Jbar Dbar Gbar)^T); with a floating base the
/// pseudo-inverse version of that product is dominated by the base columns,
/// so the composed form is used throughout.
inline InertiaEllipsoid fgie(const DissipativeEoM &forward) {
  const MatrixXd &jbar = forward.contact_jacobian;
  detail::require_regular(jbar * forward.Dbar * forward.Gbar, "fgie");
  const MatrixXd dg = forward.Dbar * forward.Gbar;
  const MatrixXd virtual_map = forward.actuation_map * dg.transpose();
  const MatrixXd mobility = jbar * forward.H.partialPivLu().solve(virtual_map * jbar.transpose());
  return {mobility.partialPivLu().inverse(), DriveMode::Forward};
}

struct InertiaSet {
  InertiaEllipsoid gie, fgie, bgie;
};

/// GIE, FGIE and BGIE at one state. `efficiencies` supplies eta_f and eta_b;
/// its modes are ignored.
inline InertiaSet inertia_ellipsoids(const RobotModel &model,
                                     const RobotState &state,
                                     const EfficiencyAssignment &efficiencies) {
  const auto m = model.joints();
  return {gie(dissipative_eom(model, state, EfficiencyAssignment::ideal(m))),
          fgie(dissipative_eom(model, state, efficiencies.with_mode(DriveMode::Forward))),
          bgie(dissipative_eom(model, state, efficiencies.with_mode(DriveMode::Backward)))};
}

/// Foot Jacobian of the limb alone (joint columns only).
inline MatrixXd limb_jacobian(const RobotModel &model, const RobotState &state) {
  const MatrixXd full = PlanarKinematics(model, state.y()).foot_jacobian();
  return full.rightCols(model.joints());
}

struct ForcePolytope {
  DriveMode mode = DriveMode::Ideal;
  bool unbounded = false;
  MatrixXd map;           ///< ((J D G)^+)^T, rotor torques -> task force
  VectorXd torque_bounds; ///< per-joint half-widths after efficiency scaling
  std::vector<VectorXd> vertices; ///< CCW hull for 2-D tasks, [min, max] in 1-D

  Eigen::Index task_dim() const { return map.rows(); }

  /// Largest t with t * dir inside the polytope.
  double extent(const VectorXd &dir) const {
    if (unbounded)
      return std::numeric_limits<double>::infinity();
    if (task_dim() == 1) {
      if (dir(0) > 0)
        return vertices.back()(0) / dir(0);
      if (dir(0) < 0)
        return vertices.front()(0) / dir(0);
      return std::numeric_limits<double>::infinity();
    }
    std::vector<geometry::Point> hull;
    for (const auto &v : vertices)
      hull.emplace_back(v(0), v(1));
    return geometry::ray_extent(hull, geometry::Point(dir(0), dir(1)));
  }
};

enum class LockPolicy { Throw, Flag };

namespace detail {

inline ForcePolytope map_torque_box(const MatrixXd &map, const VectorXd &bounds,
                                    DriveMode mode) {
  ForcePolytope poly;
  poly.mode = mode;
  poly.map = map;
  poly.torque_bounds = bounds;
  const auto m = bounds.size();
  std::vector<VectorXd> images;
  images.reserve(std::size_t{1} << m);
  for (unsigned corner = 0; corner < (1u << m); ++corner) {
    VectorXd tau(m);
    for (Eigen::Index j = 0; j < m; ++j)
      tau(j) = (corner >> j & 1u) ? bounds(j) : -bounds(j);
    images.push_back(map * tau);
  }
  if (map.rows() == 1) {
    double lo = images.front()(0), hi = lo;
    for (const auto &v : images) {
      lo = std::min(lo, v(0));
      hi = std::max(hi, v(0));
    }
    poly.vertices = {VectorXd::Constant(1, lo), VectorXd::Constant(1, hi)};
  } else if (map.rows() == 2) {
    std::vector<geometry::Point> pts;
    for (const auto &v : images)
      pts.emplace_back(v(0), v(1));
    for (const auto &p : geometry::convex_hull(std::move(pts)))
      poly.vertices.push_back(p);
  } else {
    poly.vertices = std::move(images);
  }
  return poly;
}

} // namespace detail

/// Image of the rotor torque box under ((J D G)^+)^T.
inline ForcePolytope force_capability(const CoordinateChain &chain,
                                      const MatrixXd &limb_jac,
                                      const VectorXd &torque_limits) {
  if (limb_jac.cols() != chain.joints() || torque_limits.size() != chain.joints())
    throw DimensionMismatch("force capability: size mismatch");
  const MatrixXd jdg = limb_jac * chain.DG();
  detail::require_regular(jdg, "force capability");
  return detail::map_torque_box(detail::pseudo_inverse(jdg).transpose(),
                                torque_limits, DriveMode::Ideal);
}

/// Force capability with the torque box scaled per joint by eta_f (forward)
/// or 1/eta_b (backward). A locked backward joint makes the set unbounded.
inline ForcePolytope asymmetric_force_capability(
    const CoordinateChain &chain, const MatrixXd &limb_jac,
    const VectorXd &torque_limits, const EfficiencyAssignment &assign,
    LockPolicy policy = LockPolicy::Throw) {
  if (assign.joints() != chain.joints())
    throw DimensionMismatch("force capability: efficiency size mismatch");
  const auto mode = assign.uniform_mode() ? assign[0].mode : DriveMode::Ideal;
  if (assign.any_locked()) {
    if (policy == LockPolicy::Throw)
      throw LockedTransmission("backward force capability is unbounded: a transmission is locked");
    auto poly = force_capability(chain, limb_jac, torque_limits);
    poly.mode = mode;
    poly.unbounded = true;
    poly.vertices.clear();
    poly.torque_bounds.setConstant(std::numeric_limits<double>::infinity());
    return poly;
  }
  const VectorXd scaled = torque_limits.cwiseProduct(assign.effective());
  const MatrixXd jdg = limb_jac * chain.DG();
  detail::require_regular(jdg, "force capability");
  return detail::map_torque_box(detail::pseudo_inverse(jdg).transpose(), scaled, mode);
}

inline VectorXd torque_limits(const RobotModel &model) {
  VectorXd t(model.joints());
  for (Eigen::Index j = 0; j < model.joints(); ++j)
    t(j) = model.transmissions[j].torque_limit;
  return t;
}

/// Apparent inertia at the foot with every joint welded: the whole robot
/// moves as one body over the base coordinates.
inline double locked_apparent_inertia(const RobotModel &model,
                                      const RobotState &state,
                                      const VectorXd &dir) {
  const auto nb = model.base_dofs();
  if (nb == 0)
    return std::numeric_limits<double>::infinity();
  const MatrixXd mass = redundant_mass_matrix(model, state);
  const MatrixXd jb = PlanarKinematics(model, state.y()).foot_jacobian().leftCols(nb);
  const MatrixXd mobility = jb * mass.topLeftCorner(nb, nb).llt().solve(jb.transpose());
  return 1.0 / dir.dot(mobility * dir);
}

struct ImfReport {
  VectorXd direction;
  double xi = 0.0;
  double locked_inertia = 0.0;     ///< lambda_R(n)
  double backdriven_inertia = 0.0; ///< lambda(n) from the BGIE
};

/// Directional impact mitigation factor 1 - lambda(n) / lambda_R(n), with
/// lambda from the backward GIE and lambda_R from the welded robot.
inline ImfReport impact_mitigation_factor(const RobotModel &model,
                                          const RobotState &state,
                                          const EfficiencyAssignment &assign,
                                          const VectorXd &dir) {
  if (dir.size() != 2 || std::abs(dir.norm() - 1.0) > 1e-9)
    throw InvalidArgument("imf: direction must be a 2-D unit vector");
  const auto back = bgie(dissipative_eom(model, state, assign.with_mode(DriveMode::Backward)));
  ImfReport r;
  r.direction = dir;
  r.backdriven_inertia = back.apparent(dir);
  r.locked_inertia = locked_apparent_inertia(model, state, dir);
  // The backdriven rotors still couple gyroscopically to the base, so in the
  // locked limit lambda can overshoot lambda_R by a fraction of a percent.
  r.xi = std::isinf(r.locked_inertia)
             ? 1.0
             : std::clamp(1.0 - r.backdriven_inertia / r.locked_inertia, 0.0, 1.0);
  return r;
}

/// Copy of the model with every transmission set to the same eta_f.
inline RobotModel with_forward_efficiency(RobotModel model, double eta_f) {
  for (auto &t : model.transmissions)
    t.forward_efficiency = eta_f;
  return model;
}

struct SweepRow {
  double eta_f = 1.0;
  double eta_b = 1.0;      ///< of the first transmission
  double ffc_ratio = 1.0;  ///< forward capability extent / ideal extent
  double bfc_ratio = 1.0;  ///< backward capability extent / ideal extent
  double imf = 0.0;
  double gie = 0.0;        ///< n^T Lambda n for each ellipsoid
  double fgie = 0.0;
  double bgie = 0.0;
};

/// One sample of the uniform forward-efficiency sweep along `dir`.
inline SweepRow sweep_sample(const RobotModel &base_model, const RobotState &state,
                             double eta_f, const VectorXd &dir) {
  const RobotModel model = with_forward_efficiency(base_model, eta_f);
  const auto chain = model.chain();
  const auto eff = EfficiencyAssignment::uniform(model.transmissions, DriveMode::Ideal);
  const MatrixXd jl = limb_jacobian(model, state);
  const VectorXd limits = torque_limits(model);

  SweepRow row;
  row.eta_f = eta_f;
  row.eta_b = eff[0].backward;
  const double fc = force_capability(chain, jl, limits).extent(dir);
  row.ffc_ratio = asymmetric_force_capability(chain, jl, limits,
                                              eff.with_mode(DriveMode::Forward))
                      .extent(dir) / fc;
  row.bfc_ratio = asymmetric_force_capability(chain, jl, limits,
                                              eff.with_mode(DriveMode::Backward),
                                              LockPolicy::Flag)
                      .extent(dir) / fc;
  row.gie = gie(dissipative_eom(model, state, EfficiencyAssignment::ideal(model.joints())))
                .directional(dir);
  row.fgie = fgie(dissipative_eom(model, state, eff.with_mode(DriveMode::Forward)))
                 .directional(dir);
  if (eff.with_mode(DriveMode::Backward).any_locked()) {
    row.bgie = std::numeric_limits<double>::infinity();
    row.imf = 0.0;
  } else {
    row.bgie = bgie(dissipative_eom(model, state, eff.with_mode(DriveMode::Backward)))
                   .directional(dir);
    row.imf = impact_mitigation_factor(model, state, eff, dir).xi;
  }
  return row;
}

/// Samples are independent and evaluated concurrently; row order follows
/// `etas`.
inline std::vector<SweepRow> efficiency_sweep(const RobotModel &model,
                                              const RobotState &state,
                                              const std::vector<double> &etas,
                                              const VectorXd &dir) {
  std::vector<std::future<SweepRow>> jobs;
  jobs.reserve(etas.size());
  for (double eta : etas)
    jobs.push_back(std::async(std::launch::async, [&model, &state, &dir, eta] {
      return sweep_sample(model, state, eta, dir);
    }));
  std::vector<SweepRow> rows;
  rows.reserve(etas.size());
  for (auto &j : jobs)
    rows.push_back(j.get());
  return rows;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = n == 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

} // namespace effdyn
