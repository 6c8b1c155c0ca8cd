#pragma once

// Planar floating-base serial chain with geared rotors, in redundant
// coordinates s = (q_b, q, phi) and reduced coordinates y = (q_b, q).
//
// Conventions (sagittal x-z plane, z up):
//  * every angle is a rotation about +y, so a positive angle turns +x
//    towards -z;
//  * q_b = (x, z, pitch) for a floating base, empty for a fixed base;
//  * link i points along d(beta_i) = (cos beta_i, -sin beta_i) with absolute
//    angle beta_i = pitch + q_1 + ... + q_i;
//  * rotor j spins relative to the body carrying it with angle phi_j, so its
//    absolute rate is omega_carrier + phi_dot_j.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <vector>

#include "effdyn/errors.hpp"
#include "effdyn/topology.hpp"

namespace effdyn {

using Eigen::Matrix2d;
using Eigen::RowVectorXd;
using Eigen::Vector2d;

inline constexpr double kConsistencyTolerance = 1e-9;

struct BaseBody {
  double mass = 1.0;
  double inertia = 1.0;  ///< about the pitch axis [kg m^2]
  double side = 0.0;     ///< edge of the square body, only used for drawing
  Vector2d hip = Vector2d::Zero(); ///< hip joint in the base frame [m]
  bool floating = true;

  static BaseBody uniform_square(double mass, double side) {
    BaseBody b;
    b.mass = mass;
    b.side = side;
    b.inertia = mass * side * side / 6.0;
    return b;
  }
};

struct Link {
  double mass = 1.0;
  double length = 1.0;
  double com = 0.5;     ///< distance of the COM from the proximal joint [m]
  double inertia = 0.0; ///< about the COM [kg m^2]
  /// Body carrying the rotor that drives this joint: 0 is the base, k is
  /// link k (1-based). Unset means the parent body for serial topologies
  /// and the base otherwise.
  std::optional<int> mount;

  static Link uniform_rod(double mass, double length) {
    Link l;
    l.mass = mass;
    l.length = length;
    l.com = 0.5 * length;
    l.inertia = mass * length * length / 12.0;
    return l;
  }
};

struct RobotModel {
  BaseBody base;
  std::vector<Link> links;
  std::vector<TransmissionSpec> transmissions;
  ActuationTopology topology;
  Vector2d gravity{0.0, -9.81};

  Eigen::Index joints() const { return static_cast<Eigen::Index>(links.size()); }
  Eigen::Index base_dofs() const { return base.floating ? 3 : 0; }
  Eigen::Index reduced_dofs() const { return base_dofs() + joints(); }
  Eigen::Index redundant_dofs() const { return base_dofs() + 2 * joints(); }

  CoordinateChain chain() const { return CoordinateChain(transmissions, topology); }

  /// Body index (0 = base) carrying rotor j.
  int rotor_mount(Eigen::Index j) const {
    if (links[j].mount)
      return *links[j].mount;
    return topology.matrix().isIdentity() ? static_cast<int>(j) : 0;
  }

  void validate() const {
    const auto m = joints();
    if (m < 1)
      throw InvalidArgument("robot: at least one link is required");
    if (!(base.mass > 0.0) || !(base.inertia >= 0.0))
      throw InvalidArgument("robot: base mass must be positive");
    if (static_cast<Eigen::Index>(transmissions.size()) != m)
      throw DimensionMismatch("robot: one transmission per link is required");
    if (topology.joints() != m)
      throw DimensionMismatch("robot: topology size differs from link count");
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto &l = links[i];
      if (!(l.mass > 0.0) || !(l.length > 0.0) || !(l.inertia >= 0.0))
        throw InvalidArgument("robot: link mass and length must be positive");
      if (!(l.com >= 0.0) || !(l.com <= l.length))
        throw InvalidArgument("robot: link com must lie on the link");
      if (l.mount && (*l.mount < 0 || *l.mount > m))
        throw InvalidArgument("robot: rotor mount must name the base or a link");
      transmissions[i].validate();
    }
    if (!gravity.allFinite())
      throw InvalidArgument("robot: gravity must be finite");
    (void)chain();
  }
};

/// Constraint-consistent redundant state.
struct RobotState {
  VectorXd q_base, q, phi;
  VectorXd v_base, v, phi_dot;

  /// Builds the rotor coordinates from the joints: phi = (DG)^-1 q.
  static RobotState from_reduced(const RobotModel &model, const VectorXd &y,
                                 const VectorXd &ydot) {
    const auto nb = model.base_dofs();
    const auto m = model.joints();
    if (y.size() != nb + m || ydot.size() != nb + m)
      throw DimensionMismatch("state: reduced vector has the wrong size");
    const auto chain = model.chain();
    RobotState s;
    s.q_base = y.head(nb);
    s.q = y.tail(m);
    s.v_base = ydot.head(nb);
    s.v = ydot.tail(m);
    s.phi = chain.rotor_from_joint(s.q);
    s.phi_dot = chain.rotor_from_joint(s.v);
    return s;
  }

  static RobotState at_rest(const RobotModel &model, const VectorXd &y) {
    return from_reduced(model, y, VectorXd::Zero(y.size()));
  }

  VectorXd y() const {
    VectorXd out(q_base.size() + q.size());
    out << q_base, q;
    return out;
  }
  VectorXd y_dot() const {
    VectorXd out(v_base.size() + v.size());
    out << v_base, v;
    return out;
  }
  VectorXd s() const {
    VectorXd out(q_base.size() + q.size() + phi.size());
    out << q_base, q, phi;
    return out;
  }
  VectorXd s_dot() const {
    VectorXd out(v_base.size() + v.size() + phi_dot.size());
    out << v_base, v, phi_dot;
    return out;
  }

  void check_consistent(const RobotModel &model,
                        double tol = kConsistencyTolerance) const {
    const auto chain = model.chain();
    if (q_base.size() != model.base_dofs() || v_base.size() != model.base_dofs() ||
        q.size() != model.joints() || v.size() != model.joints() ||
        phi.size() != model.joints() || phi_dot.size() != model.joints())
      throw DimensionMismatch("state: size mismatch with the model");
    if (constraint_residual(q, phi, chain).lpNorm<Eigen::Infinity>() > tol ||
        constraint_residual(v, phi_dot, chain).lpNorm<Eigen::Infinity>() > tol)
      throw InvalidArgument("state violates the rotor/joint constraint");
  }
};

namespace detail {

// R(beta) v for a rotation about +y acting on (x, z).
inline Vector2d rotate(double beta, const Vector2d &v) {
  const double c = std::cos(beta), s = std::sin(beta);
  return {c * v.x() + s * v.y(), -s * v.x() + c * v.y()};
}
inline Vector2d rotate_rate(double beta, const Vector2d &v) {
  const double c = std::cos(beta), s = std::sin(beta);
  return {-s * v.x() + c * v.y(), -c * v.x() - s * v.y()};
}

} // namespace detail

/// Positions and their first/second derivatives w.r.t. y for one
/// configuration. Each point is a sum of rotated terms R(beta_k) v, where
/// beta_k depends on the pitch and on q_1..q_k.
class PlanarKinematics {
public:
  PlanarKinematics(const RobotModel &model, const VectorXd &y)
      : model_(model), nb_(model.base_dofs()), m_(model.joints()) {
    if (y.size() != nb_ + m_)
      throw DimensionMismatch("kinematics: configuration has the wrong size");
    origin_ = nb_ ? Vector2d(y(0), y(1)) : Vector2d::Zero();
    pitch_ = nb_ ? y(2) : 0.0;
    beta_.resize(m_ + 1);
    beta_[0] = pitch_;
    for (Eigen::Index k = 1; k <= m_; ++k)
      beta_[k] = beta_[k - 1] + y(nb_ + k - 1);
  }

  Eigen::Index dofs() const { return nb_ + m_; }

  /// Absolute angle of body b (0 = base).
  double angle(int b) const { return beta_[b]; }

  /// Point at distance `along` on link b (1-based); b = 0 is the base origin.
  Vector2d point(int b, double along) const {
    Vector2d p = origin_;
    for (const auto &t : terms(b, along))
      p += detail::rotate(beta_[t.depth], t.local);
    return p;
  }

  MatrixXd point_jacobian(int b, double along) const {
    MatrixXd j = MatrixXd::Zero(2, dofs());
    if (nb_) {
      j(0, 0) = 1.0;
      j(1, 1) = 1.0;
    }
    for (const auto &t : terms(b, along)) {
      const Vector2d rate = detail::rotate_rate(beta_[t.depth], t.local);
      for (Eigen::Index a = 0; a < dofs(); ++a)
        if (depends(t.depth, a))
          j.col(a) += rate;
    }
    return j;
  }

  /// d(J)/d(y_a) for every a.
  std::vector<MatrixXd> point_jacobian_partials(int b, double along) const {
    std::vector<MatrixXd> out(dofs(), MatrixXd::Zero(2, dofs()));
    for (const auto &t : terms(b, along)) {
      const Vector2d curvature = -detail::rotate(beta_[t.depth], t.local);
      for (Eigen::Index a = 0; a < dofs(); ++a) {
        if (!depends(t.depth, a))
          continue;
        for (Eigen::Index c = 0; c < dofs(); ++c)
          if (depends(t.depth, c))
            out[a].col(c) += curvature;
      }
    }
    return out;
  }

  /// Angular-velocity Jacobian row of body b.
  RowVectorXd angular_jacobian(int b) const {
    RowVectorXd row = RowVectorXd::Zero(dofs());
    for (Eigen::Index a = 0; a < dofs(); ++a)
      if (depends(b, a))
        row(a) = 1.0;
    return row;
  }

  Vector2d foot() const { return point(static_cast<int>(m_), model_.links.back().length); }
  MatrixXd foot_jacobian() const {
    return point_jacobian(static_cast<int>(m_), model_.links.back().length);
  }

private:
  struct Term {
    int depth;
    Vector2d local;
  };

  std::vector<Term> terms(int b, double along) const {
    std::vector<Term> out;
    if (model_.base.hip.squaredNorm() > 0.0 && b > 0)
      out.push_back({0, model_.base.hip});
    for (int k = 1; k < b; ++k)
      out.push_back({k, Vector2d(model_.links[k - 1].length, 0.0)});
    if (b > 0)
      out.push_back({b, Vector2d(along, 0.0)});
    return out;
  }

  // Does beta_depth vary with y_a?
  bool depends(int depth, Eigen::Index a) const {
    if (a < nb_)
      return a == 2;
    return a - nb_ < depth;
  }

  const RobotModel &model_;
  Eigen::Index nb_, m_;
  Vector2d origin_;
  double pitch_;
  std::vector<double> beta_;
};

namespace detail {

// Mass matrix over y only (links, base, and rotors riding on their carrier).
inline MatrixXd reduced_body_mass(const RobotModel &model,
                                  const PlanarKinematics &kin) {
  const auto n = kin.dofs();
  MatrixXd m1 = MatrixXd::Zero(n, n);
  if (model.base.floating) {
    m1(0, 0) += model.base.mass;
    m1(1, 1) += model.base.mass;
    m1(2, 2) += model.base.inertia;
  }
  for (int i = 1; i <= static_cast<int>(model.joints()); ++i) {
    const auto &l = model.links[i - 1];
    const MatrixXd jv = kin.point_jacobian(i, l.com);
    const RowVectorXd jw = kin.angular_jacobian(i);
    m1.noalias() += l.mass * jv.transpose() * jv;
    m1.noalias() += l.inertia * jw.transpose() * jw;
  }
  for (Eigen::Index j = 0; j < model.joints(); ++j) {
    const RowVectorXd jw = kin.angular_jacobian(model.rotor_mount(j));
    m1.noalias() += model.transmissions[j].rotor_inertia * jw.transpose() * jw;
  }
  return m1;
}

} // namespace detail

/// M(s) of the redundant system, partitioned [[M_1, M_c], [M_c^T, M_2]] with
/// M_2 = diag(I_r) and column j of M_c equal to I_r,j times the angular
/// Jacobian of rotor j's carrier.
inline MatrixXd redundant_mass_matrix(const RobotModel &model,
                                      const RobotState &state) {
  const PlanarKinematics kin(model, state.y());
  const auto n = model.reduced_dofs();
  const auto m = model.joints();
  MatrixXd mass = MatrixXd::Zero(n + m, n + m);
  mass.topLeftCorner(n, n) = detail::reduced_body_mass(model, kin);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double ir = model.transmissions[j].rotor_inertia;
    const RowVectorXd jw = kin.angular_jacobian(model.rotor_mount(j));
    mass.block(0, n + j, n, 1) = ir * jw.transpose();
    mass.block(n + j, 0, 1, n) = ir * jw;
    mass(n + j, n + j) = ir;
  }
  return mass;
}

/// dM/ds_a for every redundant coordinate (rotor angles contribute zero).
inline std::vector<MatrixXd> mass_matrix_partials(const RobotModel &model,
                                                  const RobotState &state) {
  const PlanarKinematics kin(model, state.y());
  const auto n = model.reduced_dofs();
  const auto ns = model.redundant_dofs();
  std::vector<MatrixXd> out(ns, MatrixXd::Zero(ns, ns));
  for (int i = 1; i <= static_cast<int>(model.joints()); ++i) {
    const auto &l = model.links[i - 1];
    const MatrixXd jv = kin.point_jacobian(i, l.com);
    const auto djv = kin.point_jacobian_partials(i, l.com);
    for (Eigen::Index a = 0; a < n; ++a) {
      const MatrixXd t = l.mass * djv[a].transpose() * jv;
      out[a].topLeftCorner(n, n) += t + t.transpose();
    }
  }
  return out;
}

/// Coriolis/centrifugal matrix from the Christoffel symbols of M, so that
/// M_dot - 2 C is skew-symmetric.
inline MatrixXd coriolis_matrix(const RobotModel &model, const RobotState &state) {
  const auto dm = mass_matrix_partials(model, state);
  const VectorXd sd = state.s_dot();
  const auto ns = model.redundant_dofs();
  MatrixXd c = MatrixXd::Zero(ns, ns);
  // C_ij = 1/2 sum_k (dM_ij/ds_k + dM_ik/ds_j - dM_jk/ds_i) sd_k
  for (Eigen::Index k = 0; k < ns; ++k) {
    if (sd(k) != 0.0)
      c += 0.5 * sd(k) * dm[k];
  }
  for (Eigen::Index i = 0; i < ns; ++i) {
    const VectorXd row_i = dm[i] * sd; // sum_k dM_jk/ds_i sd_k, indexed by j
    for (Eigen::Index j = 0; j < ns; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < ns; ++k)
        s += dm[j](i, k) * sd(k);
      c(i, j) += 0.5 * (s - row_i(j));
    }
  }
  return c;
}

/// Gravity generalized force (potential gradient) in redundant coordinates.
inline VectorXd gravity_forces(const RobotModel &model, const RobotState &state) {
  const PlanarKinematics kin(model, state.y());
  const auto n = model.reduced_dofs();
  VectorXd g = VectorXd::Zero(model.redundant_dofs());
  if (model.base.floating)
    g.head(2) -= model.base.mass * model.gravity;
  for (int i = 1; i <= static_cast<int>(model.joints()); ++i) {
    const auto &l = model.links[i - 1];
    g.head(n) -= l.mass * kin.point_jacobian(i, l.com).transpose() * model.gravity;
  }
  return g;
}

/// c(s, s_dot) = C s_dot + gravity, so that M s_ddot + c = f.
inline VectorXd bias_forces(const RobotModel &model, const RobotState &state) {
  return coriolis_matrix(model, state) * state.s_dot() + gravity_forces(model, state);
}

inline double kinetic_energy(const RobotModel &model, const RobotState &state) {
  const VectorXd sd = state.s_dot();
  return 0.5 * sd.dot(redundant_mass_matrix(model, state) * sd);
}

inline double potential_energy(const RobotModel &model, const RobotState &state) {
  const PlanarKinematics kin(model, state.y());
  double v = 0.0;
  if (model.base.floating)
    v -= model.base.mass * model.gravity.dot(state.q_base.head(2));
  for (int i = 1; i <= static_cast<int>(model.joints()); ++i) {
    const auto &l = model.links[i - 1];
    v -= l.mass * model.gravity.dot(kin.point(i, l.com));
  }
  return v;
}

/// Reduced dissipative equation of motion
///   H(eta) y_ddot + c_eta = Jbar^T f_ext + (Dbar Gbar)^-T Ebar tau_act
/// obtained by left-multiplying the redundant dynamics with K^T E.
struct DissipativeEoM {
  Eigen::Index base_dofs = 0;
  Eigen::Index joints = 0;
  MatrixXd H;               ///< K^T E M K, generally non-symmetric
  VectorXd bias;            ///< K^T E c
  MatrixXd contact_jacobian; ///< Jbar, foot Jacobian over y
  MatrixXd actuation_map;   ///< (Dbar Gbar)^-T Ebar
  MatrixXd K;               ///< constraint nullspace
  MatrixXd E;               ///< efficiency matrix
  MatrixXd Dbar, Gbar, Ebar;

  MatrixXd contact_map() const { return contact_jacobian.transpose(); }

  /// Reduced accelerations for foot force f_ext and rotor torques tau_phi.
  VectorXd acceleration(const Vector2d &f_ext, const VectorXd &tau_phi) const {
    VectorXd tau_act = VectorXd::Zero(base_dofs + joints);
    tau_act.tail(joints) = tau_phi;
    const VectorXd rhs = contact_map() * f_ext + actuation_map * tau_act - bias;
    return H.partialPivLu().solve(rhs);
  }
};

inline MatrixXd block_diag(const MatrixXd &a, const MatrixXd &b) {
  MatrixXd out = MatrixXd::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

inline DissipativeEoM dissipative_eom(const RobotModel &model,
                                      const RobotState &state,
                                      const EfficiencyAssignment &assign) {
  const auto nb = model.base_dofs();
  const auto m = model.joints();
  if (assign.joints() != m)
    throw DimensionMismatch("efficiency assignment size differs from joints");
  const auto chain = model.chain();

  DissipativeEoM eom;
  eom.base_dofs = nb;
  eom.joints = m;
  eom.K = constraint_nullspace(chain, nb);
  eom.E = efficiency_matrix(assign, nb);
  const MatrixXd mass = redundant_mass_matrix(model, state);
  const MatrixXd kte = eom.K.transpose() * eom.E;
  eom.H = kte * mass * eom.K;
  eom.bias = kte * bias_forces(model, state);
  eom.contact_jacobian = PlanarKinematics(model, state.y()).foot_jacobian();

  const MatrixXd eye_b = MatrixXd::Identity(nb, nb);
  eom.Dbar = block_diag(eye_b, chain.D());
  eom.Gbar = block_diag(eye_b, chain.G());
  eom.Ebar = block_diag(eye_b, assign.effective().asDiagonal().toDenseMatrix());
  const MatrixXd dg_bar = eom.Dbar * eom.Gbar;
  eom.actuation_map = dg_bar.transpose().partialPivLu().solve(eom.Ebar);
  return eom;
}

/// Symmetric surrogate sqrt(E) M sqrt(E) of the non-symmetric E M.
inline MatrixXd symmetrize(const MatrixXd &mass, const MatrixXd &efficiency) {
  if (mass.rows() != efficiency.rows() || mass.cols() != efficiency.cols())
    throw DimensionMismatch("symmetrize: size mismatch");
  const VectorXd root = efficiency.diagonal().cwiseSqrt();
  return root.asDiagonal() * mass * root.asDiagonal();
}

/// Upper bound on the relative kinetic-energy error of symmetrize(),
/// (1 - sqrt(eta))^2 / (1 + eta) = 1 - 2 sqrt(eta) / (1 + eta).
inline double kinetic_energy_error_bound(double eta_min) {
  if (!(eta_min > 0.0) || !(eta_min <= 1.0))
    throw InvalidArgument("eta_min must be in (0, 1]");
  const double d = 1.0 - std::sqrt(eta_min);
  return d * d / (1.0 + eta_min);
}

struct EnergyError {
  double delta = 0.0;        ///< T_s - T_ns
  double total = 0.0;        ///< T_ns = 1/2 v^T E M v
  double coupled = 0.0;      ///< T_c, the y/phi coupling part of T_ns
  double relative = 0.0;     ///< delta / total
  double coupled_relative = 0.0; ///< delta / coupled (0 when both vanish)
};

/// Kinetic-energy discrepancy between E M and sqrt(E) M sqrt(E) along v.
/// The last `rotors` coordinates form the rotor block.
inline EnergyError measured_energy_error(const MatrixXd &mass,
                                         const MatrixXd &efficiency,
                                         const VectorXd &v,
                                         Eigen::Index rotors) {
  const auto n = mass.rows();
  if (mass.cols() != n || efficiency.rows() != n || v.size() != n ||
      rotors < 0 || rotors > n)
    throw DimensionMismatch("measured_energy_error: size mismatch");
  const MatrixXd ns = efficiency * mass;
  // Subtracting the matrices before the quadratic form keeps the identical
  // y-y block out of the difference.
  const MatrixXd diff = symmetrize(mass, efficiency) - ns;
  EnergyError out;
  out.total = 0.5 * v.dot(ns * v);
  if (!(out.total > 0.0))
    throw DegenerateEnergy("kinetic energy T_ns is not positive");
  out.delta = 0.5 * v.dot(diff * v);
  const auto n1 = n - rotors;
  const VectorXd v1 = v.head(n1), v2 = v.tail(rotors);
  out.coupled = 0.5 * (v1.dot(ns.topRightCorner(n1, rotors) * v2) +
                       v2.dot(ns.bottomLeftCorner(rotors, n1) * v1));
  out.relative = out.delta / out.total;
  out.coupled_relative = out.coupled != 0.0 ? out.delta / out.coupled : 0.0;
  return out;
}

} // namespace effdyn
