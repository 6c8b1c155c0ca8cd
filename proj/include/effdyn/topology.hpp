#pragma once

// Coordinate chain rotor -> motor -> joint:
//   d(psi) = G d(phi),  d(q) = D d(psi),  and dually tau_phi = G^T D^T tau_q.
// The rotor/joint coupling q = D G phi is a linear holonomic constraint whose
// Jacobian and nullspace drive the model reduction in dynamics.hpp.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "effdyn/drive_mode.hpp"
#include "effdyn/errors.hpp"

namespace effdyn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// DG is rejected as singular beyond this 2-norm condition number.
inline constexpr double kMaxTopologyCondition = 1e12;

struct TransmissionSpec {
  double gear_ratio = 1.0;         ///< N, > 1 is a speed reduction
  double forward_efficiency = 1.0; ///< eta_f in (0, 1]
  double rotor_inertia = 0.0;      ///< I_r [kg m^2]
  double torque_limit = 1.0;       ///< rotor-side bound [N m]

  double reduction() const { return 1.0 / gear_ratio; }

  void validate() const {
    if (!(gear_ratio > 0.0) || !std::isfinite(gear_ratio))
      throw InvalidArgument("transmission: gear ratio must be positive");
    if (!(forward_efficiency > 0.0) || !(forward_efficiency <= 1.0))
      throw InvalidArgument("transmission: forward efficiency must be in (0, 1]");
    if (!(rotor_inertia >= 0.0) || !std::isfinite(rotor_inertia))
      throw InvalidArgument("transmission: rotor inertia must be >= 0");
    if (!(torque_limit > 0.0) || !std::isfinite(torque_limit))
      throw InvalidArgument("transmission: torque limit must be positive");
  }
};

inline double condition_number(const MatrixXd &m) {
  if (m.size() == 0)
    return 1.0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const auto &sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0))
    return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

/// Square actuation topology D mapping motor output angles to joint angles.
class ActuationTopology {
public:
  ActuationTopology() = default;
  explicit ActuationTopology(MatrixXd d) : d_(std::move(d)) {
    if (d_.rows() != d_.cols())
      throw DimensionMismatch("actuation topology must be square");
    if (d_.rows() == 0)
      throw InvalidArgument("actuation topology must have at least one joint");
    if (!d_.allFinite())
      throw InvalidArgument("actuation topology has non-finite entries");
    if (condition_number(d_) > kMaxTopologyCondition)
      throw SingularTopology("actuation topology D is singular");
  }

  static ActuationTopology serial(Eigen::Index m) {
    return ActuationTopology(MatrixXd::Identity(m, m));
  }

  /// Two-motor parallelogram: q1 = psi1, q2 = psi2 - psi1.
  static ActuationTopology parallelogram() {
    MatrixXd d(2, 2);
    d << 1, 0, -1, 1;
    return ActuationTopology(d);
  }

  const MatrixXd &matrix() const { return d_; }
  Eigen::Index joints() const { return d_.rows(); }

private:
  MatrixXd d_;
};

class CoordinateChain {
public:
  CoordinateChain(const std::vector<TransmissionSpec> &transmissions,
                  ActuationTopology topology)
      : topology_(std::move(topology)) {
    const auto m = topology_.joints();
    if (static_cast<Eigen::Index>(transmissions.size()) != m)
      throw DimensionMismatch("one transmission per joint is required");
    reduction_.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      transmissions[j].validate();
      reduction_(j) = transmissions[j].reduction();
    }
    init();
  }

  CoordinateChain(const VectorXd &reduction, ActuationTopology topology)
      : reduction_(reduction), topology_(std::move(topology)) {
    if (reduction_.size() != topology_.joints())
      throw DimensionMismatch("reduction size differs from joint count");
    if (!(reduction_.array() > 0.0).all())
      throw InvalidArgument("reductions must be positive");
    init();
  }

  Eigen::Index joints() const { return topology_.joints(); }
  MatrixXd G() const { return reduction_.asDiagonal(); }
  const VectorXd &reductions() const { return reduction_; }
  const MatrixXd &D() const { return topology_.matrix(); }
  const MatrixXd &DG() const { return dg_; }
  const MatrixXd &DG_inverse() const { return dg_inv_; }

  /// d(psi) = G d(phi)
  VectorXd motor_motion(const VectorXd &dphi) const {
    check(dphi);
    return reduction_.cwiseProduct(dphi);
  }
  /// d(q) = D G d(phi)
  VectorXd joint_motion(const VectorXd &dphi) const {
    check(dphi);
    return dg_ * dphi;
  }
  /// tau_psi = D^T tau_q
  VectorXd motor_torque(const VectorXd &tau_q) const {
    check(tau_q);
    return D().transpose() * tau_q;
  }
  /// tau_phi = G^T D^T tau_q
  VectorXd rotor_torque(const VectorXd &tau_q) const {
    check(tau_q);
    return dg_.transpose() * tau_q;
  }
  /// Rotor angles consistent with the joint angles, (DG)^-1 q.
  VectorXd rotor_from_joint(const VectorXd &q) const {
    check(q);
    return dg_inv_ * q;
  }

private:
  void init() {
    dg_ = topology_.matrix() * reduction_.asDiagonal();
    if (condition_number(dg_) > kMaxTopologyCondition)
      throw SingularTopology("DG is numerically singular");
    dg_inv_ = dg_.partialPivLu().inverse();
  }

  void check(const VectorXd &v) const {
    if (v.size() != joints())
      throw DimensionMismatch("vector size differs from joint count");
  }

  VectorXd reduction_;
  ActuationTopology topology_;
  MatrixXd dg_;
  MatrixXd dg_inv_;
};

/// g(q, phi) = q - D G phi
inline VectorXd constraint_residual(const VectorXd &q, const VectorXd &phi,
                                    const CoordinateChain &chain) {
  if (q.size() != chain.joints() || phi.size() != chain.joints())
    throw DimensionMismatch("constraint residual: size mismatch");
  return q - chain.DG() * phi;
}

/// A = [0_{m x nb} | I_m | -DG], the Jacobian of g w.r.t. s = (q_b, q, phi).
inline MatrixXd constraint_jacobian(const CoordinateChain &chain,
                                   Eigen::Index nb) {
  const auto m = chain.joints();
  MatrixXd a = MatrixXd::Zero(m, nb + 2 * m);
  a.block(0, nb, m, m).setIdentity();
  a.block(0, nb + m, m, m) = -chain.DG();
  return a;
}

/// K = [[I_nb, 0], [0, I_m], [0, (DG)^-1]]. A K = 0, and the top rows are the
/// identity so the reduced coordinates y = (q_b, q) are kept as-is.
inline MatrixXd constraint_nullspace(const CoordinateChain &chain,
                                     Eigen::Index nb) {
  const auto m = chain.joints();
  MatrixXd k = MatrixXd::Zero(nb + 2 * m, nb + m);
  k.topRows(nb + m).setIdentity();
  k.block(nb + m, nb, m, m) = chain.DG_inverse();
  return k;
}

/// Backward efficiency of a geared stage from its forward efficiency and
/// reduction G = 1/N. Zero once eta_f <= (1 - G^2) / 2.
inline double backward_from_forward(double eta_f, double reduction) {
  if (!(eta_f > 0.0) || !(eta_f <= 1.0))
    throw InvalidArgument("forward efficiency must be in (0, 1]");
  if (!(reduction > 0.0) || !(reduction < 1.0))
    throw InvalidArgument("reduction must be in (0, 1)");
  const double g2 = reduction * reduction;
  if (eta_f <= 0.5 * (1.0 - g2))
    return 0.0;
  // Written so that eta_f = 1 gives (1 + G^2) / (1 + G^2) bit for bit.
  return (2.0 * eta_f - 1.0 + g2) / (eta_f + g2 * (2.0 - eta_f));
}

/// Forward efficiency below which backward_from_forward returns zero.
inline double backward_locking_threshold(double reduction) {
  return 0.5 * (1.0 - reduction * reduction);
}

struct JointEfficiency {
  DriveMode mode = DriveMode::Ideal;
  double forward = 1.0;
  double backward = 1.0;

  bool locked() const { return mode == DriveMode::Backward && backward <= 0.0; }

  /// eta_f (Forward), 1/eta_b (Backward) or 1 (Ideal).
  double effective() const {
    switch (mode) {
    case DriveMode::Forward:
      return forward;
    case DriveMode::Backward:
      if (backward <= 0.0)
        throw LockedTransmission("backward efficiency is zero: joint locked");
      return 1.0 / backward;
    case DriveMode::Ideal:
      return 1.0;
    }
    return 1.0;
  }
};

class EfficiencyAssignment {
public:
  EfficiencyAssignment() = default;
  explicit EfficiencyAssignment(std::vector<JointEfficiency> joints)
      : joints_(std::move(joints)) {
    for (const auto &j : joints_) {
      if (!(j.forward > 0.0) || !(j.forward <= 1.0))
        throw InvalidArgument("forward efficiency must be in (0, 1]");
      if (!(j.backward >= 0.0) || !(j.backward <= 1.0))
        throw InvalidArgument("backward efficiency must be in [0, 1]");
    }
  }

  static EfficiencyAssignment ideal(Eigen::Index m) {
    return EfficiencyAssignment(std::vector<JointEfficiency>(m));
  }

  /// Same mode on every joint; eta_b follows from eta_f and the reduction.
  static EfficiencyAssignment
  uniform(const std::vector<TransmissionSpec> &transmissions, DriveMode mode) {
    std::vector<JointEfficiency> joints;
    joints.reserve(transmissions.size());
    for (const auto &t : transmissions) {
      t.validate();
      JointEfficiency j;
      j.mode = mode;
      j.forward = t.forward_efficiency;
      j.backward = backward_from_forward(t.forward_efficiency, t.reduction());
      joints.push_back(j);
    }
    return EfficiencyAssignment(std::move(joints));
  }

  /// Explicit per-joint efficiencies, all in the same mode.
  static EfficiencyAssignment explicit_values(DriveMode mode,
                                              const VectorXd &forward,
                                              const VectorXd &backward) {
    if (forward.size() != backward.size())
      throw DimensionMismatch("forward/backward efficiency sizes differ");
    std::vector<JointEfficiency> joints(forward.size());
    for (Eigen::Index j = 0; j < forward.size(); ++j)
      joints[j] = {mode, forward(j), backward(j)};
    return EfficiencyAssignment(std::move(joints));
  }

  Eigen::Index joints() const { return static_cast<Eigen::Index>(joints_.size()); }
  const JointEfficiency &operator[](Eigen::Index j) const { return joints_[j]; }
  JointEfficiency &operator[](Eigen::Index j) { return joints_[j]; }

  bool any_locked() const {
    for (const auto &j : joints_)
      if (j.locked())
        return true;
    return false;
  }

  bool uniform_mode() const {
    for (const auto &j : joints_)
      if (j.mode != joints_.front().mode)
        return false;
    return true;
  }

  EfficiencyAssignment with_mode(DriveMode mode) const {
    auto out = *this;
    for (auto &j : out.joints_)
      j.mode = mode;
    return out;
  }

  /// Per-joint effective efficiencies; throws LockedTransmission.
  VectorXd effective() const {
    VectorXd eta(joints());
    for (Eigen::Index j = 0; j < joints(); ++j) {
      if (joints_[j].locked()) {
        std::ostringstream msg;
        msg << "transmission " << j << " is locked (eta_b = 0) in backward mode";
        throw LockedTransmission(msg.str());
      }
      eta(j) = joints_[j].effective();
    }
    return eta;
  }

private:
  std::vector<JointEfficiency> joints_;
};

/// E = blkdiag(I_nb, I_m, diag(eta_effective)).
inline MatrixXd efficiency_matrix(const EfficiencyAssignment &assign,
                                  Eigen::Index nb) {
  const auto m = assign.joints();
  VectorXd diag = VectorXd::Ones(nb + 2 * m);
  diag.tail(m) = assign.effective();
  return diag.asDiagonal();
}

/// Mode realized by a joint from the sign of its output power tau_psi psi_dot.
/// Used when post-processing trajectories; zero power counts as Ideal.
inline DriveMode classify_mode(double motor_torque, double motor_velocity,
                               double tolerance = 0.0) {
  const double power = motor_torque * motor_velocity;
  if (power > tolerance)
    return DriveMode::Forward;
  if (power < -tolerance)
    return DriveMode::Backward;
  return DriveMode::Ideal;
}

} // namespace effdyn
