#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "effdyn/metrics.hpp"
#include "effdyn/presets.hpp"

using namespace effdyn;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Fixed-base two-link arm with point masses at the link tips.
RobotModel point_mass_arm(double ir = 0.0) {
  RobotModel m;
  m.base.floating = false;
  for (double len : {0.5, 0.4}) {
    Link l;
    l.mass = len == 0.5 ? 1.2 : 0.8;
    l.length = len;
    l.com = len;
    l.inertia = 0.0;
    m.links.push_back(l);
  }
  m.transmissions = {{25.0, 0.7, ir, 5.0}, {25.0, 0.7, ir, 5.0}};
  m.topology = ActuationTopology::serial(2);
  m.gravity.setZero();
  return m;
}

Vector2d unit(double deg) { return Vector2d(std::cos(deg * kDeg), std::sin(deg * kDeg)); }

MatrixXd fd_foot_jacobian(const RobotModel &model, const VectorXd &y) {
  MatrixXd j(2, y.size());
  const double h = 1e-7;
  for (Eigen::Index a = 0; a < y.size(); ++a) {
    VectorXd yp = y, ym = y;
    yp(a) += h;
    ym(a) -= h;
    j.col(a) = (PlanarKinematics(model, yp).foot() - PlanarKinematics(model, ym).foot()) / (2 * h);
  }
  return j;
}

InertiaSet leg_set(const RobotModel &model, double hip, double knee) {
  const auto st = RobotState::at_rest(model, presets::leg2dof_configuration(hip, knee));
  return inertia_ellipsoids(model, st,
                            EfficiencyAssignment::uniform(model.transmissions, DriveMode::Ideal));
}

const Vector2d kZ(0.0, 1.0);

} // namespace

TEST(Gie, PointMassArmMatchesClosedForm) {
  const auto model = point_mass_arm();
  VectorXd y(2);
  y << 0.4, 1.1;
  const auto st = RobotState::at_rest(model, y);
  const double m1 = 1.2, m2 = 0.8, l1 = 0.5, l2 = 0.4, c2 = std::cos(1.1);
  Eigen::Matrix2d mass;
  mass << m1 * l1 * l1 + m2 * (l1 * l1 + l2 * l2 + 2 * l1 * l2 * c2), m2 * (l2 * l2 + l1 * l2 * c2),
      m2 * (l2 * l2 + l1 * l2 * c2), m2 * l2 * l2;
  const MatrixXd j = fd_foot_jacobian(model, y);
  const MatrixXd expected = (j * mass.inverse() * j.transpose()).inverse();
  const auto g = gie(dissipative_eom(model, st, EfficiencyAssignment::ideal(2)));
  EXPECT_LT((g.matrix - expected).norm() / expected.norm(), 1e-7);
}

TEST(Gie, RedundantMassWithRotorsMatchesClosedForm) {
  // Hip rotor on the fixed base, knee rotor riding on the thigh.
  const double ir = 3e-4, n = 25.0;
  const auto model = point_mass_arm(ir);
  VectorXd y(2);
  y << -0.3, 0.9;
  const auto st = RobotState::at_rest(model, y);
  const double m1 = 1.2, m2 = 0.8, l1 = 0.5, l2 = 0.4, c2 = std::cos(0.9);
  MatrixXd mass = MatrixXd::Zero(4, 4);
  mass(0, 0) = m1 * l1 * l1 + m2 * (l1 * l1 + l2 * l2 + 2 * l1 * l2 * c2) + ir;
  mass(0, 1) = mass(1, 0) = m2 * (l2 * l2 + l1 * l2 * c2);
  mass(1, 1) = m2 * l2 * l2;
  mass(2, 2) = ir;
  mass(3, 3) = ir;
  mass(0, 3) = mass(3, 0) = ir;
  EXPECT_LT((redundant_mass_matrix(model, st) - mass).norm(), 1e-14);

  MatrixXd k(4, 2);
  k << MatrixXd::Identity(2, 2), n * MatrixXd::Identity(2, 2);
  const MatrixXd e = Eigen::Vector4d(1, 1, 0.7, 0.7).asDiagonal();
  const auto fwd = dissipative_eom(
      model, st, EfficiencyAssignment::uniform(model.transmissions, DriveMode::Forward));
  EXPECT_LT((fwd.H - k.transpose() * e * mass * k).norm(), 1e-12);
}

TEST(Gie, SymmetricPositiveDefinite) {
  const auto model = presets::leg2dof();
  for (double hip : {20.0, 60.0, 100.0})
    for (double knee : {30.0, 60.0, 120.0}) {
      const auto g = leg_set(model, hip, knee).gie.matrix;
      EXPECT_LT((g - g.transpose()).norm(), 1e-12 * g.norm());
      EXPECT_GT(Eigen::SelfAdjointEigenSolver<MatrixXd>(g).eigenvalues().minCoeff(), 0.0);
    }
}

TEST(Gie, StraightKneeSingularOnlyForFixedBase) {
  // A floating base keeps the foot mobile with the knee straight; the limb
  // alone loses rank.
  const auto leg = presets::leg2dof();
  const auto st = RobotState::at_rest(leg, presets::leg2dof_configuration(60, 0));
  EXPECT_NO_THROW(gie(dissipative_eom(leg, st, EfficiencyAssignment::ideal(2))));
  EXPECT_THROW(force_capability(leg.chain(), limb_jacobian(leg, st), torque_limits(leg)),
               SingularJacobian);
  const auto arm = point_mass_arm();
  const auto straight = RobotState::at_rest(arm, Eigen::Vector2d(0.4, 0.0));
  EXPECT_THROW(gie(dissipative_eom(arm, straight, EfficiencyAssignment::ideal(2))),
               SingularJacobian);
}

TEST(Ellipsoids, LosslessCollapseToGie) {
  auto model = with_forward_efficiency(presets::leg2dof(), 1.0);
  const auto set = leg_set(model, 60, 60);
  EXPECT_LT((set.fgie.matrix - set.gie.matrix).norm(), 1e-10 * set.gie.matrix.norm());
  EXPECT_LT((set.bgie.matrix - set.gie.matrix).norm(), 1e-10 * set.gie.matrix.norm());
}

TEST(Ellipsoids, ScalarJointClosedForms) {
  // Fixed base, one joint, 1-D task along the joint: the task inertias are
  // m + eta_f N^2 I_r over eta_f and m + N^2 I_r / eta_b.
  const double n = 30.0, ir = 2e-4, ef = 0.75, link = 0.3;
  const auto chain = CoordinateChain(std::vector<TransmissionSpec>{{n, ef, ir, 1.0}},
                                     ActuationTopology::serial(1));
  const double eb = backward_from_forward(ef, 1.0 / n);
  DissipativeEoM fwd;
  fwd.joints = 1;
  fwd.H = MatrixXd::Constant(1, 1, link + ef * n * n * ir);
  fwd.contact_jacobian = MatrixXd::Identity(1, 1);
  fwd.Dbar = chain.D();
  fwd.Gbar = chain.G();
  fwd.Ebar = MatrixXd::Constant(1, 1, ef);
  fwd.actuation_map = (fwd.Dbar * fwd.Gbar).transpose().inverse() * fwd.Ebar;
  EXPECT_NEAR(fgie(fwd).matrix(0, 0), link / ef + n * n * ir, 1e-12);
  DissipativeEoM bwd = fwd;
  bwd.H(0, 0) = link + n * n * ir / eb;
  EXPECT_NEAR(bgie(bwd).matrix(0, 0), link + n * n * ir / eb, 1e-12);
}

TEST(Ellipsoids, DissipationNeverLowersInertia) {
  for (auto model : {presets::leg2dof(), [] {
         auto m = presets::leg2dof();
         m.topology = ActuationTopology::parallelogram();
         return m;
       }()}) {
    for (double hip : {30.0, 60.0, 90.0})
      for (double knee : {40.0, 60.0, 110.0}) {
        const auto set = leg_set(model, hip, knee);
        for (int a = 0; a < 360; ++a) {
          const Vector2d d = unit(a);
          const double g = set.gie.directional(d);
          EXPECT_GE(set.fgie.directional(d), g) << hip << "/" << knee << " at " << a;
          EXPECT_GE(set.bgie.directional(d), g) << hip << "/" << knee << " at " << a;
        }
      }
  }
}

TEST(Ellipsoids, BackwardAboveForwardVertically) {
  const auto model = presets::leg2dof();
  for (double hip : {30.0, 60.0, 90.0})
    for (double knee : {40.0, 60.0, 110.0}) {
      const auto set = leg_set(model, hip, knee);
      EXPECT_GE(set.bgie.directional(kZ), set.fgie.directional(kZ));
    }
}

TEST(Ellipsoids, BackwardGrowsAsEfficiencyDrops) {
  const auto base = presets::leg2dof();
  double last = 0.0;
  for (double ef = 1.0; ef >= 0.55 - 1e-12; ef -= 0.05) {
    const auto set = leg_set(with_forward_efficiency(base, ef), 60, 60);
    const double b = set.bgie.directional(kZ);
    EXPECT_GT(b, last) << ef;
    last = b;
  }
}

TEST(Ellipsoids, ForwardGrowsPerJoint) {
  for (int joint = 0; joint < 2; ++joint) {
    double last = 0.0;
    for (double ef = 1.0; ef >= 0.55 - 1e-12; ef -= 0.05) {
      auto model = presets::leg2dof();
      model.transmissions[joint].forward_efficiency = ef;
      const auto set = leg_set(model, 60, 60);
      const double f = set.fgie.directional(kZ);
      EXPECT_GT(f, last) << "joint " << joint << " eta " << ef;
      last = f;
    }
  }
}

TEST(Ellipsoids, LockedLimitApproachesRigidBody) {
  const auto model = presets::leg2dof();
  const auto st = RobotState::at_rest(model, presets::leg2dof_configuration());
  const auto assign = EfficiencyAssignment::explicit_values(
      DriveMode::Backward, Eigen::Vector2d(0.6, 0.6), Eigen::Vector2d(1e-4, 1e-4));
  const auto back = bgie(dissipative_eom(model, st, assign));
  EXPECT_NEAR(back.apparent(kZ) / locked_apparent_inertia(model, st, kZ), 1.0, 0.01);
  // Off the vertical the hip rotor, which rides on the torso, keeps the
  // joints from welding completely: q'' tends to -omega_b' / N, not zero.
  for (int a = 0; a < 360; a += 15) {
    const Vector2d d = unit(a);
    EXPECT_NEAR(back.apparent(d) / locked_apparent_inertia(model, st, d), 1.0, 0.06) << a;
  }
}

TEST(ForceCapability, SingleJointSegment) {
  const double n = 40.0, len = 0.25, tau = 0.8;
  const CoordinateChain chain(std::vector<TransmissionSpec>{{n, 0.9, 0.0, tau}},
                              ActuationTopology::serial(1));
  const auto fc = force_capability(chain, MatrixXd::Constant(1, 1, len), VectorXd::Constant(1, tau));
  ASSERT_EQ(fc.vertices.size(), 2u);
  EXPECT_NEAR(fc.vertices.front()(0), -tau * n / len, 1e-9);
  EXPECT_NEAR(fc.vertices.back()(0), tau * n / len, 1e-9);
  EXPECT_NEAR(fc.extent(VectorXd::Constant(1, -1.0)), tau * n / len, 1e-9);
}

TEST(ForceCapability, TwoJointParallelogram) {
  const auto model = presets::leg2dof();
  const auto st = RobotState::at_rest(model, presets::leg2dof_configuration());
  const auto fc = force_capability(model.chain(), limb_jacobian(model, st), torque_limits(model));
  ASSERT_EQ(fc.vertices.size(), 4u);
  // Opposite vertices are point-symmetric about the origin.
  EXPECT_LT((fc.vertices[0] + fc.vertices[2]).norm(), 1e-9);
  EXPECT_LT((fc.vertices[1] + fc.vertices[3]).norm(), 1e-9);
  // Every vertex is the image of a torque-box corner: J^T f = DG tau.
  const MatrixXd jdg = limb_jacobian(model, st) * model.chain().DG();
  for (const auto &v : fc.vertices) {
    const VectorXd tau = jdg.transpose() * v;
    EXPECT_NEAR(tau.cwiseAbs().maxCoeff(), 17.0, 1e-9);
    EXPECT_NEAR(tau.cwiseAbs().minCoeff(), 17.0, 1e-9);
  }
}

TEST(ForceCapability, ForwardScalesByEfficiency) {
  const auto model = with_forward_efficiency(presets::leg2dof(), 0.7);
  const auto st = RobotState::at_rest(model, presets::leg2dof_configuration(45, 80));
  const auto chain = model.chain();
  const MatrixXd jl = limb_jacobian(model, st);
  const auto eff = EfficiencyAssignment::uniform(model.transmissions, DriveMode::Forward);
  const auto fc = force_capability(chain, jl, torque_limits(model));
  const auto ffc = asymmetric_force_capability(chain, jl, torque_limits(model), eff);
  const auto bfc = asymmetric_force_capability(chain, jl, torque_limits(model),
                                               eff.with_mode(DriveMode::Backward));
  for (int a = 0; a < 360; a += 5) {
    const Vector2d d = unit(a);
    EXPECT_NEAR(ffc.extent(d), 0.7 * fc.extent(d), 1e-9 * fc.extent(d));
    EXPECT_NEAR(bfc.extent(d), fc.extent(d) / eff[0].backward, 1e-9 * bfc.extent(d));
    EXPECT_GE(bfc.extent(d), fc.extent(d));
  }
}

TEST(ForceCapability, LockedBackwardPolicies) {
  const auto model = with_forward_efficiency(presets::leg2dof(), 0.45);
  const auto st = RobotState::at_rest(model, presets::leg2dof_configuration());
  const auto eff = EfficiencyAssignment::uniform(model.transmissions, DriveMode::Backward);
  const auto chain = model.chain();
  const MatrixXd jl = limb_jacobian(model, st);
  EXPECT_THROW(asymmetric_force_capability(chain, jl, torque_limits(model), eff),
               LockedTransmission);
  const auto flagged =
      asymmetric_force_capability(chain, jl, torque_limits(model), eff, LockPolicy::Flag);
  EXPECT_TRUE(flagged.unbounded);
  EXPECT_TRUE(std::isinf(flagged.extent(kZ)));
}

TEST(ImpactMitigation, BoundedAndIncreasingWithEfficiency) {
  const auto base = presets::leg2dof();
  const auto st = RobotState::at_rest(base, presets::leg2dof_configuration());
  for (int a = 0; a < 360; a += 30) {
    const Vector2d d = unit(a);
    double last = -1.0;
    for (int k = 0; k <= 9; ++k) {
      const double ef = k == 9 ? 1.0 : 0.55 + 0.05 * k;
      const auto model = with_forward_efficiency(base, ef);
      const auto r = impact_mitigation_factor(
          model, st, EfficiencyAssignment::uniform(model.transmissions, DriveMode::Ideal), d);
      EXPECT_GE(r.xi, 0.0);
      EXPECT_LE(r.xi, 1.0);
      EXPECT_GT(r.xi, last) << a << " " << ef;
      last = r.xi;
    }
  }
}

TEST(ImpactMitigation, FixedBaseIsFullyMitigated) {
  const auto model = point_mass_arm(1e-4);
  VectorXd y(2);
  y << 0.3, 1.0;
  const auto st = RobotState::at_rest(model, y);
  const auto r = impact_mitigation_factor(
      model, st, EfficiencyAssignment::uniform(model.transmissions, DriveMode::Ideal),
      Vector2d(0, 1));
  EXPECT_TRUE(std::isinf(r.locked_inertia));
  EXPECT_EQ(r.xi, 1.0);
}

TEST(ImpactMitigation, RejectsNonUnitDirection) {
  const auto model = presets::leg2dof();
  const auto st = RobotState::at_rest(model, presets::leg2dof_configuration());
  EXPECT_THROW(impact_mitigation_factor(model, st, EfficiencyAssignment::ideal(2), Vector2d(0, 2)),
               InvalidArgument);
}

TEST(Sweep, MatchesPointSamplesAndOrder) {
  const auto model = presets::leg2dof();
  const auto st = RobotState::at_rest(model, presets::leg2dof_configuration());
  const auto etas = linspace(0.55, 1.0, 10);
  const auto rows = efficiency_sweep(model, st, etas, kZ);
  ASSERT_EQ(rows.size(), 10u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto one = sweep_sample(model, st, etas[i], kZ);
    EXPECT_EQ(rows[i].eta_f, etas[i]);
    EXPECT_EQ(rows[i].bgie, one.bgie);
    EXPECT_EQ(rows[i].imf, one.imf);
    EXPECT_NEAR(rows[i].ffc_ratio, etas[i], 1e-9);
    EXPECT_NEAR(rows[i].bfc_ratio, 1.0 / rows[i].eta_b, 1e-9);
  }
  EXPECT_EQ(rows.back().bfc_ratio, 1.0);
}

TEST(Sweep, LockedSampleFlagged) {
  const auto model = presets::leg2dof();
  const auto st = RobotState::at_rest(model, presets::leg2dof_configuration());
  const auto row = sweep_sample(model, st, 0.45, kZ);
  EXPECT_EQ(row.eta_b, 0.0);
  EXPECT_TRUE(std::isinf(row.bgie));
  EXPECT_TRUE(std::isinf(row.bfc_ratio));
}

TEST(Linspace, Endpoints) {
  const auto v = linspace(0.55, 1.0, 50);
  EXPECT_EQ(v.front(), 0.55);
  EXPECT_EQ(v.back(), 1.0);
  EXPECT_EQ(linspace(0.0, 2.0, 1).front(), 2.0);
}
