#include <gtest/gtest.h>

#include <random>

#include "effdyn/topology.hpp"

using namespace effdyn;

namespace {

std::vector<TransmissionSpec> gears(double n1, double n2, double ef1 = 0.8, double ef2 = 0.7) {
  return {{n1, ef1, 6.4e-5, 17.0}, {n2, ef2, 6.4e-5, 17.0}};
}

} // namespace

TEST(Constraint, ZeroAtOrigin) {
  const CoordinateChain chain(gears(20, 20), ActuationTopology::serial(2));
  EXPECT_EQ(constraint_residual(VectorXd::Zero(2), VectorXd::Zero(2), chain).norm(), 0.0);
}

TEST(Constraint, ParallelogramResidual) {
  const CoordinateChain chain(gears(20, 20), ActuationTopology::parallelogram());
  const VectorXd phi = Eigen::Vector2d(20.0, 20.0);
  const VectorXd q = Eigen::Vector2d(0.3, -0.2);
  const VectorXd g = constraint_residual(q, phi, chain);
  EXPECT_NEAR(g(0), 0.3 - 1.0, 1e-15);
  EXPECT_NEAR(g(1), -0.2 - 0.0, 1e-15);
  EXPECT_NEAR(constraint_residual(Eigen::Vector2d(1.0, 0.0), phi, chain).norm(), 0.0, 1e-15);
}

TEST(Constraint, SerialIsPureReduction) {
  const CoordinateChain chain(gears(20, 50), ActuationTopology::serial(2));
  const VectorXd phi = Eigen::Vector2d(3.0, -5.0);
  const VectorXd q = chain.joint_motion(phi);
  EXPECT_NEAR(q(0), 3.0 / 20, 1e-15);
  EXPECT_NEAR(q(1), -5.0 / 50, 1e-15);
  EXPECT_NEAR(constraint_residual(q, phi, chain).norm(), 0.0, 1e-15);
}

TEST(Constraint, DimensionMismatch) {
  const CoordinateChain chain(gears(20, 20), ActuationTopology::serial(2));
  EXPECT_THROW(constraint_residual(VectorXd::Zero(3), VectorXd::Zero(2), chain), DimensionMismatch);
}

TEST(Constraint, ScalarJacobianAndNullspace) {
  const CoordinateChain chain(std::vector<TransmissionSpec>{{10.0, 0.9, 1e-5, 1.0}},
                              ActuationTopology::serial(1));
  const MatrixXd a = constraint_jacobian(chain, 0);
  ASSERT_EQ(a.rows(), 1);
  ASSERT_EQ(a.cols(), 2);
  EXPECT_EQ(a(0, 0), 1.0);
  EXPECT_NEAR(a(0, 1), -0.1, 1e-16);
  const MatrixXd k = constraint_nullspace(chain, 0);
  EXPECT_NEAR(k(1, 0), 10.0, 1e-13);
}

TEST(Constraint, ParallelogramBlocks) {
  const CoordinateChain chain(gears(20, 20), ActuationTopology::parallelogram());
  const MatrixXd a = constraint_jacobian(chain, 3);
  ASSERT_EQ(a.rows(), 2);
  ASSERT_EQ(a.cols(), 7);
  EXPECT_TRUE(a.leftCols(3).isZero(0.0));
  EXPECT_TRUE(a.middleCols(3, 2).isIdentity(0.0));
  MatrixXd dg(2, 2);
  dg << 1.0 / 20, 0.0, -1.0 / 20, 1.0 / 20;
  EXPECT_TRUE(a.rightCols(2).isApprox(-dg, 1e-15));

  const MatrixXd k = constraint_nullspace(chain, 3);
  ASSERT_EQ(k.rows(), 7);
  ASSERT_EQ(k.cols(), 5);
  EXPECT_TRUE(k.topRows(5).isIdentity(0.0));
  MatrixXd expected(2, 2);
  expected << 20.0, 0.0, 20.0, 20.0;
  EXPECT_TRUE(k.bottomRows(2).rightCols(2).isApprox(expected, 1e-14));
  EXPECT_TRUE(k.bottomRows(2).leftCols(3).isZero(0.0));
}

TEST(Constraint, JacobianAnnihilatesNullspace) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0), n(2.0, 80.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 1 + trial % 4;
    MatrixXd d = MatrixXd::Identity(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < i; ++j)
        d(i, j) = std::round(u(rng));
    std::vector<TransmissionSpec> t;
    for (int j = 0; j < m; ++j)
      t.push_back({n(rng), 0.9, 1e-5, 1.0});
    const CoordinateChain chain(t, ActuationTopology(d));
    for (Eigen::Index nb : {0, 3, 6}) {
      const MatrixXd ak = constraint_jacobian(chain, nb) * constraint_nullspace(chain, nb);
      EXPECT_LT(ak.lpNorm<Eigen::Infinity>(), 1e-12);
    }
  }
}

TEST(Constraint, SingularTopologyRejected) {
  MatrixXd d(2, 2);
  d << 1, 1, 1, 1;
  EXPECT_THROW(ActuationTopology{d}, SingularTopology);
  EXPECT_THROW(ActuationTopology{MatrixXd::Ones(2, 3)}, DimensionMismatch);
}

TEST(DualFlows, MotionAndForceMapsAreTransposes) {
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  const CoordinateChain chain(gears(20, 35), ActuationTopology::parallelogram());
  for (int i = 0; i < 20; ++i) {
    const VectorXd tau = VectorXd::NullaryExpr(2, [&] { return g(rng); });
    const VectorXd dphi = VectorXd::NullaryExpr(2, [&] { return g(rng); });
    EXPECT_NEAR((chain.G().transpose() * tau).dot(dphi), tau.dot(chain.motor_motion(dphi)), 1e-13);
    // Power through the whole chain: tau_q . dq = tau_phi . dphi.
    const VectorXd tau_q = tau;
    EXPECT_NEAR(tau_q.dot(chain.joint_motion(dphi)), chain.rotor_torque(tau_q).dot(dphi), 1e-13);
  }
}

TEST(EfficiencyMatrix, IdealIsIdentity) {
  EXPECT_TRUE(efficiency_matrix(EfficiencyAssignment::ideal(2), 3).isIdentity(0.0));
}

TEST(EfficiencyMatrix, ForwardAndBackwardEntries) {
  const auto fwd = EfficiencyAssignment::explicit_values(DriveMode::Forward, Eigen::Vector2d(0.8, 0.7),
                                                         Eigen::Vector2d(0.5, 0.25));
  const VectorXd df = efficiency_matrix(fwd, 3).diagonal();
  VectorXd expect(7);
  expect << 1, 1, 1, 1, 1, 0.8, 0.7;
  EXPECT_EQ(df, expect);
  const VectorXd db = efficiency_matrix(fwd.with_mode(DriveMode::Backward), 3).diagonal();
  expect.tail(2) << 2.0, 4.0;
  EXPECT_EQ(db, expect);
}

TEST(EfficiencyMatrix, LockedBackwardJointThrows) {
  const auto a = EfficiencyAssignment::explicit_values(DriveMode::Backward, Eigen::Vector2d(0.45, 0.8),
                                                       Eigen::Vector2d(0.0, 0.7));
  EXPECT_TRUE(a.any_locked());
  EXPECT_THROW(efficiency_matrix(a, 3), LockedTransmission);
  EXPECT_NO_THROW(efficiency_matrix(a.with_mode(DriveMode::Forward), 3));
}

TEST(EfficiencyMatrix, MixedModes) {
  auto a = EfficiencyAssignment::explicit_values(DriveMode::Forward, Eigen::Vector2d(0.8, 0.7),
                                                 Eigen::Vector2d(0.75, 0.5));
  a[1].mode = DriveMode::Backward;
  EXPECT_FALSE(a.uniform_mode());
  const VectorXd d = efficiency_matrix(a, 0).diagonal();
  EXPECT_EQ(d(2), 0.8);
  EXPECT_EQ(d(3), 2.0);
}

TEST(BackwardFromForward, LosslessFixedPoint) {
  for (double g : {0.01, 0.05, 0.1, 0.5, 0.9})
    EXPECT_EQ(backward_from_forward(1.0, g), 1.0);
}

TEST(BackwardFromForward, LocksBelowBreakpoint) {
  const double g = 1.0 / 20;
  EXPECT_NEAR(backward_locking_threshold(g), 0.49875, 1e-15);
  EXPECT_EQ(backward_from_forward(0.49875, g), 0.0);
  EXPECT_EQ(backward_from_forward(0.3, g), 0.0);
  EXPECT_LE(backward_from_forward(0.499, g), 1e-3);
  EXPECT_GT(backward_from_forward(0.499, g), 0.0);
}

TEST(BackwardFromForward, ReferenceValue) {
  // (2 * 0.75 - 1 + 0.0025) / ((1 - 0.0025) * 0.75 + 2 * 0.0025)
  EXPECT_NEAR(backward_from_forward(0.75, 0.05), 0.5025 / 0.753125, 1e-15);
  EXPECT_NEAR(backward_from_forward(0.75, 0.05), 0.66722, 1e-5);
}

TEST(BackwardFromForward, BoundedMonotoneAndBelowForward) {
  for (double g : {0.02, 0.05, 0.2, 0.6}) {
    double last = -1.0;
    for (int i = 1; i <= 2000; ++i) {
      const double ef = i / 2000.0;
      const double eb = backward_from_forward(ef, g);
      EXPECT_GE(eb, 0.0);
      EXPECT_LE(eb, 1.0);
      EXPECT_GE(eb, last);
      if (ef < 1.0)
        EXPECT_LT(eb, ef);
      last = eb;
    }
  }
}

TEST(BackwardFromForward, ContinuousAtBreakpoint) {
  for (double g : {0.05, 0.1, 0.3}) {
    const double b = backward_locking_threshold(g);
    EXPECT_LE(backward_from_forward(b + 1e-12, g), 1e-9);
    EXPECT_LE(backward_from_forward(std::nextafter(b, 1.0), g), 1e-9);
  }
}

TEST(BackwardFromForward, RejectsOutOfRange) {
  EXPECT_THROW(backward_from_forward(0.0, 0.05), InvalidArgument);
  EXPECT_THROW(backward_from_forward(1.1, 0.05), InvalidArgument);
  EXPECT_THROW(backward_from_forward(0.9, 1.0), InvalidArgument);
}

TEST(EfficiencyAssignment, UniformDerivesBackward) {
  const auto a = EfficiencyAssignment::uniform(gears(20, 20), DriveMode::Backward);
  EXPECT_NEAR(a[0].backward, backward_from_forward(0.8, 0.05), 0.0);
  EXPECT_NEAR(a[1].backward, backward_from_forward(0.7, 0.05), 0.0);
  EXPECT_LT(a[1].backward, a[1].forward);
}

TEST(ModeClassification, PowerSign) {
  EXPECT_EQ(classify_mode(2.0, 1.0), DriveMode::Forward);
  EXPECT_EQ(classify_mode(-2.0, 1.0), DriveMode::Backward);
  EXPECT_EQ(classify_mode(0.0, 1.0), DriveMode::Ideal);
  EXPECT_EQ(classify_mode(1e-9, 1e-9, 1e-12), DriveMode::Ideal);
}
