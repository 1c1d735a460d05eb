#include <gtest/gtest.h>

#include "ddstab/errors.hpp"
#include "ddstab/sdp_solver.hpp"
#include "support.hpp"

using namespace ddstab;
using namespace ddstab::sdp;
using ddstab::testkit::Rng;

namespace {

SolverResult run(const LmiProblem& p) {
  InteriorPointSolver solver;
  return solver.solve(p, SolverOptions{});
}

}  // namespace

TEST(LmiProblem, ShapeAndEvaluate) {
  LmiProblem p = LmiProblem::with_shape({2, 1}, 2);
  EXPECT_EQ(p.num_blocks(), 2);
  EXPECT_EQ(p.num_variables(), 2);
  p.constant[0](0, 0) = 1.0;
  p.add_symmetric_entry(0, 0, 0, 1, 2.0);
  p.add_symmetric_entry(1, 1, 0, 0, 3.0);
  p.validate();
  Vector y(2);
  y << 1.0, 2.0;
  Matrix b0(2, 2);
  b0 << 1, 2, 2, 0;
  EXPECT_EQ(p.evaluate_block(y, 0), b0);
  EXPECT_EQ(p.evaluate_block(y, 1)(0, 0), 6.0);
}

TEST(LmiProblem, DiagonalEntryAddedOnce) {
  LmiProblem p = LmiProblem::with_shape({2}, 1);
  p.add_symmetric_entry(0, 0, 1, 1, 5.0);
  EXPECT_EQ(p.coefficients[0][0](1, 1), 5.0);
}

TEST(LmiProblem, ValidateRejectsBadShapes) {
  LmiProblem p = LmiProblem::with_shape({2}, 1);
  p.constant[0](0, 1) = 1.0;  // asymmetric
  EXPECT_THROW(p.validate(), Error);

  LmiProblem q = LmiProblem::with_shape({2}, 1);
  q.coefficients[0][0] = Matrix::Identity(3, 3);
  EXPECT_THROW(q.validate(), Error);

  LmiProblem r = LmiProblem::with_shape({1}, 2);
  r.eq_matrix = Matrix::Ones(1, 3);
  r.eq_rhs = Vector::Ones(1);
  EXPECT_THROW(r.validate(), Error);
}

TEST(InteriorPoint, ScalarLowerBound) {
  // min y  s.t.  y - 1 >= 0
  LmiProblem p = LmiProblem::with_shape({1}, 1);
  p.constant[0](0, 0) = -1.0;
  p.add_symmetric_entry(0, 0, 0, 0, 1.0);
  p.cost(0) = 1.0;
  const SolverResult r = run(p);
  ASSERT_EQ(r.status, SolverStatus::kOptimal) << r.message;
  EXPECT_NEAR(r.y(0), 1.0, 1e-7);
  EXPECT_LE(r.achieved_tolerance, 1e-8);
}

TEST(InteriorPoint, LargestEigenvalue) {
  // min t  s.t.  t I - C >= 0  has optimum lambda_max(C).
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = testkit::uniform_int(rng, 1, 6);
    Matrix C = testkit::random_matrix(rng, k, k);
    C = (0.5 * (C + C.transpose())).eval();
    LmiProblem p = LmiProblem::with_shape({k}, 1);
    p.constant[0] = -C;
    p.coefficients[0][0] = Matrix::Identity(k, k);
    p.cost(0) = 1.0;
    const SolverResult r = run(p);
    ASSERT_EQ(r.status, SolverStatus::kOptimal) << r.message;
    Eigen::SelfAdjointEigenSolver<Matrix> es(C);
    EXPECT_NEAR(r.y(0), es.eigenvalues().maxCoeff(), 1e-7);
  }
}

TEST(InteriorPoint, EqualityConstraints) {
  // min t  s.t.  [[t, x], [x, 1]] >= 0,  x = 2   ->  t = 4
  LmiProblem p = LmiProblem::with_shape({2}, 2);
  p.constant[0](1, 1) = 1.0;
  p.add_symmetric_entry(0, 0, 0, 0, 1.0);
  p.add_symmetric_entry(1, 0, 0, 1, 1.0);
  p.cost(0) = 1.0;
  p.eq_matrix = Matrix::Zero(1, 2);
  p.eq_matrix(0, 1) = 1.0;
  p.eq_rhs = Vector::Constant(1, 2.0);
  const SolverResult r = run(p);
  ASSERT_EQ(r.status, SolverStatus::kOptimal) << r.message;
  EXPECT_NEAR(r.y(0), 4.0, 1e-6);
  EXPECT_NEAR(r.y(1), 2.0, 1e-9);
}

TEST(InteriorPoint, MultipleBlocks) {
  // min y1 + y2  s.t.  y1 >= 0, y2 >= 0, y1 - y2 = 1  ->  (1, 0)
  LmiProblem p = LmiProblem::with_shape({1, 1}, 2);
  p.add_symmetric_entry(0, 0, 0, 0, 1.0);
  p.add_symmetric_entry(1, 1, 0, 0, 1.0);
  p.cost << 1.0, 1.0;
  p.eq_matrix = Matrix(1, 2);
  p.eq_matrix << 1.0, -1.0;
  p.eq_rhs = Vector::Ones(1);
  const SolverResult r = run(p);
  ASSERT_EQ(r.status, SolverStatus::kOptimal) << r.message;
  EXPECT_NEAR(r.y(0), 1.0, 1e-6);
  EXPECT_NEAR(r.y(1), 0.0, 1e-6);
  EXPECT_NEAR(r.primal_objective, 1.0, 1e-6);
}

TEST(InteriorPoint, DetectsInfeasibility) {
  // y - 1 >= 0 and -y >= 0 cannot both hold.
  LmiProblem p = LmiProblem::with_shape({1, 1}, 1);
  p.constant[0](0, 0) = -1.0;
  p.add_symmetric_entry(0, 0, 0, 0, 1.0);
  p.add_symmetric_entry(0, 1, 0, 0, -1.0);
  p.cost(0) = 1.0;
  const SolverResult r = run(p);
  EXPECT_EQ(r.status, SolverStatus::kInfeasible) << r.message;
  ASSERT_TRUE(r.infeasibility_certificate.has_value());
  // Z >= 0, tr(F1 Z) = 0, tr(F0 Z) < 0.
  const auto& Z = *r.infeasibility_certificate;
  const double trF1 = Z[0](0, 0) - Z[1](0, 0);
  const double trF0 = -Z[0](0, 0);
  EXPECT_GE(Z[0](0, 0), 0.0);
  EXPECT_GE(Z[1](0, 0), 0.0);
  EXPECT_NEAR(trF1, 0.0, 1e-6);
  EXPECT_LT(trF0, 0.0);
}

TEST(InteriorPoint, UnboundedIsNotOptimal) {
  // min -y  s.t.  y >= 0
  LmiProblem p = LmiProblem::with_shape({1}, 1);
  p.add_symmetric_entry(0, 0, 0, 0, 1.0);
  p.cost(0) = -1.0;
  const SolverResult r = run(p);
  EXPECT_NE(r.status, SolverStatus::kOptimal);
  EXPECT_FALSE(r.message.empty());
}

TEST(InteriorPoint, DefaultFactory) {
  auto s = make_default_solver();
  ASSERT_TRUE(s);
  EXPECT_EQ(s->name(), "ddstab-ipm");
  EXPECT_STREQ(to_string(SolverStatus::kOptimal), "optimal");
  EXPECT_STREQ(to_string(SolverStatus::kInfeasible), "infeasible");
  EXPECT_STREQ(to_string(SolverStatus::kNumericalFailure), "numerical_failure");
}
