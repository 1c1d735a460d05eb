#include <gtest/gtest.h>

#include <cmath>

#include "ddstab/errors.hpp"
#include "ddstab/plant.hpp"
#include "support.hpp"

using namespace ddstab;
using ddstab::testkit::Rng;
using ddstab::testkit::random_matrix;

namespace {

std::vector<PlantModel> builtin_plants() {
  Matrix A(2, 2), B(2, 1);
  A << 0.9, 0.2, -0.1, 1.1;
  B << 0.0, 1.0;
  return {make_scalar_quadratic(), make_pendulum(), make_linear(A, B)};
}

// A plant whose equilibrium is away from the origin and which carries no
// exact Jacobian, to exercise the finite-difference path.
PlantModel shifted_plant() {
  auto f = [](const Vector& x, const Vector& u) {
    Vector next(2);
    next(0) = 0.5 * x(0) + 0.1 * (x(1) - 2.0) * (x(1) - 2.0) + 0.5 * 1.0 + u(0) - 3.0;
    next(1) = 2.0 + 0.8 * (x(1) - 2.0) + std::sin(x(0) - 1.0) + 0.2 * (u(0) - 3.0);
    return next;
  };
  Vector xe(2), ue(1);
  xe << 1.0, 2.0;
  ue << 3.0;
  return PlantModel("shifted", 2, 1, f, xe, ue);
}

}  // namespace

TEST(Plant, ConstructorChecksFixedPoint) {
  auto f = [](const Vector& x, const Vector& u) -> Vector { return x + u; };
  Vector xe = Vector::Ones(1);
  Vector ue = Vector::Ones(1);
  EXPECT_THROW(PlantModel("bad", 1, 1, f, xe, ue), Error);
  EXPECT_NO_THROW(PlantModel("ok", 1, 1, f, xe, Vector::Zero(1)));
  EXPECT_THROW(PlantModel("dims", 2, 1, f, xe, Vector::Zero(1)), Error);
}

TEST(Plant, StepRejectsDimensionMismatch) {
  const PlantModel p = make_pendulum();
  EXPECT_THROW(p.step(Vector::Zero(1), Vector::Zero(1)), Error);
}

TEST(Simulate, ScalarThetaExample) {
  const PlantModel p = make_scalar_quadratic();
  Matrix u(1, 3);
  u << 0.1, 0.11, 0.1221;
  const Trajectory t = simulate(p, Vector::Constant(1, 0.1), u);
  EXPECT_NEAR(t.states()(0, 0), 0.1, 1e-15);
  EXPECT_NEAR(t.states()(0, 1), 0.11, 1e-15);
  EXPECT_NEAR(t.states()(0, 2), 0.1221, 1e-15);
  EXPECT_NEAR(t.states()(0, 3), 0.1221 * 0.1221 + 0.1221, 1e-15);
}

TEST(Simulate, EquilibriumStaysPut) {
  for (const PlantModel& p : builtin_plants()) {
    const Matrix u = p.u_eq().replicate(1, 100);
    const Trajectory t = simulate(p, p.x_eq(), u);
    for (int k = 0; k <= 100; ++k) {
      EXPECT_LE((t.states().col(k) - p.x_eq()).cwiseAbs().maxCoeff(), 1e-10)
          << p.name();
    }
  }
  const PlantModel s = shifted_plant();
  const Trajectory t = simulate(s, s.x_eq(), s.u_eq().replicate(1, 100));
  EXPECT_LE((t.states().col(100) - s.x_eq()).norm(), 1e-10);
}

TEST(Simulate, UprightPendulumFallsOver) {
  const PlantModel p = make_pendulum();
  Vector x0(2);
  x0 << 0.01, 0.0;
  const Trajectory t = simulate(p, x0, Matrix::Zero(1, 30));
  EXPECT_GT(std::abs(t.states()(0, 30)), 10 * 0.01);
  for (int k = 1; k <= 30; ++k) {
    EXPECT_GE(std::abs(t.states()(0, k)), std::abs(t.states()(0, k - 1)));
  }
}

TEST(Simulate, DivergenceReportsFirstBadStep) {
  const PlantModel p = make_scalar_quadratic();
  try {
    simulate(p, Vector::Constant(1, 10.0), Matrix::Zero(1, 40));
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDivergence);
    // 10^(2^k) overflows once 2^k > 308.
    EXPECT_EQ(e.step(), 9u);
  }
}

TEST(Simulate, DeviationCoordinates) {
  const PlantModel s = shifted_plant();
  Matrix du(1, 3);
  du << 0.1, -0.2, 0.05;
  Vector dx0(2);
  dx0 << 0.01, -0.02;
  const Trajectory dev = simulate_deviation(s, dx0, du);
  const Trajectory abs =
      simulate(s, s.x_eq() + dx0, du.colwise() + s.u_eq());
  EXPECT_LE((dev.states() - (abs.states().colwise() - s.x_eq())).norm(), 1e-15);
  EXPECT_EQ(dev.inputs(), du);
}

TEST(Linearize, ScalarQuadratic) {
  const LinearizationPair lin = linearize(make_scalar_quadratic());
  EXPECT_EQ(lin.A(0, 0), 0.0);
  EXPECT_EQ(lin.B(0, 0), 1.0);
}

TEST(Linearize, PendulumDefaults) {
  const LinearizationPair lin = linearize(make_pendulum());
  Matrix A(2, 2), B(2, 1);
  A << 1.0, 0.1, 0.98, 0.999;
  B << 0.0, 0.1;
  EXPECT_LE((lin.A - A).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((lin.B - B).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Linearize, LinearPlantIsExact) {
  Rng rng(4);
  const Matrix A = random_matrix(rng, 3, 3);
  const Matrix B = random_matrix(rng, 3, 2);
  const LinearizationPair lin = linearize(make_linear(A, B));
  EXPECT_EQ(lin.A, A);
  EXPECT_EQ(lin.B, B);
}

TEST(Linearize, FiniteDifferencesMatchExactJacobians) {
  Rng rng(6);
  std::vector<PlantModel> plants = builtin_plants();
  PendulumParams odd;
  odd.dt = 0.05;
  odd.mass = 0.3;
  odd.length = 2.0;
  odd.friction = 0.2;
  plants.push_back(make_pendulum(odd));
  plants.push_back(make_linear(random_matrix(rng, 4, 4), random_matrix(rng, 4, 2)));
  for (const PlantModel& p : plants) {
    const LinearizationPair fd = finite_difference_jacobian(p);
    const LinearizationPair ex = *p.exact_linearization();
    EXPECT_LE((fd.A - ex.A).cwiseAbs().maxCoeff(), 1e-6) << p.name();
    EXPECT_LE((fd.B - ex.B).cwiseAbs().maxCoeff(), 1e-6) << p.name();
  }
}

TEST(Linearize, FiniteDifferencesAwayFromOrigin) {
  const LinearizationPair lin = linearize(shifted_plant());
  Matrix A(2, 2), B(2, 1);
  A << 0.5, 0.0, 1.0, 0.8;
  B << 1.0, 0.2;
  EXPECT_LE((lin.A - A).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE((lin.B - B).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Remainder, LinearPlantHasNone) {
  Rng rng(10);
  const Matrix A = random_matrix(rng, 3, 3);
  const Matrix B = random_matrix(rng, 3, 1);
  const PlantModel p = make_linear(A, B);
  const Trajectory t =
      simulate_deviation(p, random_matrix(rng, 3, 1).col(0), random_matrix(rng, 1, 8));
  const DataMatrices dm = remainder_sequence(p, t);
  ASSERT_TRUE(dm.D0.has_value());
  EXPECT_LE(dm.D0->cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Remainder, ScalarQuadraticIsStateSquared) {
  const PlantModel p = make_scalar_quadratic();
  Matrix u(1, 3);
  u << 0.1, 0.11, 0.1221;
  const Trajectory t = simulate_deviation(p, Vector::Constant(1, 0.1), u);
  const DataMatrices dm = remainder_sequence(p, t);
  for (int k = 0; k < 3; ++k) {
    const double x = t.states()(0, k);
    EXPECT_NEAR((*dm.D0)(0, k), x * x, 1e-17);
  }
}

TEST(Remainder, ReconstructionIdentity) {
  Rng rng(12);
  for (const PlantModel& p : builtin_plants()) {
    const double amp = p.name() == "scalar_quadratic" ? 0.3 : 2.0;
    const Matrix u = random_matrix(rng, p.input_dim(), 10, -amp, amp);
    const Trajectory t = simulate_deviation(p, Vector::Zero(p.state_dim()), u);
    const DataMatrices dm = remainder_sequence(p, t);
    const LinearizationPair lin = linearize(p);
    const Matrix gap = dm.X1 - (lin.A * dm.X0 + lin.B * dm.U0 + *dm.D0);
    EXPECT_LE(gap.cwiseAbs().maxCoeff(), 1e-10) << p.name();
  }
}

TEST(Remainder, DecaysFasterThanTheData) {
  // |d(k)| / |(x(k), u(k))| should shrink at least linearly in the scale.
  Rng rng(13);
  for (const PlantModel& p : {make_scalar_quadratic(), make_pendulum()}) {
    const Matrix u = random_matrix(rng, p.input_dim(), 6, -0.5, 0.5);
    auto worst_ratio = [&](double eps) {
      const Trajectory t =
          simulate_deviation(p, Vector::Zero(p.state_dim()), eps * u);
      const DataMatrices dm = remainder_sequence(p, t);
      const Matrix s = dm.stacked();
      double worst = 0.0;
      for (int k = 0; k < s.cols(); ++k) {
        if (s.col(k).norm() == 0.0) continue;
        worst = std::max(worst, dm.D0->col(k).norm() / s.col(k).norm());
      }
      return worst;
    };
    // ratio / eps is bounded (constant for x^2, shrinking for sin); allow the
    // O(eps) correction.
    const double c = worst_ratio(0.1) / 0.1;
    for (double eps : {1e-2, 1e-3}) {
      EXPECT_LE(worst_ratio(eps), c * eps * 1.1) << p.name();
    }
    const double c2 = worst_ratio(1e-2) / 1e-2;
    const double c3 = worst_ratio(1e-3) / 1e-3;
    EXPECT_LE(c3 / c2, 1.01) << p.name();
  }
}

TEST(PlantConfig, Pendulum) {
  const auto j = nlohmann::json::parse(
      R"({"kind":"pendulum","params":{"dt":0.05,"mass":2.0,"length":1.0,"friction":0.0,"gravity":9.8}})");
  const PlantModel p = plant_from_json(j);
  const LinearizationPair lin = linearize(p);
  EXPECT_NEAR(lin.A(1, 0), 0.05 * 9.8, 1e-15);
  EXPECT_NEAR(lin.B(1, 0), 0.05 / 2.0, 1e-15);
  EXPECT_NEAR(lin.A(1, 1), 1.0, 1e-15);
}

TEST(PlantConfig, LinearNestedAndFlat) {
  const auto nested = nlohmann::json::parse(
      R"({"kind":"linear","A":[[1,2],[3,4]],"B":[[1],[0]]})");
  const auto flat = nlohmann::json::parse(
      R"({"kind":"linear","params":{"A":[1,2,3,4],"B":[1,0]}})");
  for (const auto& j : {nested, flat}) {
    const LinearizationPair lin = linearize(plant_from_json(j));
    Matrix A(2, 2);
    A << 1, 2, 3, 4;
    EXPECT_EQ(lin.A, A);
    EXPECT_EQ(lin.B.rows(), 2);
    EXPECT_EQ(lin.B.cols(), 1);
    EXPECT_EQ(lin.B(0, 0), 1.0);
  }
}

TEST(PlantConfig, Errors) {
  EXPECT_THROW(plant_from_json(nlohmann::json::parse(R"({"kind":"rocket"})")), Error);
  EXPECT_THROW(plant_from_json(nlohmann::json::parse(R"({"params":{}})")), Error);
  EXPECT_THROW(plant_from_json(nlohmann::json::parse(
                   R"({"kind":"linear","A":[1,2,3],"B":[1]})")),
               Error);
  EXPECT_THROW(plant_from_json(nlohmann::json::parse(
                   R"({"kind":"pendulum","params":{"mass":-1}})")),
               Error);
  try {
    load_plant_config("/nonexistent/plant.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}
