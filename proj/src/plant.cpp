#include "ddstab/plant.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <utility>

#include "ddstab/errors.hpp"

namespace ddstab {
namespace {

constexpr double kFixedPointTol = 1e-12;

Matrix matrix_from_json(const nlohmann::json& j, const char* name, int rows,
                        int cols) {
  // Accepts [[row], [row], ...] or a flat row-major list.
  std::vector<double> flat;
  if (!j.is_array()) {
    throw Error(ErrorCode::kInvalidInput,
                std::string("plant config: ") + name + " must be an array");
  }
  for (const auto& item : j) {
    if (item.is_array()) {
      for (const auto& v : item) flat.push_back(v.get<double>());
    } else {
      flat.push_back(item.get<double>());
    }
  }
  if (rows < 0) {
    // Square matrix, infer the side from the element count.
    const int side = static_cast<int>(std::lround(std::sqrt(flat.size())));
    rows = cols = side;
  } else if (cols < 0) {
    cols = rows == 0 ? 0 : static_cast<int>(flat.size()) / rows;
  }
  if (rows <= 0 || cols <= 0 ||
      flat.size() != static_cast<std::size_t>(rows) * cols) {
    throw Error(ErrorCode::kInvalidInput,
                std::string("plant config: ") + name + " has " +
                    std::to_string(flat.size()) + " entries, not " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  }
  Matrix out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out(r, c) = flat[r * cols + c];
  }
  return out;
}

int nested_rows(const nlohmann::json& j) {
  if (j.is_array() && !j.empty() && j.front().is_array()) {
    return static_cast<int>(j.size());
  }
  return -1;
}

}  // namespace

PlantModel::PlantModel(std::string name, int n, int m, StepFn step,
                       Vector x_eq, Vector u_eq,
                       std::optional<LinearizationPair> exact_linearization)
    : name_(std::move(name)),
      n_(n),
      m_(m),
      step_(std::move(step)),
      x_eq_(std::move(x_eq)),
      u_eq_(std::move(u_eq)),
      exact_(std::move(exact_linearization)) {
  if (n_ < 1 || m_ < 1) {
    throw Error(ErrorCode::kInvalidInput, "plant dimensions must be positive");
  }
  if (!step_) {
    throw Error(ErrorCode::kInvalidInput, "plant needs a step function");
  }
  if (x_eq_.size() != n_ || u_eq_.size() != m_) {
    throw Error(ErrorCode::kInvalidInput, "equilibrium has wrong dimensions");
  }
  if (exact_ && (exact_->A.rows() != n_ || exact_->A.cols() != n_ ||
                 exact_->B.rows() != n_ || exact_->B.cols() != m_)) {
    throw Error(ErrorCode::kInvalidInput,
                "exact linearization has wrong dimensions");
  }
  const Vector next = step_(x_eq_, u_eq_);
  if ((next - x_eq_).cwiseAbs().maxCoeff() > kFixedPointTol) {
    throw Error(ErrorCode::kInvalidInput,
                "plant '" + name_ + "': equilibrium is not a fixed point");
  }
}

Vector PlantModel::step(const Vector& x, const Vector& u) const {
  if (x.size() != n_ || u.size() != m_) {
    throw Error(ErrorCode::kInvalidInput, "plant step: dimension mismatch");
  }
  return step_(x, u);
}

Vector PlantModel::deviation_step(const Vector& dx, const Vector& du) const {
  return step(x_eq_ + dx, u_eq_ + du) - x_eq_;
}

PlantModel make_scalar_quadratic() {
  auto f = [](const Vector& x, const Vector& u) {
    Vector next(1);
    next(0) = x(0) * x(0) + u(0);
    return next;
  };
  LinearizationPair lin{Matrix::Zero(1, 1), Matrix::Ones(1, 1)};
  return PlantModel("scalar_quadratic", 1, 1, f, Vector::Zero(1),
                    Vector::Zero(1), lin);
}

PlantModel make_pendulum(const PendulumParams& p) {
  if (!(p.dt > 0 && p.mass > 0 && p.length > 0 && p.gravity >= 0 &&
        p.friction >= 0)) {
    throw Error(ErrorCode::kInvalidInput, "pendulum parameters out of range");
  }
  const double inertia = p.mass * p.length * p.length;
  const double gain = p.dt * p.gravity / p.length;
  const double damping = 1.0 - p.dt * p.friction / inertia;
  const double input_gain = p.dt / inertia;
  auto f = [=](const Vector& x, const Vector& u) {
    Vector next(2);
    next(0) = x(0) + p.dt * x(1);
    next(1) = gain * std::sin(x(0)) + damping * x(1) + input_gain * u(0);
    return next;
  };
  Matrix A(2, 2);
  A << 1.0, p.dt, gain, damping;
  Matrix B(2, 1);
  B << 0.0, input_gain;
  return PlantModel("pendulum", 2, 1, f, Vector::Zero(2), Vector::Zero(1),
                    LinearizationPair{A, B});
}

PlantModel make_linear(const Matrix& A, const Matrix& B) {
  if (A.rows() != A.cols() || B.rows() != A.rows() || B.cols() < 1) {
    throw Error(ErrorCode::kInvalidInput, "linear plant: bad A/B shapes");
  }
  if (!A.allFinite() || !B.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "linear plant: non-finite A/B");
  }
  auto f = [A, B](const Vector& x, const Vector& u) -> Vector {
    return A * x + B * u;
  };
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  return PlantModel("linear", n, m, f, Vector::Zero(n), Vector::Zero(m),
                    LinearizationPair{A, B});
}

PlantModel plant_from_json(const nlohmann::json& config) {
  try {
    const std::string kind = config.at("kind").get<std::string>();
    const nlohmann::json params =
        config.contains("params") ? config.at("params") : nlohmann::json::object();
    if (kind == "pendulum") {
      PendulumParams p;
      p.dt = params.value("dt", p.dt);
      p.mass = params.value("mass", p.mass);
      p.length = params.value("length", p.length);
      p.friction = params.value("friction", p.friction);
      p.gravity = params.value("gravity", p.gravity);
      return make_pendulum(p);
    }
    if (kind == "scalar_quadratic") {
      return make_scalar_quadratic();
    }
    if (kind == "linear") {
      const auto& src = config.contains("A") ? config : params;
      const auto& ja = src.at("A");
      const auto& jb = src.at("B");
      const int n = src.contains("n") ? src.at("n").get<int>() : nested_rows(ja);
      Matrix A = matrix_from_json(ja, "A", n, n);
      const int m = src.contains("m") ? src.at("m").get<int>() : -1;
      Matrix B = matrix_from_json(jb, "B", static_cast<int>(A.rows()), m);
      return make_linear(A, B);
    }
    throw Error(ErrorCode::kInvalidInput, "unknown plant kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidInput,
                std::string("plant config: ") + e.what());
  }
}

PlantModel load_plant_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open plant config '" + path + "'");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIo,
                "cannot parse plant config '" + path + "': " + e.what());
  }
  return plant_from_json(j);
}

Trajectory simulate(const PlantModel& plant, const Vector& x0,
                    const Matrix& inputs) {
  const int n = plant.state_dim();
  if (x0.size() != n || inputs.rows() != plant.input_dim()) {
    throw Error(ErrorCode::kInvalidInput, "simulate: dimension mismatch");
  }
  if (!x0.allFinite() || !inputs.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "simulate: non-finite input data");
  }
  const auto T = inputs.cols();
  Matrix states(n, T + 1);
  states.col(0) = x0;
  for (Eigen::Index k = 0; k < T; ++k) {
    states.col(k + 1) = plant.step(states.col(k), inputs.col(k));
    if (!states.col(k + 1).allFinite()) {
      throw DivergenceError(static_cast<std::size_t>(k + 1),
                            "simulation diverged at step " +
                                std::to_string(k + 1));
    }
  }
  return Trajectory(std::move(states), inputs);
}

Trajectory simulate_deviation(const PlantModel& plant, const Vector& dx0,
                              const Matrix& du) {
  const Matrix u_abs = du.colwise() + plant.u_eq();
  Trajectory abs = simulate(plant, plant.x_eq() + dx0, u_abs);
  Matrix states = abs.states().colwise() - plant.x_eq();
  return Trajectory(std::move(states), du);
}

LinearizationPair finite_difference_jacobian(const PlantModel& plant) {
  const int n = plant.state_dim();
  const int m = plant.input_dim();
  const Vector& xe = plant.x_eq();
  const Vector& ue = plant.u_eq();
  const double hx = 1e-5 * std::max(1.0, xe.norm());
  const double hu = 1e-5 * std::max(1.0, ue.norm());
  LinearizationPair lin{Matrix(n, n), Matrix(n, m)};
  for (int j = 0; j < n; ++j) {
    Vector xp = xe, xm = xe;
    xp(j) += hx;
    xm(j) -= hx;
    lin.A.col(j) = (plant.step(xp, ue) - plant.step(xm, ue)) / (2.0 * hx);
  }
  for (int j = 0; j < m; ++j) {
    Vector up = ue, um = ue;
    up(j) += hu;
    um(j) -= hu;
    lin.B.col(j) = (plant.step(xe, up) - plant.step(xe, um)) / (2.0 * hu);
  }
  return lin;
}

LinearizationPair linearize(const PlantModel& plant) {
  if (plant.exact_linearization()) return *plant.exact_linearization();
  return finite_difference_jacobian(plant);
}

DataMatrices remainder_sequence(const PlantModel& plant,
                                const Trajectory& deviation_traj) {
  if (deviation_traj.state_dim() != plant.state_dim() ||
      deviation_traj.input_dim() != plant.input_dim()) {
    throw Error(ErrorCode::kInvalidInput,
                "remainder_sequence: trajectory does not match the plant");
  }
  const LinearizationPair lin = linearize(plant);
  DataMatrices dm = build_data_matrices(deviation_traj);
  dm.D0 = dm.X1 - lin.A * dm.X0 - lin.B * dm.U0;
  return dm;
}

}  // namespace ddstab
