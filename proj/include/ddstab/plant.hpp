#pragma once

#include <functional>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ddstab/datamat.hpp"

namespace ddstab {

struct LinearizationPair {
  Matrix A;
  Matrix B;
};

/// A discrete-time map x(k+1) = f(x(k), u(k)) with a known equilibrium.
/// Immutable after construction.
class PlantModel {
 public:
  using StepFn = std::function<Vector(const Vector&, const Vector&)>;

  /// Validates dimensions, that (x_eq, u_eq) is a fixed point to 1e-12,
  /// and that the exact linearization (if any) has the right shape.
  PlantModel(std::string name, int n, int m, StepFn step, Vector x_eq,
             Vector u_eq,
             std::optional<LinearizationPair> exact_linearization = {});

  const std::string& name() const { return name_; }
  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  const Vector& x_eq() const { return x_eq_; }
  const Vector& u_eq() const { return u_eq_; }
  const std::optional<LinearizationPair>& exact_linearization() const {
    return exact_;
  }

  /// Absolute coordinates.
  Vector step(const Vector& x, const Vector& u) const;

  /// Same map in deviation coordinates around (x_eq, u_eq).
  Vector deviation_step(const Vector& dx, const Vector& du) const;

 private:
  std::string name_;
  int n_;
  int m_;
  StepFn step_;
  Vector x_eq_;
  Vector u_eq_;
  std::optional<LinearizationPair> exact_;
};

/// Parameters of the Euler-discretized inverted pendulum. Defaults are
/// library choices, not measured values.
struct PendulumParams {
  double dt = 0.1;
  double mass = 1.0;
  double length = 1.0;
  double friction = 0.01;
  double gravity = 9.8;
};

/// x(k+1) = x(k)^2 + u(k), equilibrium (0, 0).
PlantModel make_scalar_quadratic();

/// Upright pendulum, state (angle, angular velocity), input torque.
PlantModel make_pendulum(const PendulumParams& params = {});

/// x(k+1) = A x(k) + B u(k).
PlantModel make_linear(const Matrix& A, const Matrix& B);

/// Builds a plant from {"kind": "...", "params": {...}} (pendulum) or
/// {"kind": "linear", "A": [...], "B": [...]} with row-major arrays.
PlantModel plant_from_json(const nlohmann::json& config);
PlantModel load_plant_config(const std::string& path);

/// Simulates in the plant's own (absolute) coordinates. `inputs` is m x T.
/// Throws DivergenceError at the first non-finite state.
Trajectory simulate(const PlantModel& plant, const Vector& x0,
                    const Matrix& inputs);

/// Simulates in deviation coordinates; x0 and inputs are offsets from the
/// equilibrium and so is the returned trajectory.
Trajectory simulate_deviation(const PlantModel& plant, const Vector& dx0,
                              const Matrix& du);

/// Exact Jacobians when the plant carries them, central finite
/// differences at the equilibrium otherwise.
LinearizationPair linearize(const PlantModel& plant);

/// Central finite differences with step 1e-5 * max(1, |x_eq|), regardless
/// of any exact linearization.
LinearizationPair finite_difference_jacobian(const PlantModel& plant);

/// Data matrices of a deviation-coordinate trajectory with D0 filled in:
/// column k of D0 is x(k+1) - A x(k) - B u(k).
DataMatrices remainder_sequence(const PlantModel& plant,
                                const Trajectory& deviation_traj);

}  // namespace ddstab
