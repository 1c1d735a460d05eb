#pragma once

#include <cstdint>
#include <optional>

#include <nlohmann/json.hpp>

#include "ddstab/datamat.hpp"
#include "ddstab/plant.hpp"

namespace ddstab {

inline constexpr int kDefaultHorizon = 9;
inline constexpr double kDefaultAmplitude = 5.0;
inline constexpr int kMaxExcitationRetries = 10;

/// An open-loop experiment in deviation coordinates. `inputs` is m x T.
struct ExperimentSpec {
  Vector x0;
  Matrix inputs;
  double epsilon = 1.0;
  std::optional<std::uint64_t> seed;

  int horizon() const { return static_cast<int>(inputs.cols()); }
};

/// Throws Error(kInvalidInput) if the spec is malformed.
void validate(const ExperimentSpec& spec);

/// Smallest horizon for which an m-dimensional input can be persistently
/// exciting of order n+1.
int min_pe_horizon(int m, int n);

/// Seeded uniform samples on [-amplitude, amplitude], redrawn until the
/// Hankel matrix of order n+1 has full row rank. Throws
/// Error(kExcitationFailure) after kMaxExcitationRetries draws.
Matrix generate_pe_input(int m, int n, int T, double amplitude,
                         std::uint64_t seed);

/// x0 = u(0) = theta, u(1) = theta + theta^2, u(2) = u(1) + u(1)^2. On the
/// scalar quadratic plant this yields [U0; X0] with two equal rows.
ExperimentSpec adversarial_theta_input(double theta);

/// (eps * x0, eps * u), accumulating eps into the spec's epsilon field.
ExperimentSpec scale_experiment(const ExperimentSpec& spec, double epsilon);

/// Experiment starting at the equilibrium with a verified PE input.
ExperimentSpec make_pe_experiment(const PlantModel& plant, int T,
                                  double amplitude, std::uint64_t seed);

struct ExperimentRun {
  Trajectory trajectory;
  DataMatrices data;  // D0 filled when run in oracle mode
  /// Same experiment replayed on the linearized plant (oracle mode only).
  std::optional<DataMatrices> linearized;
};

ExperimentRun run_experiment(const PlantModel& plant,
                             const ExperimentSpec& spec, bool oracle);

nlohmann::json to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_from_json(const nlohmann::json& j);

}  // namespace ddstab
