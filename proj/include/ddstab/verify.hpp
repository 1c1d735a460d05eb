#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ddstab/certify.hpp"
#include "ddstab/design.hpp"
#include "ddstab/experiment.hpp"
#include "ddstab/plant.hpp"

namespace ddstab {

/// max |lambda(A + BK)|
double spectral_radius_closed_loop(const LinearizationPair& lin,
                                   const Matrix& K);

struct StabilityReport {
  bool stable = false;
  double worst_decay_ratio = 0.0;  // max over trials of |x(H)| / |x(0)|
  int diverged_trials = 0;
};

/// Samples initial states uniformly in the ball of `radius` around the
/// equilibrium and simulates u = u_eq + K (x - x_eq). Stable iff every
/// trial ends with |x(horizon) - x_eq| <= 0.1 |x(0) - x_eq|.
StabilityReport simulate_closed_loop_stability(const PlantModel& plant,
                                               const Matrix& K, double radius,
                                               int n_trials = 20,
                                               int horizon = 200,
                                               std::uint64_t seed = 0);

struct SweepReference {
  Matrix K;
  double alpha = 0.0;
};

struct SweepOptions {
  double rank_tol = kDefaultRankTol;
  sdp::SolverOptions solver;
  double sim_radius = 0.05;
  int sim_trials = 20;
  int sim_horizon = 200;
  std::uint64_t sim_seed = 7;
};

struct SweepRow {
  double epsilon = 0.0;
  DesignStatus status = DesignStatus::kNumericalFailure;
  double alpha = 0.0;
  Matrix K;
  std::optional<double> gamma_min;
  bool assumption1 = false;
  std::optional<bool> gamma_condition;
  std::optional<double> spectral_radius;
  bool sim_stable = false;
  std::optional<double> K_dist;
  std::optional<double> alpha_dist;
  std::optional<XiMarginReport> xi_margin;
  std::string note;

  /// Stability verdict: simulation, plus spectral radius < 1 when known.
  bool stability_achieved() const;
  /// Assumption 1, gamma condition and stability all confirmed.
  bool fully_certified() const;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<SweepReference> reference;
  bool heuristic = false;  // true when gamma could not be evaluated
};

/// Computes (K, alpha) for the unscaled base experiment replayed on the
/// linearized plant.
SweepReference linearized_reference(const PlantModel& plant,
                                    const ExperimentSpec& base,
                                    const SweepOptions& options = {});

/// Runs the epsilon-scaled experiments. Rows follow eps_grid order, which
/// must be strictly decreasing and positive. Failures inside a row are
/// recorded in that row's note.
SweepResult epsilon_sweep(const PlantModel& plant, const ExperimentSpec& base,
                          const std::vector<double>& eps_grid, bool oracle,
                          std::optional<SweepReference> reference = {},
                          const SweepOptions& options = {});

struct ConvergenceVerdict {
  bool superlinear = false;
  double slope = 0.0;
};

/// Least-squares slope of log(alpha_dist) against log(epsilon). Needs at
/// least three rows with a positive alpha_dist.
ConvergenceVerdict alpha_convergence_diagnostic(const std::vector<SweepRow>& rows);

/// Header plus one line per row, with a fixed number format.
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace ddstab
