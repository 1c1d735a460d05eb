#include "ddstab/experiment.hpp"

#include <cmath>
#include <random>
#include <string>

#include "ddstab/errors.hpp"

namespace ddstab {

void validate(const ExperimentSpec& spec) {
  if (spec.inputs.cols() < 1 || spec.inputs.rows() < 1) {
    throw Error(ErrorCode::kInvalidInput, "experiment needs at least one input");
  }
  if (spec.x0.size() < 1) {
    throw Error(ErrorCode::kInvalidInput, "experiment needs an initial state");
  }
  if (!(spec.epsilon > 0.0) || !std::isfinite(spec.epsilon)) {
    throw Error(ErrorCode::kInvalidScale, "experiment epsilon must be > 0");
  }
  if (!spec.x0.allFinite() || !spec.inputs.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "experiment has non-finite entries");
  }
}

int min_pe_horizon(int m, int n) { return (m + 1) * (n + 1) - 1; }

Matrix generate_pe_input(int m, int n, int T, double amplitude,
                         std::uint64_t seed) {
  if (m < 1 || n < 1) {
    throw Error(ErrorCode::kInvalidInput, "dimensions must be positive");
  }
  if (T < min_pe_horizon(m, n)) {
    throw Error(ErrorCode::kInvalidInput,
                "horizon " + std::to_string(T) + " is below the minimum " +
                    std::to_string(min_pe_horizon(m, n)) +
                    " for excitation of order n+1");
  }
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
    throw Error(ErrorCode::kInvalidInput, "amplitude must be finite and >= 0");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  Matrix u(m, T);
  for (int attempt = 0; attempt < kMaxExcitationRetries; ++attempt) {
    for (int k = 0; k < T; ++k) {
      for (int i = 0; i < m; ++i) u(i, k) = amplitude > 0.0 ? dist(rng) : 0.0;
    }
    if (is_persistently_exciting(u, n + 1).persistently_exciting) return u;
  }
  throw Error(ErrorCode::kExcitationFailure,
              "no persistently exciting input after " +
                  std::to_string(kMaxExcitationRetries) + " draws");
}

ExperimentSpec adversarial_theta_input(double theta) {
  if (!std::isfinite(theta)) {
    throw Error(ErrorCode::kInvalidInput, "theta must be finite");
  }
  const double u0 = theta;
  const double u1 = theta + theta * theta;
  const double u2 = u1 + u1 * u1;
  ExperimentSpec spec;
  spec.x0 = Vector::Constant(1, theta);
  spec.inputs.resize(1, 3);
  spec.inputs << u0, u1, u2;
  return spec;
}

ExperimentSpec scale_experiment(const ExperimentSpec& spec, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidScale,
                "scale factor must be positive, got " + std::to_string(epsilon));
  }
  ExperimentSpec out = spec;
  out.x0 = epsilon * spec.x0;
  out.inputs = epsilon * spec.inputs;
  out.epsilon = spec.epsilon * epsilon;
  return out;
}

ExperimentSpec make_pe_experiment(const PlantModel& plant, int T,
                                  double amplitude, std::uint64_t seed) {
  ExperimentSpec spec;
  spec.x0 = Vector::Zero(plant.state_dim());
  spec.inputs = generate_pe_input(plant.input_dim(), plant.state_dim(), T,
                                  amplitude, seed);
  spec.seed = seed;
  return spec;
}

ExperimentRun run_experiment(const PlantModel& plant,
                             const ExperimentSpec& spec, bool oracle) {
  validate(spec);
  if (spec.x0.size() != plant.state_dim() ||
      spec.inputs.rows() != plant.input_dim()) {
    throw Error(ErrorCode::kInvalidInput,
                "experiment dimensions do not match plant '" + plant.name() +
                    "'");
  }
  Trajectory traj = simulate_deviation(plant, spec.x0, spec.inputs);
  if (!oracle) {
    DataMatrices dm = build_data_matrices(traj);
    return ExperimentRun{std::move(traj), std::move(dm), std::nullopt};
  }
  DataMatrices dm = remainder_sequence(plant, traj);
  const LinearizationPair lin = linearize(plant);
  const PlantModel linear = make_linear(lin.A, lin.B);
  const Trajectory lin_traj = simulate(linear, spec.x0, spec.inputs);
  return ExperimentRun{std::move(traj), std::move(dm),
                       build_data_matrices(lin_traj)};
}

nlohmann::json to_json(const ExperimentSpec& spec) {
  nlohmann::json j;
  j["x0"] = std::vector<double>(spec.x0.data(), spec.x0.data() + spec.x0.size());
  nlohmann::json inputs = nlohmann::json::array();
  for (Eigen::Index k = 0; k < spec.inputs.cols(); ++k) {
    const Vector col = spec.inputs.col(k);
    inputs.push_back(std::vector<double>(col.data(), col.data() + col.size()));
  }
  j["inputs"] = inputs;
  j["epsilon"] = spec.epsilon;
  j["seed"] = spec.seed ? nlohmann::json(*spec.seed) : nlohmann::json(nullptr);
  return j;
}

ExperimentSpec experiment_from_json(const nlohmann::json& j) {
  try {
    ExperimentSpec spec;
    const auto x0 = j.at("x0").get<std::vector<double>>();
    spec.x0 = Eigen::Map<const Vector>(x0.data(),
                                       static_cast<Eigen::Index>(x0.size()));
    const auto& inputs = j.at("inputs");
    if (!inputs.is_array() || inputs.empty()) {
      throw Error(ErrorCode::kInvalidInput, "experiment inputs must be non-empty");
    }
    const std::size_t m =
        inputs.front().is_array() ? inputs.front().size() : 1;
    spec.inputs.resize(static_cast<Eigen::Index>(m),
                       static_cast<Eigen::Index>(inputs.size()));
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      const auto& uk = inputs[k];
      std::vector<double> vals = uk.is_array() ? uk.get<std::vector<double>>()
                                               : std::vector<double>{uk.get<double>()};
      if (vals.size() != m) {
        throw Error(ErrorCode::kInvalidInput,
                    "experiment input " + std::to_string(k) +
                        " has inconsistent dimension");
      }
      for (std::size_t i = 0; i < m; ++i) {
        spec.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            vals[i];
      }
    }
    spec.epsilon = j.value("epsilon", 1.0);
    if (j.contains("seed") && !j.at("seed").is_null()) {
      spec.seed = j.at("seed").get<std::uint64_t>();
    }
    validate(spec);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidInput,
                std::string("experiment spec: ") + e.what());
  }
}

}  // namespace ddstab
