#include "ddstab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "ddstab/errors.hpp"

namespace ddstab {
namespace {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

std::string yes_no(bool v) { return v ? "YES" : "NO"; }

double spectral_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace

double spectral_radius_closed_loop(const LinearizationPair& lin,
                                   const Matrix& K) {
  if (K.rows() != lin.B.cols() || K.cols() != lin.A.rows()) {
    throw Error(ErrorCode::kInvalidInput, "K must be m x n");
  }
  const Matrix closed = lin.A + lin.B * K;
  Eigen::EigenSolver<Matrix> es(closed, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

StabilityReport simulate_closed_loop_stability(const PlantModel& plant,
                                               const Matrix& K, double radius,
                                               int n_trials, int horizon,
                                               std::uint64_t seed) {
  if (!(radius > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "stability radius must be positive");
  }
  const int n = plant.state_dim();
  if (K.rows() != plant.input_dim() || K.cols() != n) {
    throw Error(ErrorCode::kInvalidInput, "K must be m x n");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  StabilityReport report;
  report.stable = true;
  for (int trial = 0; trial < n_trials; ++trial) {
    Vector dir(n);
    for (int i = 0; i < n; ++i) dir(i) = gauss(rng);
    if (dir.norm() == 0.0) dir(0) = 1.0;
    const double r = radius * std::pow(unit(rng), 1.0 / n);
    Vector dx = r * dir.normalized();
    const double start = dx.norm();
    bool diverged = false;
    for (int k = 0; k < horizon; ++k) {
      dx = plant.deviation_step(dx, K * dx);
      if (!dx.allFinite() || dx.norm() > 1e12) {
        diverged = true;
        break;
      }
    }
    if (diverged) {
      ++report.diverged_trials;
      report.stable = false;
      report.worst_decay_ratio = std::numeric_limits<double>::infinity();
      continue;
    }
    const double ratio = start > 0.0 ? dx.norm() / start : 0.0;
    report.worst_decay_ratio = std::max(report.worst_decay_ratio, ratio);
    if (dx.norm() > 0.1 * start) report.stable = false;
  }
  return report;
}

bool SweepRow::stability_achieved() const {
  if (status != DesignStatus::kOptimal) return false;
  if (spectral_radius && !(*spectral_radius < 1.0)) return false;
  return sim_stable;
}

bool SweepRow::fully_certified() const {
  return assumption1 && gamma_condition.value_or(false) && stability_achieved();
}

SweepReference linearized_reference(const PlantModel& plant,
                                    const ExperimentSpec& base,
                                    const SweepOptions& options) {
  const LinearizationPair lin = linearize(plant);
  const PlantModel linear = make_linear(lin.A, lin.B);
  const ExperimentRun run = run_experiment(linear, base, false);
  const DesignResult res = design_controller(run.data, options.solver);
  if (res.status != DesignStatus::kOptimal) {
    throw Error(ErrorCode::kInsufficientData,
                std::string("design on linearized data failed: ") +
                    to_string(res.status) + " (" + res.message + ")");
  }
  return SweepReference{res.K, res.alpha};
}

SweepResult epsilon_sweep(const PlantModel& plant, const ExperimentSpec& base,
                          const std::vector<double>& eps_grid, bool oracle,
                          std::optional<SweepReference> reference,
                          const SweepOptions& options) {
  if (eps_grid.empty()) {
    throw Error(ErrorCode::kInvalidInput, "epsilon grid is empty");
  }
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    if (!(eps_grid[i] > 0.0) || !std::isfinite(eps_grid[i])) {
      throw Error(ErrorCode::kInvalidScale, "epsilon values must be positive");
    }
    if (i > 0 && !(eps_grid[i] < eps_grid[i - 1])) {
      throw Error(ErrorCode::kInvalidInput,
                  "epsilon grid must be strictly decreasing");
    }
  }
  validate(base);

  SweepResult result;
  result.heuristic = !oracle;
  if (!reference && oracle) {
    reference = linearized_reference(plant, base, options);
  }
  result.reference = reference;
  const std::optional<LinearizationPair> lin =
      oracle ? std::optional<LinearizationPair>(linearize(plant)) : std::nullopt;

  for (const double eps : eps_grid) {
    SweepRow row;
    row.epsilon = eps;
    try {
      const ExperimentSpec spec = scale_experiment(base, eps);
      const ExperimentRun run = run_experiment(plant, spec, oracle);
      const CertReport cert = certify(run.data, std::nullopt, options.rank_tol);
      row.assumption1 = cert.assumption1_holds;
      row.gamma_min = cert.gamma_min;
      if (oracle && run.linearized) {
        const XiPsi xp = build_xi_psi(run.data, *lin);
        const double lin_sv = min_singular_value(run.linearized->stacked()) / eps;
        row.xi_margin = xi_margin_check(xp, lin_sv, eps);
      }

      const DesignResult design = design_controller(run.data, options.solver);
      row.status = design.status;
      row.alpha = design.alpha;
      if (design.status != DesignStatus::kOptimal) {
        row.note = std::string("design ") + to_string(design.status) + ": " +
                   design.message;
      } else {
        row.K = design.K;
        if (row.gamma_min && design.alpha > 0.0) {
          row.gamma_condition = check_gamma_condition(*row.gamma_min, design.alpha);
        }
        if (lin) row.spectral_radius = spectral_radius_closed_loop(*lin, design.K);
        row.sim_stable =
            simulate_closed_loop_stability(plant, design.K, options.sim_radius,
                                           options.sim_trials,
                                           options.sim_horizon,
                                           options.sim_seed)
                .stable;
        if (reference) {
          row.K_dist = spectral_norm(design.K - reference->K);
          row.alpha_dist = std::abs(design.alpha - reference->alpha);
        }
      }
      if (!oracle) {
        row.note += row.note.empty() ? "" : "; ";
        row.note += "heuristic, gamma unknown";
      }
    } catch (const Error& e) {
      row.note = std::string(to_string(e.code())) + ": " + e.what();
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

ConvergenceVerdict alpha_convergence_diagnostic(const std::vector<SweepRow>& rows) {
  std::vector<double> xs, ys;
  for (const auto& row : rows) {
    if (row.alpha_dist && *row.alpha_dist > 0.0 && row.epsilon > 0.0) {
      xs.push_back(std::log(row.epsilon));
      ys.push_back(std::log(*row.alpha_dist));
    }
  }
  if (xs.size() < 3) {
    throw Error(ErrorCode::kInsufficientData,
                "alpha convergence needs at least 3 rows with alpha_dist > 0");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) {
    throw Error(ErrorCode::kInsufficientData,
                "alpha convergence needs distinct epsilon values");
  }
  ConvergenceVerdict v;
  v.slope = sxy / sxx;
  v.superlinear = v.slope > 1.0;
  return v;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "epsilon,K_dist,alpha_dist,stability_achieved,"
         "gamma_condition_fulfilled,alpha,gamma_min,spectral_radius\n";
  for (const auto& row : rows) {
    out << format_number(row.epsilon) << ',' << format_optional(row.K_dist)
        << ',' << format_optional(row.alpha_dist) << ','
        << yes_no(row.stability_achieved()) << ','
        << (row.gamma_condition ? yes_no(*row.gamma_condition) : std::string())
        << ','
        << (row.status == DesignStatus::kOptimal ? format_number(row.alpha)
                                                 : std::string())
        << ',' << format_optional(row.gamma_min) << ','
        << format_optional(row.spectral_radius) << '\n';
  }
  return out.str();
}

}  // namespace ddstab
