#include "ddstab/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ddstab/certify.hpp"
#include "ddstab/csv_io.hpp"
#include "ddstab/design.hpp"
#include "ddstab/errors.hpp"
#include "ddstab/experiment.hpp"
#include "ddstab/verify.hpp"

namespace ddstab::cli {
namespace {

struct Options {
  std::string data;
  std::string plant;
  std::string out;
  int n = 0;
  int m = 0;
  int order = 0;
  std::vector<double> eps{1.0, 0.5, 0.1, 0.01};
  std::uint64_t seed = 42;
  int T = kDefaultHorizon;
  double amplitude = kDefaultAmplitude;
  double tol = kDefaultRankTol;
  std::optional<double> alpha;
  double theta = 0.1;
  std::string demo;
  bool oracle = false;
  bool data_only = false;
  bool strict = false;
  bool no_timestamp = false;
};

sdp::SolverOptions solver_options() {
  sdp::SolverOptions opts;
  if (const char* env = std::getenv("DDSTAB_SOLVER_TOL")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(v > 0.0)) {
      throw Error(ErrorCode::kInvalidInput,
                  std::string("DDSTAB_SOLVER_TOL is not a positive number: ") + env);
    }
    opts.tolerance = v;
  }
  return opts;
}

std::string timestamp_line() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << "# generated " << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << '\n';
  return s.str();
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
  } else {
    write_file_atomic(o.out, text);
  }
}

void validate_eps(const std::vector<double>& eps) {
  if (eps.empty()) throw Error(ErrorCode::kInvalidInput, "--eps is empty");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0)) {
      throw Error(ErrorCode::kInvalidScale, "--eps values must be positive");
    }
    if (i > 0 && !(eps[i] < eps[i - 1])) {
      throw Error(ErrorCode::kInvalidInput, "--eps must be strictly decreasing");
    }
  }
}

// Trajectory plus data matrices, with D0 when --oracle and --plant are set.
DataMatrices load_data(const Options& o, std::optional<PlantModel>& plant) {
  const Trajectory traj = read_trajectory_csv(o.data, o.n, o.m);
  if (!o.plant.empty()) plant = load_plant_config(o.plant);
  if (o.oracle) {
    if (!plant) {
      throw Error(ErrorCode::kOracleRequired, "--oracle needs --plant");
    }
    return remainder_sequence(*plant, traj);
  }
  return build_data_matrices(traj);
}

int cmd_pe_check(const Options& o, std::ostream& out) {
  const Matrix signal = read_signal_csv(o.data);
  int order = o.order;
  if (order <= 0) order = o.n > 0 ? o.n + 1 : 0;
  if (order <= 0) {
    throw Error(ErrorCode::kInvalidOrder, "pe-check needs --order or --n");
  }
  const ExcitationCheck check = is_persistently_exciting(signal, order, o.tol);
  nlohmann::json j{
      {"persistently_exciting", check.persistently_exciting},
      {"order", order},
      {"signal_dim", signal.rows()},
      {"length", signal.cols()},
      {"hankel", to_json(check.hankel)},
  };
  emit(o, j.dump(2) + "\n", out);
  return check.persistently_exciting ? kExitOk : kExitNotExciting;
}

int cmd_design(const Options& o, std::ostream& out, std::ostream& err) {
  std::optional<PlantModel> plant;
  const DataMatrices dm = load_data(o, plant);
  CertReport cert = check_assumption1(dm, o.tol);
  const DesignResult res = design_controller(dm, solver_options());
  if (dm.D0 && cert.rank_x1.full_row_rank()) {
    cert = certify(dm, res.alpha > 0.0 ? std::optional<double>(res.alpha)
                                       : std::nullopt,
                   o.tol);
  }
  nlohmann::json j{{"design", to_json(res)}, {"certificate", to_json(cert)}};
  if (res.status == DesignStatus::kOptimal && plant) {
    j["spectral_radius"] = spectral_radius_closed_loop(linearize(*plant), res.K);
  }
  const bool heuristic = !cert.gamma_condition_holds.has_value();
  j["verdict"] = heuristic ? "heuristic, gamma unknown" : "certified";
  emit(o, j.dump(2) + "\n", out);

  if (!cert.assumption1_holds) {
    err << "assumption 1 fails: data are not informative\n";
    return kExitDesignFailed;
  }
  if (res.status != DesignStatus::kOptimal) {
    err << "design " << to_string(res.status) << ": " << res.message << '\n';
    return kExitDesignFailed;
  }
  if (cert.gamma_condition_holds == false) {
    err << "gamma condition fails\n";
    return kExitDesignFailed;
  }
  if (o.strict && heuristic) {
    err << "--strict: gamma condition could not be evaluated\n";
    return kExitDesignFailed;
  }
  return kExitOk;
}

int cmd_certify(const Options& o, std::ostream& out, std::ostream& err) {
  std::optional<PlantModel> plant;
  const DataMatrices dm = load_data(o, plant);
  const CertReport cert = certify(dm, o.alpha, o.tol);
  nlohmann::json j = to_json(cert);
  if (dm.D0 && plant) {
    const XiPsi xp = build_xi_psi(dm, linearize(*plant));
    const Eigen::JacobiSVD<Matrix> svd(xp.Xi);
    j["xi_spectral_norm"] = svd.singularValues().size() > 0
                                ? svd.singularValues()(0)
                                : 0.0;
    j["xi_frobenius_norm"] = xp.Xi.norm();
  }
  emit(o, j.dump(2) + "\n", out);
  if (!cert.assumption1_holds) {
    err << "assumption 1 fails\n";
    return kExitDesignFailed;
  }
  if (cert.gamma_condition_holds == false) {
    err << "gamma condition fails\n";
    return kExitDesignFailed;
  }
  if (o.strict && !cert.gamma_condition_holds.has_value()) {
    err << "--strict: gamma condition could not be evaluated\n";
    return kExitDesignFailed;
  }
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  validate_eps(o.eps);
  const PlantModel plant = load_plant_config(o.plant);
  const ExperimentSpec base = make_pe_experiment(plant, o.T, o.amplitude, o.seed);
  SweepOptions sopts;
  sopts.rank_tol = o.tol;
  sopts.solver = solver_options();
  const bool oracle = !o.data_only;
  const SweepResult res = epsilon_sweep(plant, base, o.eps, oracle, {}, sopts);

  std::string text = o.no_timestamp ? std::string() : timestamp_line();
  text += sweep_to_csv(res.rows);
  emit(o, text, out);

  for (const auto& row : res.rows) {
    if (!row.note.empty()) err << "eps=" << row.epsilon << ": " << row.note << '\n';
  }
  const SweepRow& last = res.rows.back();
  if (res.heuristic) {
    if (o.strict) {
      err << "--strict: sweep verdict is heuristic (gamma unknown)\n";
      return kExitNotCertified;
    }
    return last.assumption1 && last.stability_achieved() ? kExitOk
                                                         : kExitNotCertified;
  }
  return last.fully_certified() ? kExitOk : kExitNotCertified;
}

std::string format_matrix(const Matrix& m) {
  std::ostringstream s;
  s << std::setprecision(8);
  const Eigen::IOFormat fmt(Eigen::StreamPrecision, 0, "  ", "\n", "    [", "]");
  s << m.format(fmt);
  return s.str();
}

int demo_scalar(const Options& o, std::ostream& out) {
  const PlantModel plant = make_scalar_quadratic();
  const ExperimentSpec spec = adversarial_theta_input(o.theta);
  const ExperimentRun run = run_experiment(plant, spec, true);
  out << "scalar plant x(k+1) = x(k)^2 + u(k), theta = " << o.theta << "\n";
  if (o.theta == 0.0) {
    out << "warning: theta = 0 gives all-zero data; every rank below is 0 "
           "(degenerate experiment)\n";
  }
  const Matrix ux = run.data.stacked();
  const Matrix ux_lin = run.linearized->stacked();
  const RankReport r = numerical_rank(ux, o.tol);
  const RankReport r_lin = numerical_rank(ux_lin, o.tol);
  out << "  [U0; X0] from the nonlinear plant:\n" << format_matrix(ux) << "\n"
      << "  rank " << r.rank << "\n"
      << "  [U0; X0] replayed on the linearization x(k+1) = u(k):\n"
      << format_matrix(ux_lin) << "\n"
      << "  rank " << r_lin.rank << "\n";
  const CertReport cert = check_assumption1(run.data, o.tol);
  out << "  assumption 1 on nonlinear data: "
      << (cert.assumption1_holds ? "holds" : "fails") << "\n";
  if (o.theta != 0.0) {
    const ExcitationCheck pe = is_persistently_exciting(spec.inputs, 2, o.tol);
    out << "  input persistently exciting of order 2: "
        << (pe.persistently_exciting ? "yes" : "no") << "\n";
  }
  return kExitOk;
}

int demo_pendulum(const Options& o, std::ostream& out) {
  const PlantModel plant = make_pendulum();
  const ExperimentSpec base = make_pe_experiment(plant, o.T, o.amplitude, o.seed);
  SweepOptions sopts;
  sopts.solver = solver_options();
  validate_eps(o.eps);
  const SweepResult res = epsilon_sweep(plant, base, o.eps, true, {}, sopts);
  const ExperimentRun run = run_experiment(plant, base, false);
  out << "inverted pendulum, T = " << o.T << ", amplitude = " << o.amplitude
      << ", seed = " << o.seed << "\n"
      << "  largest open-loop angle: "
      << run.trajectory.states().row(0).cwiseAbs().maxCoeff() << " rad\n"
      << "  linearized-data reference: alpha = " << res.reference->alpha
      << ", K = " << res.reference->K << "\n\n"
      << sweep_to_csv(res.rows) << "\n";
  const SweepRow& last = res.rows.back();
  if (last.status == DesignStatus::kOptimal) {
    out << "stabilizing K at eps = " << last.epsilon << ": " << last.K << "\n";
  }
  try {
    const ConvergenceVerdict v = alpha_convergence_diagnostic(res.rows);
    out << "alpha convergence slope " << v.slope
        << (v.superlinear ? " (superlinear)" : " (not superlinear)") << "\n";
  } catch (const Error&) {
  }
  return last.fully_certified() ? kExitOk : kExitNotCertified;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Data-driven stabilizing controller design from trajectory data"};
  app.require_subcommand(1);
  Options o;

  auto add_tol = [&](CLI::App* c) {
    c->add_option("--tol", o.tol, "relative rank tolerance")
        ->check(CLI::PositiveNumber);
  };
  auto add_out = [&](CLI::App* c) {
    c->add_option("--out", o.out, "output path (stdout if omitted)");
  };
  auto add_dims = [&](CLI::App* c) {
    c->add_option("--n", o.n, "state dimension")->check(CLI::PositiveNumber);
    c->add_option("--m", o.m, "input dimension")->check(CLI::PositiveNumber);
  };

  auto* pe = app.add_subcommand("pe-check", "persistency-of-excitation check");
  pe->add_option("--data", o.data, "input signal CSV")->required();
  pe->add_option("--order", o.order, "Hankel order (default n+1)")
      ->check(CLI::PositiveNumber);
  add_dims(pe);
  add_tol(pe);
  add_out(pe);

  auto* design = app.add_subcommand("design", "design a state-feedback gain");
  auto* certify_cmd = app.add_subcommand("certify", "check data assumptions");
  for (auto* c : {design, certify_cmd}) {
    c->add_option("--data", o.data, "trajectory CSV")->required();
    c->add_option("--plant", o.plant, "plant JSON (for --oracle)");
    c->add_flag("--oracle", o.oracle, "compute D0 from the plant model");
    c->add_flag("--strict", o.strict, "fail when gamma cannot be evaluated");
    add_dims(c);
    add_tol(c);
    add_out(c);
  }
  certify_cmd->add_option("--alpha", o.alpha, "alpha for the gamma condition");

  auto* sweep = app.add_subcommand("sweep", "epsilon-scaled experiment sweep");
  sweep->add_option("--plant", o.plant, "plant JSON")->required();
  sweep->add_option("--eps", o.eps, "comma-separated decreasing scales")
      ->delimiter(',');
  sweep->add_option("--seed", o.seed, "input seed");
  sweep->add_option("--T", o.T, "horizon")->check(CLI::PositiveNumber);
  sweep->add_option("--amplitude", o.amplitude, "input amplitude");
  sweep->add_flag("--oracle", o.oracle, "oracle mode (default)");
  sweep->add_flag("--data-only", o.data_only, "no remainder oracle");
  sweep->add_flag("--strict", o.strict, "fail on heuristic-only verdicts");
  sweep->add_flag("--no-timestamp", o.no_timestamp, "omit the timestamp line");
  add_tol(sweep);
  add_out(sweep);

  auto* demo = app.add_subcommand("demo", "worked examples");
  demo->add_option("name", o.demo, "scalar | pendulum")
      ->required()
      ->check(CLI::IsMember({"scalar", "pendulum"}));
  demo->add_option("--theta", o.theta, "scalar example parameter");
  demo->add_option("--seed", o.seed, "input seed");
  demo->add_option("--T", o.T, "horizon")->check(CLI::PositiveNumber);
  demo->add_option("--amplitude", o.amplitude, "input amplitude");
  demo->add_option("--eps", o.eps, "comma-separated decreasing scales")
      ->delimiter(',');
  add_tol(demo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitError;
  }

  try {
    if (*pe) return cmd_pe_check(o, out);
    if (*design) return cmd_design(o, out, err);
    if (*certify_cmd) return cmd_certify(o, out, err);
    if (*sweep) return cmd_sweep(o, out, err);
    if (*demo) return o.demo == "scalar" ? demo_scalar(o, out) : demo_pendulum(o, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace ddstab::cli
