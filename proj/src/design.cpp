#include "ddstab/design.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "ddstab/errors.hpp"

namespace ddstab {
namespace {

double min_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double choose_scale(const DataMatrices& dm) {
  const double T = static_cast<double>(dm.horizon());
  const double s = std::max(dm.X0.norm(), dm.X1.norm()) / std::sqrt(T);
  return (s > 0.0 && std::isfinite(s)) ? s : 1.0;
}

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[c] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

DesignProblem build_design(const DataMatrices& dm) {
  const int n = dm.state_dim();
  const int T = dm.horizon();
  if (n < 1 || T < 1 || dm.X1.rows() != n || dm.X1.cols() != T ||
      dm.U0.cols() != T) {
    throw Error(ErrorCode::kInvalidInput, "design: data matrix shapes differ");
  }
  if (!dm.X0.allFinite() || !dm.X1.allFinite() || !dm.U0.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "design: non-finite data");
  }

  DesignProblem prob;
  prob.data = dm;
  prob.T = T;
  prob.n = n;
  prob.data_scale = choose_scale(dm);
  const Matrix X0 = dm.X0 / prob.data_scale;
  const Matrix X1 = dm.X1 / prob.data_scale;

  const int nvars = T * n + 1;
  prob.lmi = sdp::LmiProblem::with_shape({2 * n, T + n, 1}, nvars);
  auto& lmi = prob.lmi;
  const int a = prob.alpha_index();

  // Block 0: [X0 Q - alpha X1 X1', X1 Q; Q' X1', X0 Q].
  // Block 1: [I, Q; Q', X0 Q].
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < n; ++j) {
      const int v = prob.q_index(t, j);
      for (int i = 0; i < n; ++i) {
        // Q(t, j) puts X0(i, t) at (i, j) of X0 Q; the symmetric part
        // spreads half of it to (j, i).
        const double x0 = (i == j ? 1.0 : 0.5) * X0(i, t);
        lmi.add_symmetric_entry(v, 0, i, j, x0);
        lmi.add_symmetric_entry(v, 0, n + i, n + j, x0);
        lmi.add_symmetric_entry(v, 1, T + i, T + j, x0);
        lmi.add_symmetric_entry(v, 0, i, n + j, X1(i, t));
      }
      lmi.add_symmetric_entry(v, 1, t, T + j, 1.0);
    }
  }
  const Matrix gram = X1 * X1.transpose();
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) lmi.add_symmetric_entry(a, 0, i, j, -gram(i, j));
  }
  lmi.constant[1].topLeftCorner(T, T).setIdentity();
  lmi.add_symmetric_entry(a, 2, 0, 0, 1.0);
  lmi.constant[2](0, 0) = -kAlphaFloor;
  lmi.cost(a) = -1.0;

  // X0 Q symmetric: (X0 Q)(i, l) - (X0 Q)(l, i) = 0 for i < l.
  const int n_eq = n * (n - 1) / 2;
  lmi.eq_matrix = Matrix::Zero(n_eq, nvars);
  lmi.eq_rhs = Vector::Zero(n_eq);
  int row = 0;
  for (int i = 0; i < n; ++i) {
    for (int l = i + 1; l < n; ++l, ++row) {
      for (int t = 0; t < T; ++t) {
        lmi.eq_matrix(row, prob.q_index(t, l)) += X0(i, t);
        lmi.eq_matrix(row, prob.q_index(t, i)) -= X0(l, t);
      }
    }
  }
  return prob;
}

const char* to_string(DesignStatus s) {
  switch (s) {
    case DesignStatus::kOptimal:
      return "optimal";
    case DesignStatus::kInfeasible:
      return "infeasible";
    case DesignStatus::kNumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

DesignResult solve_design(const DesignProblem& prob,
                          sdp::SolverAdapter& adapter,
                          const sdp::SolverOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const sdp::SolverResult sol = adapter.solve(prob.lmi, options);
  DesignResult out;
  out.solve_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  out.solver_tolerance = sol.achieved_tolerance;
  out.solver_iterations = sol.iterations;
  out.message = sol.message;

  if (sol.y.size() != prob.lmi.num_variables()) {
    out.status = sol.status == sdp::SolverStatus::kInfeasible
                     ? DesignStatus::kInfeasible
                     : DesignStatus::kNumericalFailure;
    if (sol.status == sdp::SolverStatus::kOptimal) {
      out.message = "solver returned " + std::to_string(sol.y.size()) +
                    " values for " +
                    std::to_string(prob.lmi.num_variables()) + " variables";
    }
    return out;
  }

  Matrix Qn(prob.T, prob.n);
  for (int t = 0; t < prob.T; ++t) {
    for (int j = 0; j < prob.n; ++j) Qn(t, j) = sol.y(prob.q_index(t, j));
  }
  out.Q = prob.data_scale * Qn;
  out.alpha = sol.y(prob.alpha_index());
  const Matrix xq = prob.data.X0 * out.Q;
  out.xq_min_eig = min_eig(xq);

  switch (sol.status) {
    case sdp::SolverStatus::kInfeasible:
      out.status = DesignStatus::kInfeasible;
      return out;
    case sdp::SolverStatus::kNumericalFailure:
      out.status = DesignStatus::kNumericalFailure;
      return out;
    case sdp::SolverStatus::kOptimal:
      break;
  }
  try {
    out.K = extract_controller(prob.data, out.Q);
    out.status = DesignStatus::kOptimal;
  } catch (const ExtractionError& e) {
    out.status = DesignStatus::kNumericalFailure;
    out.message = std::string("degenerate optimum: ") + e.what();
  }
  return out;
}

DesignResult design_controller(const DataMatrices& dm,
                               const sdp::SolverOptions& options) {
  const DesignProblem prob = build_design(dm);
  sdp::InteriorPointSolver solver;
  return solve_design(prob, solver, options);
}

namespace {

// Returns X0 Q after checking it is safely invertible.
Matrix checked_xq(const DataMatrices& dm, const Matrix& Q) {
  if (Q.rows() != dm.horizon() || Q.cols() != dm.state_dim()) {
    throw Error(ErrorCode::kInvalidInput, "Q must be T x n");
  }
  const Matrix xq = dm.X0 * Q;
  Eigen::JacobiSVD<Matrix> svd(xq);
  const Vector& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smax > 0.0) || !(smin > kExtractionRelTol * smax)) {
    throw ExtractionError(smin, smax,
                          "X0*Q is singular or ill-conditioned (sigma_min=" +
                              std::to_string(smin) +
                              ", sigma_max=" + std::to_string(smax) + ")");
  }
  return xq;
}

}  // namespace

Matrix extract_controller(const DataMatrices& dm, const Matrix& Q) {
  const Matrix xq = checked_xq(dm, Q);
  // K (X0 Q) = U0 Q  =>  (X0 Q)' K' = (U0 Q)'
  return xq.transpose().partialPivLu().solve((dm.U0 * Q).transpose()).transpose();
}

Matrix closed_loop_matrix(const DataMatrices& dm, const Matrix& Q) {
  const Matrix xq = checked_xq(dm, Q);
  return xq.transpose().partialPivLu().solve((dm.X1 * Q).transpose()).transpose();
}

LmiCheck check_design_lmis(const DesignProblem& prob, const Matrix& Q,
                           double alpha) {
  const int n = prob.n;
  const int T = prob.T;
  const Matrix X0 = prob.data.X0 / prob.data_scale;
  const Matrix X1 = prob.data.X1 / prob.data_scale;
  const Matrix Qn = Q / prob.data_scale;
  const Matrix xq = X0 * Qn;
  const Matrix xq_sym = 0.5 * (xq + xq.transpose());

  LmiCheck c;
  c.xq_asymmetry = (xq - xq.transpose()).cwiseAbs().maxCoeff();
  c.xq_min_eig = min_eig(xq_sym);

  Matrix first(2 * n, 2 * n);
  first << xq_sym - alpha * X1 * X1.transpose(), X1 * Qn,
      (X1 * Qn).transpose(), xq_sym;
  c.first_block_min_eig = min_eig(first);

  Matrix second(T + n, T + n);
  second << Matrix::Identity(T, T), Qn, Qn.transpose(), xq_sym;
  c.second_block_min_eig = min_eig(second);

  Eigen::LDLT<Matrix> ldlt(xq_sym);
  const Matrix schur =
      Matrix::Identity(T, T) - Qn * ldlt.solve(Qn.transpose());
  c.schur_min_eig = min_eig(schur);
  return c;
}

nlohmann::json to_json(const DesignResult& r) {
  nlohmann::json j;
  j["K"] = r.K.size() ? matrix_json(r.K) : nlohmann::json(nullptr);
  j["alpha"] = r.alpha;
  j["status"] = to_string(r.status);
  j["xq_min_eig"] = r.xq_min_eig;
  j["solve_time_s"] = r.solve_time_s;
  j["solver_tolerance"] = r.solver_tolerance;
  j["message"] = r.message;
  return j;
}

}  // namespace ddstab
