#include "ddstab/certify.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "ddstab/errors.hpp"

namespace ddstab {
namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace

CertReport check_assumption1(const DataMatrices& dm, double rel_tol) {
  CertReport report;
  const Matrix ux = dm.stacked();
  report.rank_ux = numerical_rank(ux, rel_tol);
  report.rank_x1 = numerical_rank(dm.X1, rel_tol);
  report.margin_ux = min_singular_value(ux);
  report.margin_x1 = min_singular_value(dm.X1);
  // A wide matrix with more rows than columns cannot be full row rank; the
  // SVD only reports min(rows, cols) values, so check the count explicitly.
  report.assumption1_holds =
      report.rank_ux.full_row_rank() && report.rank_x1.full_row_rank();
  if (ux.rows() > ux.cols()) report.margin_ux = 0.0;
  if (dm.X1.rows() > dm.X1.cols()) report.margin_x1 = 0.0;
  if (!report.rank_ux.full_row_rank()) {
    report.diagnostics.push_back(
        "[U0;X0] has rank " + std::to_string(report.rank_ux.rank) + " < " +
        std::to_string(report.rank_ux.rows));
  }
  if (!report.rank_x1.full_row_rank()) {
    report.diagnostics.push_back(
        "X1 has rank " + std::to_string(report.rank_x1.rank) + " < " +
        std::to_string(report.rank_x1.rows));
  }
  return report;
}

GammaMin compute_gamma_min(const DataMatrices& dm, double rel_tol) {
  if (!dm.D0) {
    throw Error(ErrorCode::kOracleRequired,
                "gamma_min needs the remainder matrix D0 (oracle mode)");
  }
  const Matrix& D0 = *dm.D0;
  if (D0.rows() != dm.X1.rows() || D0.cols() != dm.X1.cols()) {
    throw Error(ErrorCode::kInvalidInput, "D0 and X1 shapes differ");
  }
  if (!numerical_rank(dm.X1, rel_tol).full_row_rank()) {
    throw Error(ErrorCode::kNoFiniteGamma,
                "X1 is row-rank deficient; no finite gamma exists");
  }
  GammaMin out;
  Matrix lhs = D0 * D0.transpose();
  Matrix rhs = dm.X1 * dm.X1.transpose();
  lhs = (0.5 * (lhs + lhs.transpose())).eval();
  rhs = (0.5 * (rhs + rhs.transpose())).eval();
  if (lhs.cwiseAbs().maxCoeff() == 0.0) return out;

  Eigen::LLT<Matrix> llt(rhs);
  const Vector diag = rhs.diagonal();
  const bool ill = llt.info() != Eigen::Success ||
                   llt.matrixL().toDenseMatrix().diagonal().minCoeff() <=
                       1e-7 * std::sqrt(diag.maxCoeff());
  if (ill) {
    rhs += 1e-12 * rhs.trace() * Matrix::Identity(rhs.rows(), rhs.cols());
    out.ridge_applied = true;
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(
      lhs, rhs, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (ges.info() != Eigen::Success) {
    throw Error(ErrorCode::kNoFiniteGamma,
                "generalized eigenproblem for gamma_min failed");
  }
  out.value = std::max(0.0, ges.eigenvalues().maxCoeff());
  return out;
}

double gamma_min(const DataMatrices& dm) { return compute_gamma_min(dm).value; }

double gamma_threshold(double alpha) {
  if (!(alpha > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "alpha must be positive");
  }
  return alpha * alpha / (4.0 + 2.0 * alpha);
}

bool check_gamma_condition(double gamma, double alpha) {
  if (!(gamma >= 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "gamma must be non-negative");
  }
  return gamma < gamma_threshold(alpha);
}

CertReport certify(const DataMatrices& dm, std::optional<double> alpha,
                   double rel_tol) {
  CertReport report = check_assumption1(dm, rel_tol);
  if (!dm.D0) {
    report.diagnostics.push_back("gamma unknown: no remainder oracle");
    return report;
  }
  if (!report.rank_x1.full_row_rank()) {
    report.diagnostics.push_back("gamma_min undefined: X1 rank deficient");
    return report;
  }
  const GammaMin g = compute_gamma_min(dm, rel_tol);
  report.gamma_min = g.value;
  if (g.ridge_applied) {
    report.diagnostics.push_back(
        "X1 X1' near singular; ridge 1e-12*trace added for gamma_min");
  }
  if (alpha && *alpha > 0.0) {
    report.gamma_condition_holds = check_gamma_condition(g.value, *alpha);
  }
  return report;
}

XiPsi build_xi_psi(const DataMatrices& dm, const LinearizationPair& lin) {
  if (!dm.D0) {
    throw Error(ErrorCode::kOracleRequired,
                "Xi/Psi need the remainder matrix D0 (oracle mode)");
  }
  const Matrix& D0 = *dm.D0;
  const auto n = dm.X0.rows();
  const auto T = dm.X0.cols();
  if (lin.A.rows() != n || lin.A.cols() != n || D0.rows() != n ||
      D0.cols() != T) {
    throw Error(ErrorCode::kInvalidInput, "Xi/Psi: dimension mismatch");
  }
  // Xi_0 = 0, Xi_{k+1} = A Xi_k + d(k), Psi_k = Xi_{k+1}.
  Matrix extended = Matrix::Zero(n, T + 1);
  for (Eigen::Index k = 0; k < T; ++k) {
    extended.col(k + 1) = lin.A * extended.col(k) + D0.col(k);
  }
  return XiPsi{extended.leftCols(T), extended.rightCols(T)};
}

XiMarginReport xi_margin_check(const XiPsi& xi, double lin_data_min_sv,
                               double epsilon) {
  XiMarginReport r;
  r.spectral_norm = spectral_norm(xi.Xi);
  r.frobenius_norm = xi.Xi.norm();
  r.bound = epsilon * lin_data_min_sv;
  r.ratio_to_eps = epsilon > 0.0 ? r.spectral_norm / epsilon : 0.0;
  r.holds = r.spectral_norm < r.bound;
  return r;
}

nlohmann::json to_json(const RankReport& r) {
  return {
      {"rows", r.rows},
      {"cols", r.cols},
      {"singular_values",
       std::vector<double>(r.singular_values.data(),
                           r.singular_values.data() + r.singular_values.size())},
      {"rank", r.rank},
      {"rank_tolerance", r.tolerance},
      {"min_nonzero_sv", r.min_nonzero_sv},
  };
}

nlohmann::json to_json(const CertReport& r) {
  nlohmann::json j{
      {"assumption1_holds", r.assumption1_holds},
      {"rank_UX", to_json(r.rank_ux)},
      {"rank_X1", to_json(r.rank_x1)},
      {"margin_UX", r.margin_ux},
      {"margin_X1", r.margin_x1},
      {"gamma_min", optional_json(r.gamma_min)},
      {"gamma_condition_holds",
       r.gamma_condition_holds ? nlohmann::json(*r.gamma_condition_holds)
                               : nlohmann::json(nullptr)},
      {"diagnostics", r.diagnostics},
  };
  return j;
}

nlohmann::json to_json(const XiMarginReport& r) {
  return {
      {"holds", r.holds},
      {"spectral_norm", r.spectral_norm},
      {"frobenius_norm", r.frobenius_norm},
      {"bound", r.bound},
      {"ratio_to_eps", r.ratio_to_eps},
  };
}

}  // namespace ddstab
