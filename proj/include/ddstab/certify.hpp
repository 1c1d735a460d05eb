#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ddstab/datamat.hpp"
#include "ddstab/plant.hpp"

namespace ddstab {

/// Outcome of the data-informativity checks. Oracle-only quantities stay
/// empty when D0 is unknown.
struct CertReport {
  bool assumption1_holds = false;
  RankReport rank_ux;
  RankReport rank_x1;
  double margin_ux = 0.0;  // smallest singular value of [U0; X0]
  double margin_x1 = 0.0;
  std::optional<double> gamma_min;
  std::optional<bool> gamma_condition_holds;
  std::vector<std::string> diagnostics;
};

CertReport check_assumption1(const DataMatrices& dm,
                             double rel_tol = kDefaultRankTol);

struct GammaMin {
  double value = 0.0;
  bool ridge_applied = false;
};

/// Smallest gamma >= 0 with D0 D0' <= gamma X1 X1', i.e. the largest
/// generalized eigenvalue of (D0 D0', X1 X1').
GammaMin compute_gamma_min(const DataMatrices& dm,
                           double rel_tol = kDefaultRankTol);
double gamma_min(const DataMatrices& dm);

double gamma_threshold(double alpha);

/// gamma < alpha^2 / (4 + 2 alpha).
bool check_gamma_condition(double gamma, double alpha);

/// Runs the rank checks and, when D0 is present, gamma_min and (given
/// alpha) the gamma condition.
CertReport certify(const DataMatrices& dm, std::optional<double> alpha = {},
                   double rel_tol = kDefaultRankTol);

/// Propagated remainders separating nonlinear data from the linearized
/// data: column k of Xi is sum_{i<k} A^(k-1-i) d(i), column k of Psi is
/// sum_{i<=k} A^(k-i) d(i).
struct XiPsi {
  Matrix Xi;
  Matrix Psi;
};

XiPsi build_xi_psi(const DataMatrices& dm, const LinearizationPair& lin);

struct XiMarginReport {
  bool holds = false;
  double spectral_norm = 0.0;
  double frobenius_norm = 0.0;
  double bound = 0.0;          // epsilon * lin_data_min_sv
  double ratio_to_eps = 0.0;   // spectral_norm / epsilon
};

/// Whether |Xi| < epsilon * lin_data_min_sv in the spectral norm.
XiMarginReport xi_margin_check(const XiPsi& xi, double lin_data_min_sv,
                               double epsilon);

nlohmann::json to_json(const RankReport& r);
nlohmann::json to_json(const CertReport& r);
nlohmann::json to_json(const XiMarginReport& r);

}  // namespace ddstab
