#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "ddstab/datamat.hpp"
#include "ddstab/sdp_solver.hpp"

namespace ddstab {

inline constexpr double kAlphaFloor = 1e-12;
inline constexpr double kExtractionRelTol = 1e-9;

/// The controller-synthesis SDP built from one data set:
///
///   maximize alpha over (Q, alpha), Q in R^{T x n}, subject to
///     [ X0 Q - alpha X1 X1'   X1 Q ]
///     [ Q' X1'                X0 Q ]  >= 0,
///     [ I_T   Q   ]
///     [ Q'    X0 Q]  >= 0,
///     X0 Q = (X0 Q)',  alpha >= kAlphaFloor.
///
/// The LMI is assembled on data divided by `data_scale`; with X = s Xn the
/// substitution Q = s Qn maps feasible points one-to-one and leaves alpha
/// and K unchanged, so the solver always sees O(1) entries.
struct DesignProblem {
  DataMatrices data;
  int T = 0;
  int n = 0;
  double data_scale = 1.0;
  sdp::LmiProblem lmi;

  int q_index(int t, int j) const { return j * T + t; }
  int alpha_index() const { return T * n; }
  int first_block_size() const { return lmi.block_sizes.at(0); }
  int second_block_size() const { return lmi.block_sizes.at(1); }
};

DesignProblem build_design(const DataMatrices& dm);

enum class DesignStatus { kOptimal, kInfeasible, kNumericalFailure };

const char* to_string(DesignStatus s);

struct DesignResult {
  DesignStatus status = DesignStatus::kNumericalFailure;
  Matrix Q;      // T x n, in the units of the original data
  double alpha = 0.0;
  Matrix K;      // m x n; empty unless status is optimal
  double xq_min_eig = 0.0;
  double solve_time_s = 0.0;
  double solver_tolerance = 0.0;
  int solver_iterations = 0;
  std::string message;
};

DesignResult solve_design(const DesignProblem& prob,
                          sdp::SolverAdapter& adapter,
                          const sdp::SolverOptions& options = {});

/// Convenience: build, solve with the built-in interior-point solver.
DesignResult design_controller(const DataMatrices& dm,
                               const sdp::SolverOptions& options = {});

/// K = U0 Q (X0 Q)^{-1}. Throws ExtractionError when the smallest singular
/// value of X0 Q is at most kExtractionRelTol times the largest.
Matrix extract_controller(const DataMatrices& dm, const Matrix& Q);

/// X1 Q (X0 Q)^{-1}; equals A + BK for noise-free linear data.
Matrix closed_loop_matrix(const DataMatrices& dm, const Matrix& Q);

/// Smallest eigenvalues of both LMI blocks and of the Schur-complement
/// form I_T - Q (X0 Q)^{-1} Q', evaluated on the normalized data so the
/// numbers are comparable across data scales.
struct LmiCheck {
  double first_block_min_eig = 0.0;
  double second_block_min_eig = 0.0;
  double schur_min_eig = 0.0;
  double xq_min_eig = 0.0;
  double xq_asymmetry = 0.0;
};

LmiCheck check_design_lmis(const DesignProblem& prob, const Matrix& Q,
                           double alpha);

nlohmann::json to_json(const DesignResult& r);

}  // namespace ddstab
