#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace ddstab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative singular-value threshold used for every rank decision.
inline constexpr double kDefaultRankTol = 1e-9;

/// One experiment: states x(0..T) and inputs u(0..T-1), one column per
/// time step.
class Trajectory {
 public:
  /// Throws Error(kInvalidInput) unless states is n x (T+1), inputs is
  /// m x T with T >= 1, and every entry is finite.
  Trajectory(Matrix states, Matrix inputs);

  static Trajectory from_sequences(const std::vector<Vector>& states,
                                   const std::vector<Vector>& inputs);

  int state_dim() const { return static_cast<int>(states_.rows()); }
  int input_dim() const { return static_cast<int>(inputs_.rows()); }
  int horizon() const { return static_cast<int>(inputs_.cols()); }

  const Matrix& states() const { return states_; }
  const Matrix& inputs() const { return inputs_; }

 private:
  Matrix states_;
  Matrix inputs_;
};

/// U0 (m x T), X0 (n x T), X1 (n x T) and, in oracle mode, the remainder
/// matrix D0 (n x T). D0 is absent for data-only use.
struct DataMatrices {
  Matrix U0;
  Matrix X0;
  Matrix X1;
  std::optional<Matrix> D0;

  int state_dim() const { return static_cast<int>(X0.rows()); }
  int input_dim() const { return static_cast<int>(U0.rows()); }
  int horizon() const { return static_cast<int>(X0.cols()); }

  /// [U0; X0]
  Matrix stacked() const;
};

struct RankReport {
  int rows = 0;
  int cols = 0;
  Vector singular_values;  // descending
  int rank = 0;
  double tolerance = 0.0;  // absolute threshold actually applied
  double min_nonzero_sv = 0.0;

  bool full_row_rank() const { return rank == rows; }
  bool full_column_rank() const { return rank == cols; }
};

DataMatrices build_data_matrices(const Trajectory& traj);

/// Block-Hankel matrix with `order` block rows; block (i, j) is
/// signal column i + j. `signal` is dim x T.
Matrix hankel_matrix(const Matrix& signal, int order);

/// Counts singular values above rel_tol * max(sigma_1, machine epsilon).
RankReport numerical_rank(const Matrix& m, double rel_tol = kDefaultRankTol);

double min_singular_value(const Matrix& m);

struct ExcitationCheck {
  bool persistently_exciting = false;
  RankReport hankel;
};

ExcitationCheck is_persistently_exciting(const Matrix& signal, int order,
                                         double rel_tol = kDefaultRankTol);

}  // namespace ddstab
