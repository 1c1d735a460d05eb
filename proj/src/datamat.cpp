#include "ddstab/datamat.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "ddstab/errors.hpp"

namespace ddstab {
namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::kInvalidInput,
                std::string(what) + " contains non-finite entries");
  }
}

Vector singular_values_of(const Matrix& m) {
  // JacobiSVD returns singular values sorted in decreasing order.
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

}  // namespace

Trajectory::Trajectory(Matrix states, Matrix inputs)
    : states_(std::move(states)), inputs_(std::move(inputs)) {
  if (states_.rows() < 1 || inputs_.rows() < 1) {
    throw Error(ErrorCode::kInvalidInput,
                "trajectory dimensions must be positive");
  }
  if (inputs_.cols() < 1) {
    throw Error(ErrorCode::kInvalidInput, "trajectory horizon must be >= 1");
  }
  if (states_.cols() != inputs_.cols() + 1) {
    throw Error(ErrorCode::kInvalidInput,
                "trajectory needs T+1 states for T inputs, got " +
                    std::to_string(states_.cols()) + " states and " +
                    std::to_string(inputs_.cols()) + " inputs");
  }
  require_finite(states_, "trajectory states");
  require_finite(inputs_, "trajectory inputs");
}

Trajectory Trajectory::from_sequences(const std::vector<Vector>& states,
                                      const std::vector<Vector>& inputs) {
  if (states.empty() || inputs.empty()) {
    throw Error(ErrorCode::kInvalidInput, "empty trajectory");
  }
  const auto n = states.front().size();
  const auto m = inputs.front().size();
  Matrix xs(n, static_cast<Eigen::Index>(states.size()));
  Matrix us(m, static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (states[k].size() != n) {
      throw Error(ErrorCode::kInvalidInput,
                  "state " + std::to_string(k) + " has wrong dimension");
    }
    xs.col(static_cast<Eigen::Index>(k)) = states[k];
  }
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (inputs[k].size() != m) {
      throw Error(ErrorCode::kInvalidInput,
                  "input " + std::to_string(k) + " has wrong dimension");
    }
    us.col(static_cast<Eigen::Index>(k)) = inputs[k];
  }
  return Trajectory(std::move(xs), std::move(us));
}

Matrix DataMatrices::stacked() const {
  Matrix out(U0.rows() + X0.rows(), X0.cols());
  out << U0, X0;
  return out;
}

DataMatrices build_data_matrices(const Trajectory& traj) {
  const int T = traj.horizon();
  DataMatrices dm;
  dm.U0 = traj.inputs();
  dm.X0 = traj.states().leftCols(T);
  dm.X1 = traj.states().rightCols(T);
  return dm;
}

Matrix hankel_matrix(const Matrix& signal, int order) {
  const auto dim = signal.rows();
  const auto len = signal.cols();
  if (order < 1) {
    throw Error(ErrorCode::kInvalidOrder, "Hankel order must be positive");
  }
  if (len < order) {
    throw Error(ErrorCode::kInvalidOrder,
                "signal length " + std::to_string(len) +
                    " is shorter than Hankel order " + std::to_string(order));
  }
  const auto cols = len - order + 1;
  Matrix h(dim * order, cols);
  for (int i = 0; i < order; ++i) {
    h.middleRows(i * dim, dim) = signal.middleCols(i, cols);
  }
  return h;
}

RankReport numerical_rank(const Matrix& m, double rel_tol) {
  if (m.size() == 0) {
    throw Error(ErrorCode::kInvalidInput, "rank of an empty matrix");
  }
  if (!(rel_tol > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "rank tolerance must be positive");
  }
  require_finite(m, "matrix");

  RankReport report;
  report.rows = static_cast<int>(m.rows());
  report.cols = static_cast<int>(m.cols());
  report.singular_values = singular_values_of(m);
  const double sigma1 =
      report.singular_values.size() > 0 ? report.singular_values(0) : 0.0;
  report.tolerance =
      rel_tol * std::max(sigma1, std::numeric_limits<double>::epsilon());
  for (Eigen::Index i = 0; i < report.singular_values.size(); ++i) {
    if (report.singular_values(i) > report.tolerance) {
      ++report.rank;
      report.min_nonzero_sv = report.singular_values(i);
    }
  }
  return report;
}

double min_singular_value(const Matrix& m) {
  if (m.size() == 0) {
    throw Error(ErrorCode::kInvalidInput,
                "singular values of an empty matrix");
  }
  require_finite(m, "matrix");
  const Vector sv = singular_values_of(m);
  return sv(sv.size() - 1);
}

ExcitationCheck is_persistently_exciting(const Matrix& signal, int order,
                                         double rel_tol) {
  ExcitationCheck check;
  check.hankel = numerical_rank(hankel_matrix(signal, order), rel_tol);
  check.persistently_exciting = check.hankel.full_row_rank();
  return check;
}

}  // namespace ddstab
