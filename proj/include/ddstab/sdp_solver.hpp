#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ddstab/datamat.hpp"

namespace ddstab::sdp {

/// Linear-matrix-inequality program over a flat variable vector y:
///
///   minimize    cost' y
///   subject to  F0 + sum_i y_i F_i  >= 0   (block diagonal, PSD)
///               eq_matrix y = eq_rhs
///
/// coefficients[i][b] is F_i restricted to block b; an empty (0x0) matrix
/// stands for a zero block. All matrices must be symmetric.
struct LmiProblem {
  std::vector<int> block_sizes;
  std::vector<Matrix> constant;
  std::vector<std::vector<Matrix>> coefficients;
  Vector cost;
  Matrix eq_matrix;
  Vector eq_rhs;

  int num_variables() const { return static_cast<int>(cost.size()); }
  int num_blocks() const { return static_cast<int>(block_sizes.size()); }

  /// Allocates zero constants and empty coefficients for the given shape.
  static LmiProblem with_shape(std::vector<int> block_sizes, int num_vars);

  /// Adds `value` at (r, c) and (c, r) of coefficient (var, block).
  void add_symmetric_entry(int var, int block, int r, int c, double value);

  /// Throws Error(kInvalidInput) on inconsistent shapes or asymmetry.
  void validate() const;

  /// F0 + sum_i y_i F_i for one block.
  Matrix evaluate_block(const Vector& y, int block) const;
};

enum class SolverStatus { kOptimal, kInfeasible, kNumericalFailure };

const char* to_string(SolverStatus s);

struct SolverOptions {
  double tolerance = 1e-8;
  int max_iterations = 150;
  double step_fraction = 0.98;
};

struct SolverResult {
  SolverStatus status = SolverStatus::kNumericalFailure;
  Vector y;
  std::vector<Matrix> dual;  // Z per block
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double relative_gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  /// max of the three measures above when the solver stopped.
  double achieved_tolerance = 0.0;
  int iterations = 0;
  /// Z >= 0 with tr(F_i Z) = 0 and tr(F0 Z) = -1, when infeasibility was
  /// detected that way.
  std::optional<std::vector<Matrix>> infeasibility_certificate;
  std::string message;
};

/// Anything able to solve an LmiProblem. Instances may keep scratch state
/// and must not be shared between concurrent solves.
class SolverAdapter {
 public:
  virtual ~SolverAdapter() = default;
  virtual std::string name() const = 0;
  virtual SolverResult solve(const LmiProblem& problem,
                             const SolverOptions& options) = 0;
};

/// Infeasible-start primal-dual path following with the HKM direction and
/// Mehrotra predictor-corrector steps. Equality constraints are removed by
/// a null-space parameterization before iterating.
class InteriorPointSolver final : public SolverAdapter {
 public:
  std::string name() const override { return "ddstab-ipm"; }
  SolverResult solve(const LmiProblem& problem,
                     const SolverOptions& options) override;
};

std::unique_ptr<SolverAdapter> make_default_solver();

}  // namespace ddstab::sdp
