#include "ddstab/sdp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "ddstab/errors.hpp"

namespace ddstab::sdp {
namespace {

using Blocks = std::vector<Matrix>;

bool is_zero(const Matrix& m) { return m.size() == 0; }

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double frobenius(const Blocks& blocks) {
  double acc = 0.0;
  for (const auto& b : blocks) acc += b.squaredNorm();
  return std::sqrt(acc);
}

// tr(A B) for symmetric A.
double trace_product(const Matrix& a, const Matrix& b) {
  return a.cwiseProduct(b.transpose()).sum();
}

// Largest step t in (0, inf] with X + t D still positive semidefinite.
double max_step(const Matrix& x, const Matrix& d) {
  Eigen::LLT<Matrix> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  const Matrix linv_d =
      llt.matrixL().solve(llt.matrixL().solve(d).transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(linv_d), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

// The problem after equality elimination: y = y_p + N z.
struct Reduced {
  std::vector<int> sizes;
  Blocks constant;
  std::vector<Blocks> coeff;  // [var][block]
  Vector cost;
  double offset = 0.0;
  Vector y_particular;
  Matrix null_basis;

  int vars() const { return static_cast<int>(cost.size()); }
  int blocks() const { return static_cast<int>(sizes.size()); }
};

Reduced reduce(const LmiProblem& p) {
  Reduced r;
  r.sizes = p.block_sizes;
  const int nv = p.num_variables();
  if (p.eq_matrix.rows() == 0) {
    r.y_particular = Vector::Zero(nv);
    r.null_basis = Matrix::Identity(nv, nv);
  } else {
    Eigen::JacobiSVD<Matrix> svd(p.eq_matrix,
                                 Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double tol = std::max(p.eq_matrix.rows(), p.eq_matrix.cols()) *
                       std::numeric_limits<double>::epsilon() *
                       (sv.size() ? sv(0) : 0.0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > tol ? 1 : 0;
    svd.setThreshold(tol > 0 ? tol / std::max(sv(0), 1e-300) : 1e-15);
    r.y_particular = rank > 0 ? Vector(svd.solve(p.eq_rhs)) : Vector::Zero(nv);
    const double resid = (p.eq_matrix * r.y_particular - p.eq_rhs).norm();
    if (resid > 1e-9 * (1.0 + p.eq_rhs.norm())) {
      throw Error(ErrorCode::kInvalidInput, "inconsistent equality constraints");
    }
    r.null_basis = svd.matrixV().rightCols(nv - rank);
  }

  const int nz = static_cast<int>(r.null_basis.cols());
  const int nb = p.num_blocks();
  r.constant = p.constant;
  for (int i = 0; i < nv; ++i) {
    if (r.y_particular(i) == 0.0) continue;
    for (int b = 0; b < nb; ++b) {
      if (!is_zero(p.coefficients[i][b])) {
        r.constant[b] += r.y_particular(i) * p.coefficients[i][b];
      }
    }
  }
  r.coeff.assign(nz, Blocks(nb));
  const bool identity = p.eq_matrix.rows() == 0;
  for (int k = 0; k < nz; ++k) {
    for (int b = 0; b < nb; ++b) {
      if (identity) {
        r.coeff[k][b] = p.coefficients[k][b];
        continue;
      }
      Matrix acc;
      for (int i = 0; i < nv; ++i) {
        const double w = r.null_basis(i, k);
        if (w == 0.0 || is_zero(p.coefficients[i][b])) continue;
        if (acc.size() == 0) acc = Matrix::Zero(r.sizes[b], r.sizes[b]);
        acc += w * p.coefficients[i][b];
      }
      r.coeff[k][b] = std::move(acc);
    }
  }
  r.cost = r.null_basis.transpose() * p.cost;
  r.offset = p.cost.dot(r.y_particular);
  return r;
}

Blocks evaluate(const Reduced& r, const Vector& z) {
  Blocks out = r.constant;
  for (int k = 0; k < r.vars(); ++k) {
    if (z(k) == 0.0) continue;
    for (int b = 0; b < r.blocks(); ++b) {
      if (!is_zero(r.coeff[k][b])) out[b] += z(k) * r.coeff[k][b];
    }
  }
  return out;
}

Blocks apply_coefficients(const Reduced& r, const Vector& dz) {
  Blocks out(r.blocks());
  for (int b = 0; b < r.blocks(); ++b) {
    out[b] = Matrix::Zero(r.sizes[b], r.sizes[b]);
  }
  for (int k = 0; k < r.vars(); ++k) {
    for (int b = 0; b < r.blocks(); ++b) {
      if (!is_zero(r.coeff[k][b])) out[b] += dz(k) * r.coeff[k][b];
    }
  }
  return out;
}

// (A(W))_k = sum_b tr(F_k,b W_b)
Vector adjoint(const Reduced& r, const Blocks& w) {
  Vector out = Vector::Zero(r.vars());
  for (int k = 0; k < r.vars(); ++k) {
    for (int b = 0; b < r.blocks(); ++b) {
      if (!is_zero(r.coeff[k][b])) out(k) += trace_product(r.coeff[k][b], w[b]);
    }
  }
  return out;
}

struct Direction {
  Vector dz;
  Blocks dS;
  Blocks dZ;
};

// Solves (C^T C) x = v from the triangular factor of a QR of C.
class GramSolver {
 public:
  explicit GramSolver(const Matrix& c) {
    const Eigen::HouseholderQR<Matrix> qr(c);
    r_ = qr.matrixQR().topRows(c.cols()).triangularView<Eigen::Upper>();
    const double rmax = r_.diagonal().cwiseAbs().maxCoeff();
    ok_ = rmax > 0.0;
    // Tiny pivots get a ridge rather than a division by ~0.
    for (Eigen::Index i = 0; i < r_.rows() && ok_; ++i) {
      if (std::abs(r_(i, i)) < 1e-14 * rmax) {
        r_(i, i) = std::copysign(1e-14 * rmax, r_(i, i));
      }
    }
  }
  bool ok() const { return ok_; }
  Vector solve(const Vector& v) const {
    const Vector y = r_.transpose().triangularView<Eigen::Lower>().solve(v);
    return r_.triangularView<Eigen::Upper>().solve(y);
  }

 private:
  Matrix r_;
  bool ok_ = false;
};

}  // namespace

LmiProblem LmiProblem::with_shape(std::vector<int> sizes, int num_vars) {
  LmiProblem p;
  p.block_sizes = std::move(sizes);
  for (int s : p.block_sizes) p.constant.push_back(Matrix::Zero(s, s));
  p.coefficients.assign(num_vars, std::vector<Matrix>(p.block_sizes.size()));
  p.cost = Vector::Zero(num_vars);
  p.eq_matrix = Matrix::Zero(0, num_vars);
  p.eq_rhs = Vector::Zero(0);
  return p;
}

void LmiProblem::add_symmetric_entry(int var, int block, int r, int c,
                                     double value) {
  Matrix& m = coefficients.at(var).at(block);
  if (m.size() == 0) {
    m = Matrix::Zero(block_sizes[block], block_sizes[block]);
  }
  m(r, c) += value;
  if (r != c) m(c, r) += value;
}

void LmiProblem::validate() const {
  const auto nb = block_sizes.size();
  const auto nv = static_cast<std::size_t>(cost.size());
  if (nb == 0 || constant.size() != nb || coefficients.size() != nv) {
    throw Error(ErrorCode::kInvalidInput, "LMI problem: inconsistent sizes");
  }
  auto check_block = [&](const Matrix& m, std::size_t b) {
    if (m.rows() != block_sizes[b] || m.cols() != block_sizes[b]) {
      throw Error(ErrorCode::kInvalidInput, "LMI problem: block shape mismatch");
    }
    if (!m.allFinite()) {
      throw Error(ErrorCode::kInvalidInput, "LMI problem: non-finite data");
    }
    const double scale = 1.0 + m.cwiseAbs().maxCoeff();
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw Error(ErrorCode::kInvalidInput, "LMI problem: asymmetric block");
    }
  };
  for (std::size_t b = 0; b < nb; ++b) {
    if (block_sizes[b] < 1) {
      throw Error(ErrorCode::kInvalidInput, "LMI problem: empty block");
    }
    check_block(constant[b], b);
  }
  for (std::size_t i = 0; i < nv; ++i) {
    if (coefficients[i].size() != nb) {
      throw Error(ErrorCode::kInvalidInput, "LMI problem: coefficient blocks");
    }
    for (std::size_t b = 0; b < nb; ++b) {
      if (coefficients[i][b].size() != 0) check_block(coefficients[i][b], b);
    }
  }
  if (eq_matrix.cols() != static_cast<Eigen::Index>(nv) ||
      eq_matrix.rows() != eq_rhs.size()) {
    throw Error(ErrorCode::kInvalidInput, "LMI problem: equality shapes");
  }
  if (!cost.allFinite() || !eq_matrix.allFinite() || !eq_rhs.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "LMI problem: non-finite data");
  }
}

Matrix LmiProblem::evaluate_block(const Vector& y, int block) const {
  Matrix out = constant.at(block);
  for (int i = 0; i < num_variables(); ++i) {
    if (coefficients[i][block].size() != 0) out += y(i) * coefficients[i][block];
  }
  return out;
}

const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::kOptimal:
      return "optimal";
    case SolverStatus::kInfeasible:
      return "infeasible";
    case SolverStatus::kNumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

SolverResult InteriorPointSolver::solve(const LmiProblem& problem,
                                        const SolverOptions& options) {
  problem.validate();
  const Reduced r = reduce(problem);
  const int nb = r.blocks();
  const int nz = r.vars();
  int total_dim = 0;
  for (int s : r.sizes) total_dim += s;

  SolverResult result;
  auto finish = [&](const Vector& z, const Blocks& Z) {
    result.y = r.y_particular + r.null_basis * z;
    result.dual = Z;
    return result;
  };

  // Starting point: scaled identities, following common SDP practice.
  double max_coeff_norm = 0.0;
  double ratio = 0.0;
  for (int k = 0; k < nz; ++k) {
    double nk = 0.0;
    for (int b = 0; b < nb; ++b) {
      if (!is_zero(r.coeff[k][b])) nk += r.coeff[k][b].squaredNorm();
    }
    nk = std::sqrt(nk);
    max_coeff_norm = std::max(max_coeff_norm, nk);
    ratio = std::max(ratio, (1.0 + std::abs(r.cost(k))) / (1.0 + nk));
  }
  const double f0_norm = frobenius(r.constant);
  const double c_norm = r.cost.norm();
  const double root_dim = std::sqrt(static_cast<double>(total_dim));
  const double s_init =
      std::max({10.0, root_dim, f0_norm, max_coeff_norm});
  const double z_init = std::max({10.0, root_dim, total_dim * ratio});

  Vector z = Vector::Zero(nz);
  Blocks S(nb), Z(nb);
  for (int b = 0; b < nb; ++b) {
    S[b] = s_init * Matrix::Identity(r.sizes[b], r.sizes[b]);
    Z[b] = z_init * Matrix::Identity(r.sizes[b], r.sizes[b]);
  }

  int stalled = 0;
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    result.iterations = iter;
    const Blocks F = evaluate(r, z);
    Blocks Rp(nb);
    for (int b = 0; b < nb; ++b) Rp[b] = F[b] - S[b];
    const Vector rd = r.cost - adjoint(r, Z);
    double mu = 0.0;
    double tr_f0z = 0.0;
    for (int b = 0; b < nb; ++b) {
      mu += trace_product(S[b], Z[b]);
      tr_f0z += trace_product(r.constant[b], Z[b]);
    }
    const double complementarity = mu;
    mu /= total_dim;

    result.primal_objective = r.cost.dot(z) + r.offset;
    result.dual_objective = -tr_f0z + r.offset;
    const double denom =
        1.0 + std::abs(result.primal_objective) + std::abs(result.dual_objective);
    result.relative_gap =
        std::max(std::abs(result.primal_objective - result.dual_objective),
                 complementarity) /
        denom;
    result.primal_infeasibility = frobenius(Rp) / (1.0 + f0_norm);
    result.dual_infeasibility = rd.norm() / (1.0 + c_norm);
    result.achieved_tolerance =
        std::max({result.relative_gap, result.primal_infeasibility,
                  result.dual_infeasibility});
    if (result.achieved_tolerance < options.tolerance) {
      result.status = SolverStatus::kOptimal;
      result.message = "converged";
      return finish(z, Z);
    }

    // Primal infeasibility: Z grows along a ray with A(Z) -> 0 relative to
    // -tr(F0 Z).
    if (-tr_f0z > 0.0) {
      const double t = -tr_f0z;
      const Vector az = adjoint(r, Z);
      if (az.norm() / t < 1e-9 && t > 1e6) {
        Blocks cert(nb);
        for (int b = 0; b < nb; ++b) cert[b] = Z[b] / t;
        result.status = SolverStatus::kInfeasible;
        result.message = "primal infeasible (dual ray found)";
        result.infeasibility_certificate = cert;
        return finish(z, Z);
      }
    }
    if (z.norm() > 1e12 * (1.0 + c_norm)) {
      result.status = SolverStatus::kNumericalFailure;
      result.message = "objective unbounded";
      return finish(z, Z);
    }
    if (iter == options.max_iterations) break;

    // Per-block Cholesky factors of S.
    std::vector<Eigen::LLT<Matrix>> s_fact(nb);
    bool factor_ok = true;
    for (int b = 0; b < nb && factor_ok; ++b) {
      s_fact[b].compute(S[b]);
      factor_ok = s_fact[b].info() == Eigen::Success;
    }
    if (!factor_ok) {
      result.message = "slack lost positive definiteness";
      break;
    }

    // Schur complement M_ij = sum_b tr(F_i S^{-1} F_j Z) = <G_i, G_j> with
    // G_j = L_S^{-1} F_j L_Z. Factoring G by QR avoids squaring its condition.
    int gram_rows = 0;
    for (int b = 0; b < nb; ++b) gram_rows += r.sizes[b] * r.sizes[b];
    // H_j = L_Z^T F_j L_Z gives the dual metric tr(F_i Z F_j Z) = <H_i, H_j>.
    Matrix G = Matrix::Zero(gram_rows, nz);
    Matrix H = Matrix::Zero(gram_rows, nz);
    bool dual_ok = true;
    for (int b = 0, offset = 0; b < nb; offset += r.sizes[b] * r.sizes[b], ++b) {
      const Eigen::LLT<Matrix>& ls = s_fact[b];
      Eigen::LLT<Matrix> lz(Z[b]);
      if (lz.info() != Eigen::Success) {
        dual_ok = false;
        break;
      }
      const Matrix Lz = lz.matrixL();
      for (int j = 0; j < nz; ++j) {
        if (is_zero(r.coeff[j][b])) continue;
        const Matrix g = ls.matrixL().solve(r.coeff[j][b]) * Lz;
        G.col(j).segment(offset, g.size()) =
            Eigen::Map<const Vector>(g.data(), g.size());
        const Matrix h = Lz.transpose() * r.coeff[j][b] * Lz;
        H.col(j).segment(offset, h.size()) =
            Eigen::Map<const Vector>(h.data(), h.size());
      }
    }
    if (!dual_ok) {
      result.message = "dual slack lost positive definiteness";
      break;
    }
    const GramSolver schur(G);
    if (!schur.ok()) {
      result.message = "Schur complement not positive definite";
      break;
    }

    const GramSolver dual_metric(H);

    // Solves the Newton system S dZ + dS Z = Rc - S Z. The -S Z part is
    // applied as -Z exactly; going through S^{-1} loses cond(S) digits.
    auto direction = [&](const Blocks& Rc) {
      Direction d;
      Blocks W(nb);
      for (int b = 0; b < nb; ++b) {
        W[b] = s_fact[b].solve(Rc[b] - Rp[b] * Z[b]) - Z[b];
      }
      const Vector rhs = adjoint(r, W) - rd;
      d.dz = schur.solve(rhs);
      d.dS = apply_coefficients(r, d.dz);
      d.dZ.resize(nb);
      for (int b = 0; b < nb; ++b) {
        d.dS[b] += Rp[b];
        d.dZ[b] = sym(s_fact[b].solve(Rc[b] - d.dS[b] * Z[b])) - Z[b];
      }
      // M is nearly singular close to a non-unique optimum, so A*(dZ) = rd
      // can be badly off. Restore it in the metric of Z: dZ -= Z F(delta) Z.
      const Vector miss = adjoint(r, d.dZ) - rd;
      if (miss.allFinite() && miss.norm() > 0.0) {
        const Vector delta = dual_metric.solve(miss);
        if (delta.allFinite()) {
          const Blocks fd = apply_coefficients(r, delta);
          for (int b = 0; b < nb; ++b) d.dZ[b] -= sym(Z[b] * fd[b] * Z[b]);
        }
      }
      return d;
    };
    auto step_lengths = [&](const Direction& d, double fraction) {
      double ap = std::numeric_limits<double>::infinity();
      double ad = std::numeric_limits<double>::infinity();
      for (int b = 0; b < nb; ++b) {
        ap = std::min(ap, max_step(S[b], d.dS[b]));
        ad = std::min(ad, max_step(Z[b], d.dZ[b]));
      }
      return std::pair<double, double>{std::min(1.0, fraction * ap),
                                       std::min(1.0, fraction * ad)};
    };

    // Predictor.
    Blocks Rc(nb);
    for (int b = 0; b < nb; ++b) Rc[b] = Matrix::Zero(r.sizes[b], r.sizes[b]);
    const Direction pred = direction(Rc);
    const auto [ap_aff, ad_aff] = step_lengths(pred, 1.0);
    double mu_aff = 0.0;
    for (int b = 0; b < nb; ++b) {
      mu_aff += trace_product(S[b] + ap_aff * pred.dS[b],
                              Z[b] + ad_aff * pred.dZ[b]);
    }
    mu_aff /= total_dim;
    double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3.0);
    sigma = std::clamp(sigma, 0.0, 1.0);

    // Corrector.
    for (int b = 0; b < nb; ++b) {
      Rc[b] = sigma * mu * Matrix::Identity(r.sizes[b], r.sizes[b]) -
              pred.dS[b] * pred.dZ[b];
    }
    const Direction corr = direction(Rc);
    auto [ap, ad] = step_lengths(corr, options.step_fraction);

    // Rounding near the boundary can still leave an indefinite iterate.
    Blocks S_next(nb), Z_next(nb);
    for (int tries = 0;; ++tries) {
      bool ok = true;
      for (int b = 0; b < nb && ok; ++b) {
        S_next[b] = sym(S[b] + ap * corr.dS[b]);
        Z_next[b] = sym(Z[b] + ad * corr.dZ[b]);
        ok = Eigen::LLT<Matrix>(S_next[b]).info() == Eigen::Success &&
             Eigen::LLT<Matrix>(Z_next[b]).info() == Eigen::Success;
      }
      if (ok) break;
      if (tries == 30) {
        ap = 0.0;
        ad = 0.0;
        S_next = S;
        Z_next = Z;
        break;
      }
      ap *= 0.8;
      ad *= 0.8;
    }
    z += ap * corr.dz;
    S = std::move(S_next);
    Z = std::move(Z_next);
    if (ap < 1e-10 && ad < 1e-10) {
      if (++stalled >= 3) {
        result.message = "step length stalled";
        break;
      }
    } else {
      stalled = 0;
    }
  }

  result.status = SolverStatus::kNumericalFailure;
  if (result.message.empty()) result.message = "iteration limit reached";
  return finish(z, Z);
}

std::unique_ptr<SolverAdapter> make_default_solver() {
  return std::make_unique<InteriorPointSolver>();
}

}  // namespace ddstab::sdp
