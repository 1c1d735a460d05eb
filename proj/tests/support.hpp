#pragma once

// Seeded generators and independent reference computations shared by the
// unit tests and the acceptance binary. Nothing here calls into the code it
// is used to check, except for building inputs.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "ddstab/datamat.hpp"
#include "ddstab/plant.hpp"

namespace ddstab::testkit {

using Rng = std::mt19937_64;

inline Matrix random_matrix(Rng& rng, int rows, int cols, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double spectral_radius(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Kalman rank test with a loose SVD threshold; generators redraw on failure.
inline bool controllable(const Matrix& A, const Matrix& B) {
  const auto n = A.rows();
  Matrix ctrb(n, n * B.cols());
  Matrix block = B;
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrb.middleCols(i * B.cols(), B.cols()) = block;
    block = A * block;
  }
  Eigen::JacobiSVD<Matrix> svd(ctrb);
  const auto& s = svd.singularValues();
  return s(s.size() - 1) > 1e-3 * s(0);
}

// Random controllable pair with open-loop spectral radius in [0.5, 1.3].
inline LinearizationPair random_controllable(Rng& rng, int n, int m) {
  for (;;) {
    Matrix A = random_matrix(rng, n, n);
    const double rho = spectral_radius(A);
    if (rho < 1e-3) continue;
    A *= uniform_real(rng, 0.5, 1.3) / rho;
    Matrix B = random_matrix(rng, n, m);
    if (controllable(A, B)) return {A, B};
  }
}

inline double min_eigenvalue(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (sym + sym.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Smallest gamma with gamma*G - H PSD, by bisection on an eigenvalue test.
inline double gamma_by_bisection(const Matrix& D0, const Matrix& X1) {
  const Matrix H = D0 * D0.transpose();
  const Matrix G = X1 * X1.transpose();
  auto psd = [&](double g) {
    const Matrix M = g * G - H;
    const double scale = g * G.norm() + H.norm();
    return min_eigenvalue(M) >= -1e-15 * scale;
  };
  if (psd(0.0)) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (!psd(hi)) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (psd(mid) ? hi : lo) = mid;
  }
  return hi;
}

// Xi column k = sum_{i<k} A^(k-1-i) d(i), summed term by term.
inline Matrix xi_by_sums(const Matrix& A, const Matrix& D0) {
  const auto n = D0.rows(), T = D0.cols();
  Matrix Xi = Matrix::Zero(n, T);
  for (Eigen::Index k = 0; k < T; ++k) {
    for (Eigen::Index i = 0; i < k; ++i) {
      Matrix P = Matrix::Identity(n, n);
      for (Eigen::Index p = 0; p < k - 1 - i; ++p) P = P * A;
      Xi.col(k) += P * D0.col(i);
    }
  }
  return Xi;
}

// Distance from M to the nearest matrix of lower rank, found as the best
// over random rank-deficient projections plus the SVD truncation.
struct RankDropOracle {
  double best_random = 0.0;
  double truncation = 0.0;
};

inline RankDropOracle rank_drop_oracle(const Matrix& M, Rng& rng,
                                       int samples = 2000) {
  const auto r = std::min(M.rows(), M.cols());
  RankDropOracle out;
  out.best_random = std::numeric_limits<double>::infinity();
  // Removing a unit direction v from the row space: Delta = -M v v'.
  for (int s = 0; s < samples; ++s) {
    Vector v = random_matrix(rng, static_cast<int>(M.cols()), 1).col(0);
    v.normalize();
    const Matrix delta = -M * v * v.transpose();
    Eigen::JacobiSVD<Matrix> svd(delta);
    out.best_random = std::min(out.best_random, svd.singularValues()(0));
  }
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector u = svd.matrixU().col(r - 1);
  const Vector v = svd.matrixV().col(r - 1);
  const Matrix delta = -svd.singularValues()(r - 1) * u * v.transpose();
  Eigen::JacobiSVD<Matrix> dsvd(delta);
  out.truncation = dsvd.singularValues()(0);
  // The truncated matrix must really have lost rank.
  Eigen::JacobiSVD<Matrix> check(M + delta);
  if (check.singularValues()(r - 1) > 1e-10 * svd.singularValues()(0)) {
    out.truncation = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace ddstab::testkit
