#include "ergocover/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace ergocover {

EigenSolveError::EigenSolveError(double residual, double tol)
    : Error("spectral_basis: eigensolver did not converge (residual " +
            std::to_string(residual) + " > tol " + std::to_string(tol) + ")"),
      residual_(residual) {}

namespace {

void fix_signs(Eigen::MatrixXd& vecs) {
  for (int j = 0; j < vecs.cols(); ++j) {
    const double scale = vecs.col(j).cwiseAbs().maxCoeff();
    for (int i = 0; i < vecs.rows(); ++i) {
      const double v = vecs(i, j);
      if (std::abs(v) > 1e-8 * scale) {
        if (v < 0.0) vecs.col(j) *= -1.0;
        break;
      }
    }
  }
}

Eigen::VectorXd frequency_weights(const Eigen::VectorXd& eigvals,
                                  double exponent) {
  return (1.0 + eigvals.array()).pow(-exponent).matrix();
}

SpectralBasis dense_solve(const Eigen::SparseMatrix<double>& laplacian,
                          int n_modes, const SpectralOptions& options) {
  const Eigen::MatrixXd dense(laplacian);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense);
  if (eig.info() != Eigen::Success)
    throw EigenSolveError(std::numeric_limits<double>::infinity(),
                          options.residual_tol);
  SpectralBasis basis;
  basis.eigvals = eig.eigenvalues().head(n_modes).cwiseMax(0.0);
  basis.eigvecs = eig.eigenvectors().leftCols(n_modes);
  fix_signs(basis.eigvecs);
  basis.lambda_weights =
      frequency_weights(basis.eigvals, options.lambda_exponent);
  return basis;
}

/// One non-restarted Lanczos pass with full reorthogonalization on the
/// operator B = 2I - L, whose largest eigenpairs are the smallest of L.
/// Returns false (with the worst residual) when accuracy is insufficient.
bool lanczos_pass(const Eigen::SparseMatrix<double>& laplacian, int n_modes,
                  int subspace, const SpectralOptions& options,
                  SpectralBasis& out, double& worst_residual) {
  const int n = static_cast<int>(laplacian.rows());
  subspace = std::min(subspace, n);

  Eigen::MatrixXd v(n, subspace);
  Eigen::VectorXd alpha(subspace), beta(subspace);

  Rng rng(options.start_seed);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w(i) = rng.normal();
  w.normalize();
  v.col(0) = w;

  double beta_prev = 0.0;
  for (int j = 0; j < subspace; ++j) {
    // w = B v_j = 2 v_j - L v_j
    w = 2.0 * v.col(j) - laplacian * v.col(j);
    if (j > 0) w -= beta_prev * v.col(j - 1);
    alpha(j) = v.col(j).dot(w);
    w -= alpha(j) * v.col(j);
    // Full reorthogonalization (twice is enough).
    for (int pass = 0; pass < 2; ++pass)
      w -= v.leftCols(j + 1) * (v.leftCols(j + 1).transpose() * w);
    beta_prev = w.norm();
    beta(j) = beta_prev;
    if (j + 1 < subspace) {
      if (beta_prev < 1e-13) {
        // Invariant subspace exhausted: restart with a fresh direction.
        Eigen::VectorXd fresh(n);
        for (int i = 0; i < n; ++i) fresh(i) = rng.normal();
        for (int pass = 0; pass < 2; ++pass)
          fresh -=
              v.leftCols(j + 1) * (v.leftCols(j + 1).transpose() * fresh);
        const double norm = fresh.norm();
        if (norm < 1e-13) return false;  // full space already spanned
        v.col(j + 1) = fresh / norm;
        beta_prev = 0.0;
      } else {
        v.col(j + 1) = w / beta_prev;
      }
    }
  }

  // Rayleigh-Ritz on the tridiagonal.
  Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(subspace, subspace);
  for (int j = 0; j < subspace; ++j) {
    tri(j, j) = alpha(j);
    if (j + 1 < subspace) {
      tri(j, j + 1) = beta(j);
      tri(j + 1, j) = beta(j);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(tri);
  if (eig.info() != Eigen::Success) return false;

  // Largest eigenvalues of B == smallest of L; columns come out ascending.
  Eigen::MatrixXd ritz(n, n_modes);
  Eigen::VectorXd vals(n_modes);
  for (int k = 0; k < n_modes; ++k) {
    const int src = subspace - 1 - k;
    vals(k) = 2.0 - eig.eigenvalues()(src);
    ritz.col(k) = v * eig.eigenvectors().col(src);
  }

  worst_residual = 0.0;
  for (int k = 0; k < n_modes; ++k) {
    ritz.col(k).normalize();
    const double res =
        (laplacian * ritz.col(k) - vals(k) * ritz.col(k)).norm();
    worst_residual = std::max(worst_residual, res);
  }
  if (worst_residual > options.residual_tol) return false;

  out.eigvals = vals.cwiseMax(0.0);
  out.eigvecs = std::move(ritz);
  fix_signs(out.eigvecs);
  out.lambda_weights = frequency_weights(out.eigvals, options.lambda_exponent);
  return true;
}

}  // namespace

SpectralBasis spectral_basis(const Eigen::SparseMatrix<double>& laplacian,
                             int n_modes, const SpectralOptions& options) {
  const int n = static_cast<int>(laplacian.rows());
  if (laplacian.rows() != laplacian.cols())
    throw Error("spectral_basis: matrix must be square");
  if (n_modes < 1 || n_modes >= n)
    throw Error("spectral_basis: need 1 <= n_modes < N (got n_modes=" +
                std::to_string(n_modes) + ", N=" + std::to_string(n) + ")");

  // Dense is both faster and exact for small problems.
  if (n <= 512 || n_modes > n / 4) return dense_solve(laplacian, n_modes, options);

  SpectralBasis basis;
  double worst = 0.0;
  int subspace = std::min(n, std::max(2 * n_modes + 40, 80));
  for (int attempt = 0; attempt < 3; ++attempt) {
    if (lanczos_pass(laplacian, n_modes, subspace, options, basis, worst))
      return basis;
    if (subspace >= n) break;
    subspace = std::min(n, subspace + subspace / 2);
  }
  if (n <= options.dense_fallback_limit)
    return dense_solve(laplacian, n_modes, options);
  throw EigenSolveError(worst, options.residual_tol);
}

}  // namespace ergocover
