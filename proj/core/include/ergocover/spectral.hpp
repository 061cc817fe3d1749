#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "ergocover/util.hpp"

namespace ergocover {

/// Graph Fourier basis: the S smallest eigenpairs of a graph Laplacian.
struct SpectralBasis {
  Eigen::MatrixXd eigvecs;        ///< N x S, columns orthonormal
  Eigen::VectorXd eigvals;        ///< S, ascending, >= 0
  Eigen::VectorXd lambda_weights; ///< frequency weights (1 + eigval)^-exponent

  int n_modes() const { return static_cast<int>(eigvals.size()); }
};

/// Raised by the iterative eigensolver when it cannot reach the requested
/// residual accuracy (and the problem is too large for the dense fallback).
class EigenSolveError : public Error {
 public:
  EigenSolveError(double residual, double tol);
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct SpectralOptions {
  double lambda_exponent = 2.0;
  double residual_tol = 1e-9;
  /// Problems up to this size may fall back to a dense eigensolve when the
  /// Lanczos iteration stalls.
  int dense_fallback_limit = 4096;
  std::uint64_t start_seed = 0x5eedball;
};

/// Computes the S smallest eigenpairs of a symmetric PSD Laplacian with
/// spectrum in [0, 2]. Small problems solve densely; larger ones run Lanczos
/// with full reorthogonalization on the complement operator 2I - L.
/// Eigenvector signs follow the first-nonzero-entry-positive convention.
SpectralBasis spectral_basis(const Eigen::SparseMatrix<double>& laplacian,
                             int n_modes,
                             const SpectralOptions& options = {});

}  // namespace ergocover
