#pragma once

#include <Eigen/Core>

namespace nes {

/// Symmetric d x d matrix. Construction symmetrizes the input as
/// (S + S^T)/2 to absorb round-off from upstream gradient assembly, and
/// rejects non-finite entries.
class SymMatrix {
 public:
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix Zero(int d);
  static SymMatrix Identity(int d);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& entries() const { return m_; }

 private:
  Eigen::MatrixXd m_;
};

/// Symmetric positive definite matrix. Construction symmetrizes and verifies
/// positive eigenvalues.
class SpdMatrix {
 public:
  explicit SpdMatrix(const Eigen::MatrixXd& m);

  static SpdMatrix Identity(int d);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& entries() const { return m_; }

 private:
  friend SpdMatrix sym_exp(const SymMatrix&);
  friend SpdMatrix sym_pow(const SpdMatrix&, double);
  struct trusted_tag {};
  SpdMatrix(const Eigen::MatrixXd& m, trusted_tag) : m_(m) {}

  Eigen::MatrixXd m_;
};

struct SymEigen {
  Eigen::MatrixXd vectors;  ///< orthogonal, columns are eigenvectors
  Eigen::VectorXd values;   ///< matching eigenvalues; order unspecified
};

/// Eigendecomposition with a symmetric-specific solver (real eigenvalues
/// guaranteed). Callers must not depend on eigenvalue order.
/// Reconstruction U diag(lam) U^T holds to 1e-10 * ||S||.
SymEigen sym_eigen(const SymMatrix& s);

/// Matrix exponential via eigendecomposition: element-wise exponential of the
/// eigenvalues. The result is SPD for every symmetric input; exponentials that
/// underflow are clamped to the smallest normal double so positivity survives
/// arbitrarily large steps.
SpdMatrix sym_exp(const SymMatrix& m);

/// Inverse of sym_exp. Throws std::domain_error on a non-positive eigenvalue.
SymMatrix sym_log(const SpdMatrix& p);

/// P^c = exp(c log P), e.g. the unique SPD square root at c = 1/2.
SpdMatrix sym_pow(const SpdMatrix& p, double c);

}  // namespace nes
