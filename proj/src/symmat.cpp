#include "nes/symmat.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace nes {

namespace {

void require_square_finite(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw std::invalid_argument(std::string(what) + ": matrix must be square");
  }
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite entries");
  }
}

}  // namespace

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  require_square_finite(m, "SymMatrix");
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::Zero(int d) {
  return SymMatrix(Eigen::MatrixXd::Zero(d, d));
}

SymMatrix SymMatrix::Identity(int d) {
  return SymMatrix(Eigen::MatrixXd::Identity(d, d));
}

SpdMatrix::SpdMatrix(const Eigen::MatrixXd& m) {
  require_square_finite(m, "SpdMatrix");
  m_ = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m_);
  if (solver.info() != Eigen::Success || solver.eigenvalues().minCoeff() <= 0.0) {
    throw std::domain_error("SpdMatrix: matrix is not positive definite");
  }
}

SpdMatrix SpdMatrix::Identity(int d) {
  return SpdMatrix(Eigen::MatrixXd::Identity(d, d), trusted_tag{});
}

SymEigen sym_eigen(const SymMatrix& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.entries());
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("sym_eigen: eigendecomposition failed");
  }
  return {solver.eigenvectors(), solver.eigenvalues()};
}

SpdMatrix sym_exp(const SymMatrix& m) {
  const SymEigen eig = sym_eigen(m);
  Eigen::VectorXd lam = eig.values.array().exp();
  const double floor = std::numeric_limits<double>::min();
  for (int i = 0; i < lam.size(); ++i) lam[i] = std::max(lam[i], floor);
  Eigen::MatrixXd result =
      eig.vectors * lam.asDiagonal() * eig.vectors.transpose();
  result = 0.5 * (result + result.transpose());
  return SpdMatrix(result, SpdMatrix::trusted_tag{});
}

SymMatrix sym_log(const SpdMatrix& p) {
  const SymEigen eig = sym_eigen(SymMatrix(p.entries()));
  if (eig.values.minCoeff() <= 0.0) {
    throw std::domain_error("sym_log: non-positive eigenvalue");
  }
  const Eigen::VectorXd lam = eig.values.array().log();
  return SymMatrix(eig.vectors * lam.asDiagonal() * eig.vectors.transpose());
}

SpdMatrix sym_pow(const SpdMatrix& p, double c) {
  const SymEigen eig = sym_eigen(SymMatrix(p.entries()));
  if (eig.values.minCoeff() <= 0.0) {
    throw std::domain_error("sym_pow: non-positive eigenvalue");
  }
  Eigen::VectorXd lam(eig.values.size());
  const double floor = std::numeric_limits<double>::min();
  for (int i = 0; i < lam.size(); ++i) {
    lam[i] = std::max(std::pow(eig.values[i], c), floor);
  }
  Eigen::MatrixXd result =
      eig.vectors * lam.asDiagonal() * eig.vectors.transpose();
  result = 0.5 * (result + result.transpose());
  return SpdMatrix(result, SpdMatrix::trusted_tag{});
}

}  // namespace nes
