#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace quantstab {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::RowVectorXd;

/// Raised when operand shapes do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for numerical breakdown (solver stall, failed factorization).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_shape(const MatrixXd& m, Eigen::Index rows, Eigen::Index cols,
                          const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(what + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
}

inline MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

/// Smallest eigenvalue of the symmetric part of `m`.
inline double min_eigenvalue(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double max_eigenvalue(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

inline double spectral_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues()(0);
}

inline Eigen::VectorXcd eigenvalues(const MatrixXd& a) {
  if (a.rows() == 0) return {};
  Eigen::EigenSolver<MatrixXd> es(a, false);
  return es.eigenvalues();
}

inline double spectral_radius(const MatrixXd& a) {
  if (a.rows() == 0) return 0.0;
  return eigenvalues(a).cwiseAbs().maxCoeff();
}

/// Symmetric square root of a PSD matrix; negative eigenvalues are clipped to zero.
inline MatrixXd psd_sqrt(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
  VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace quantstab
