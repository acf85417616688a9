#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "sase/common.hpp"
#include "sase/random.hpp"

namespace sase {

/// Thin SVD with descending singular values.
struct ThinSvd {
  CMatrix left;
  RVector singulars;
  CMatrix right;
};

inline ThinSvd thin_svd(const CMatrix& a) {
  if (a.size() == 0) return {CMatrix(a.rows(), 0), RVector(0), CMatrix(a.cols(), 0)};
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

inline RVector singular_values(const CMatrix& a) {
  if (a.size() == 0) return RVector(0);
  return Eigen::JacobiSVD<CMatrix>(a).singularValues();
}

/// k-th largest singular value (1-based); zero when k exceeds min(rows, cols).
inline double sigma_at(const CMatrix& a, Index k) {
  const RVector s = singular_values(a);
  return k >= 1 && k <= s.size() ? s(k - 1) : 0.0;
}

/// Rotate each column so that its first entry of non-negligible magnitude is
/// real and positive. The same phase is applied to `partner` when given, which
/// keeps left * diag(s) * partner^H unchanged.
inline void canonicalize_phases(CMatrix& frame, CMatrix* partner = nullptr) {
  for (Index c = 0; c < frame.cols(); ++c) {
    const double tol = 1e-12 * frame.col(c).norm();
    for (Index r = 0; r < frame.rows(); ++r) {
      const Complex z = frame(r, c);
      if (std::abs(z) > tol) {
        const Complex phase = std::conj(z) / std::abs(z);
        frame.col(c) *= phase;
        if (partner != nullptr) partner->col(c) *= phase;
        break;
      }
    }
  }
}

inline double orthonormality_error(const CMatrix& q) {
  return (q.adjoint() * q - CMatrix::Identity(q.cols(), q.cols())).norm();
}

inline bool is_semi_unitary(const CMatrix& q, double tol) {
  return orthonormality_error(q) <= tol;
}

/// Principal angles (ascending) between the spans of two orthonormal frames.
/// Small angles come from the sines and large ones from the cosines, which
/// keeps both ends accurate.
inline std::vector<double> principal_angles(const CMatrix& a, const CMatrix& b) {
  const Index k = std::min(a.cols(), b.cols());
  const CMatrix cross = a.adjoint() * b;
  const RVector cosines = singular_values(cross);  // descending
  RVector sines = singular_values(b - a * cross);  // descending
  if (a.cols() < b.cols()) sines = singular_values(a - b * cross.adjoint());
  std::vector<double> angles(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) {
    const double c = std::clamp(i < cosines.size() ? cosines(i) : 0.0, 0.0, 1.0);
    const Index si = sines.size() - 1 - i;  // ascending order for sines
    const double s = std::clamp(si >= 0 && si < sines.size() ? sines(si) : 0.0, 0.0, 1.0);
    angles[static_cast<std::size_t>(i)] = s < 0.7 ? std::asin(s) : std::acos(c);
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

inline double max_principal_angle(const CMatrix& a, const CMatrix& b) {
  const auto angles = principal_angles(a, b);
  return angles.empty() ? 0.0 : angles.back();
}

/// (G)^{-1/2} for Hermitian positive definite G.
inline CMatrix inverse_sqrt_hermitian(const CMatrix& g, double rel_floor = 1e-12) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(g);
  const RVector& lambda = eig.eigenvalues();
  const double top = lambda.size() > 0 ? lambda.maxCoeff() : 0.0;
  if (lambda.size() == 0 || top <= 0.0 || lambda.minCoeff() <= rel_floor * top)
    throw SingularMatrix("inverse square root of a singular Gram matrix");
  const RVector scale = lambda.cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * scale.asDiagonal() * eig.eigenvectors().adjoint();
}

/// Column-major vectorization.
inline CVector vec(const CMatrix& a) {
  return Eigen::Map<const CVector>(a.data(), a.size());
}

inline CMatrix unvec(const CVector& v, Index rows, Index cols) {
  return Eigen::Map<const CMatrix>(v.data(), rows, cols);
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix.
inline CMatrix random_unitary(Index n, RngStream& rng) {
  const CMatrix g = rng.complex_normal_matrix(n, n);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < n; ++i) {
    const Complex d = r(i, i);
    if (std::abs(d) > 0.0) q.col(i) *= d / std::abs(d);
  }
  return q;
}

/// Orthonormal basis of the column span of a full-column-rank matrix.
inline CMatrix orthonormal_basis(const CMatrix& a) {
  Eigen::HouseholderQR<CMatrix> qr(a);
  return qr.householderQ() * CMatrix::Identity(a.rows(), a.cols());
}

}  // namespace sase
