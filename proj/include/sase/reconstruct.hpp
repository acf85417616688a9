#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "sase/common.hpp"
#include "sase/linalg.hpp"

namespace sase {

/// L x L core of the factored estimate and its column-major vectorization.
struct CoreCoefficient {
  CMatrix r_matrix;
  CVector r_vec;
  double condition = 1.0;  ///< condition number of the Gram matrix it was solved from

  static CoreCoefficient from_vec(const CVector& r, Index width, double condition = 1.0) {
    return {unvec(r, width, width), r, condition};
  }
};

/// Normal equations of the two-block least-squares fit
///   min ||vec(Y_S) - A1 r||^2 + ||vec(Q_C) - A2 r||^2,
/// A1 = conj(F_S) (x) W,  A2 = conj(F_C) (x) I_L,
/// with F_S, F_C the first m and remaining rows of the transmit frame.
struct LsSystem {
  CMatrix gram;  ///< L^2 x L^2, Hermitian
  CVector rhs;   ///< L^2
};

/// Assembles the normal equations without materializing the Kronecker
/// factors:  gram = conj(F_S^H F_S) (x) W^H W + conj(F_C^H F_C) (x) I,
///           rhs  = vec(W^H Y_S F_S) + vec(Q_C F_C).
inline LsSystem build_ls_system(const CMatrix& w_hat, const CMatrix& f_hat, const CMatrix& y_s,
                                const CMatrix& q_c, Index m) {
  const Index width = w_hat.cols();
  const Index n_t = f_hat.rows();
  if (f_hat.cols() != width) throw ShapeError("receive and transmit frames differ in width");
  if (m < 1 || m > n_t) throw ShapeError("column split m outside 1..N_t");
  if (y_s.rows() != w_hat.rows() || y_s.cols() != m)
    throw ShapeError("Y_S must be " + detail::dims(w_hat.rows(), m) + ", got " +
                     detail::dims(y_s.rows(), y_s.cols()));
  if (q_c.rows() != width || q_c.cols() != n_t - m)
    throw ShapeError("Q_C must be " + detail::dims(width, n_t - m) + ", got " +
                     detail::dims(q_c.rows(), q_c.cols()));

  const CMatrix f_s = f_hat.topRows(m);
  const CMatrix f_c = f_hat.bottomRows(n_t - m);
  const CMatrix g_s = (f_s.adjoint() * f_s).conjugate();
  const CMatrix g_c = (f_c.adjoint() * f_c).conjugate();
  const CMatrix w_gram = w_hat.adjoint() * w_hat;

  const Index dim = width * width;
  LsSystem sys{CMatrix::Zero(dim, dim), CVector::Zero(dim)};
  for (Index a = 0; a < width; ++a)
    for (Index b = 0; b < width; ++b) {
      auto blk = sys.gram.block(a * width, b * width, width, width);
      blk = g_s(a, b) * w_gram;
      blk.diagonal().array() += g_c(a, b);
    }
  CMatrix rhs = w_hat.adjoint() * y_s * f_s;
  if (n_t > m) rhs += q_c * f_c;
  sys.rhs = vec(rhs);
  return sys;
}

inline constexpr double kMaxGramCondition = 1e12;

/// Solves gram * r = rhs by a pivoted Hermitian factorization. Rejects
/// singular or badly conditioned systems and verifies the residual.
inline CoreCoefficient solve_core(const CMatrix& gram, const CVector& rhs, Index width = -1) {
  const Index dim = gram.rows();
  if (gram.cols() != dim || rhs.size() != dim) throw ShapeError("normal equations are not square");
  if (width < 0) {
    width = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(dim))));
    if (width * width != dim) throw ShapeError("Gram size is not a perfect square");
  }
  const RVector lambda = Eigen::SelfAdjointEigenSolver<CMatrix>(gram, Eigen::EigenvaluesOnly).eigenvalues();
  const double lo = lambda.size() > 0 ? lambda.minCoeff() : 0.0;
  const double hi = lambda.size() > 0 ? lambda.maxCoeff() : 0.0;
  if (!(lo > 0.0) || hi / lo > kMaxGramCondition)
    throw IllConditioned("core least-squares Gram (" + std::to_string(dim) + "x" + std::to_string(dim) +
                         ") is singular or ill-conditioned: eigenvalues in [" + std::to_string(lo) +
                         ", " + std::to_string(hi) + "]");
  const Eigen::LDLT<CMatrix> ldlt(gram);
  CVector r = ldlt.solve(rhs);
  const double res = (gram * r - rhs).norm();
  if (res > 1e-8 * rhs.norm() && res > 1e-300)
    throw NumericalError("core solve residual " + std::to_string(res) + " exceeds tolerance");
  return CoreCoefficient::from_vec(r, width, hi / lo);
}

/// Factored estimate W * R * F^H; the dense product is formed on request.
class ChannelEstimate {
 public:
  ChannelEstimate(CMatrix w_frame, CoreCoefficient core, CMatrix f_frame)
      : w_frame_(std::move(w_frame)), core_(std::move(core)), f_frame_(std::move(f_frame)) {}

  const CMatrix& w_frame() const { return w_frame_; }
  const CMatrix& f_frame() const { return f_frame_; }
  const CoreCoefficient& core() const { return core_; }

  const CMatrix& dense() const {
    if (!dense_) dense_ = w_frame_ * core_.r_matrix * f_frame_.adjoint();
    return *dense_;
  }

 private:
  CMatrix w_frame_;
  CoreCoefficient core_;
  CMatrix f_frame_;
  mutable std::optional<CMatrix> dense_;
};

inline ChannelEstimate assemble_estimate(const CMatrix& w_hat, const CoreCoefficient& core,
                                         const CMatrix& f_hat) {
  if (core.r_matrix.rows() != w_hat.cols() || core.r_matrix.cols() != f_hat.cols())
    throw ShapeError("core size does not match the frame widths");
  return ChannelEstimate(w_hat, core, f_hat);
}

/// Full reconstruction from the two frames and the two observations.
inline ChannelEstimate reconstruct_channel(const CMatrix& w_hat, const CMatrix& f_hat, const CMatrix& y_s,
                                           const CMatrix& q_c) {
  const LsSystem sys = build_ls_system(w_hat, f_hat, y_s, q_c, y_s.cols());
  return assemble_estimate(w_hat, solve_core(sys.gram, sys.rhs, w_hat.cols()), f_hat);
}

}  // namespace sase
