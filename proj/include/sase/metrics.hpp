#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sase/channel_model.hpp"
#include "sase/common.hpp"
#include "sase/linalg.hpp"
#include "sase/reconstruct.hpp"

namespace sase {

/// Per-trial bundle of accuracy figures, bounds and overhead.
struct AccuracyReport {
  double eta = 0.0;
  double eta_c = 0.0;
  double eta_r = 0.0;
  double nmse = 0.0;
  double rate = 0.0;
  double rate_perfect_csi = 0.0;
  double gamma = 0.0;
  double col_bound = 0.0;
  double row_bound = 0.0;
  double joint_bound = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  Index channel_uses = 0;
  Index paths_used = 0;

  bool operator==(const AccuracyReport&) const = default;
};

namespace detail {

inline double channel_power(const CMatrix& h) {
  const double p = h.squaredNorm();
  if (!(p > 0.0)) throw UndefinedMetric("accuracy metric of a zero channel");
  return p;
}

inline void require_semi_unitary(const CMatrix& q, const char* who) {
  if (!is_semi_unitary(q, 1e-8))
    throw ContractViolation(std::string(who) + ": frame is not semi-unitary");
}

}  // namespace detail

/// Fraction of channel power captured jointly: ||W^H H F||_F^2 / tr(H^H H).
inline double eta(const CMatrix& w, const CMatrix& f, const CMatrix& h) {
  detail::require_semi_unitary(w, "eta");
  detail::require_semi_unitary(f, "eta");
  return (w.adjoint() * h * f).squaredNorm() / detail::channel_power(h);
}

/// Column-side capture tr(W^H H H^H W) / tr(H^H H).
inline double eta_c(const CMatrix& w, const CMatrix& h) {
  detail::require_semi_unitary(w, "eta_c");
  return (w.adjoint() * h).squaredNorm() / detail::channel_power(h);
}

/// Row-side capture tr(F^H H^H H F) / tr(H^H H).
inline double eta_r(const CMatrix& f, const CMatrix& h) {
  detail::require_semi_unitary(f, "eta_r");
  return (h * f).squaredNorm() / detail::channel_power(h);
}

inline double eta(const CMatrix& w, const CMatrix& f, const ChannelInstance& ch) { return eta(w, f, ch.matrix); }
inline double eta_c(const CMatrix& w, const ChannelInstance& ch) { return eta_c(w, ch.matrix); }
inline double eta_r(const CMatrix& f, const ChannelInstance& ch) { return eta_r(f, ch.matrix); }

inline double nmse(const CMatrix& h, const CMatrix& h_hat) {
  if (h.rows() != h_hat.rows() || h.cols() != h_hat.cols()) throw ShapeError("nmse: shape mismatch");
  return (h - h_hat).squaredNorm() / detail::channel_power(h);
}

inline double nmse(const ChannelInstance& ch, const ChannelEstimate& est) { return nmse(ch.matrix, est.dense()); }

/// log2 det(I + H_e H_e^H / (sigma2 * L)), H_e = W^H H F, for semi-unitary
/// frames. Infinite when sigma2 = 0 and H_e != 0.
inline double spectrum_efficiency(const CMatrix& w, const CMatrix& f, const CMatrix& h, double sigma2,
                                  Index streams) {
  detail::require_semi_unitary(w, "spectrum_efficiency");
  detail::require_semi_unitary(f, "spectrum_efficiency");
  if (streams < 1) throw InvalidParameter("stream count must be positive");
  if (sigma2 < 0.0) throw InvalidParameter("noise variance must be non-negative");
  const CMatrix he = w.adjoint() * h * f;
  if (sigma2 == 0.0) return he.squaredNorm() > 0.0 ? kInf : 0.0;
  const CMatrix a = CMatrix::Identity(he.rows(), he.rows()) +
                    he * he.adjoint() / (sigma2 * static_cast<double>(streams));
  const RVector lambda = Eigen::SelfAdjointEigenSolver<CMatrix>(a, Eigen::EigenvaluesOnly).eigenvalues();
  double bits = 0.0;
  for (Index i = 0; i < lambda.size(); ++i) bits += std::log2(std::max(lambda(i), 1.0));
  return bits;
}

/// Post-combining SNR ||W^H H F||_F^2 / (sigma2 * L); +infinity when sigma2 = 0.
inline double effective_snr(const CMatrix& w, const CMatrix& f, const CMatrix& h, double sigma2, Index streams) {
  detail::require_semi_unitary(w, "effective_snr");
  detail::require_semi_unitary(f, "effective_snr");
  if (streams < 1) throw InvalidParameter("stream count must be positive");
  const double captured = (w.adjoint() * h * f).squaredNorm();
  if (sigma2 == 0.0) return kInf;
  return captured / (sigma2 * static_cast<double>(streams));
}

inline constexpr double kGaussianNoiseConstant = 2.0;

/// (1 - C * rows * (s2 * sL^2 + cols * s2^2) / sL^4)_+
inline double subspace_accuracy_bound(double sigma2, double sigma_l, Index rows, Index cols,
                                      double c = kGaussianNoiseConstant) {
  if (!(sigma_l > 0.0)) throw InvalidParameter("accuracy bound needs a positive L-th singular value");
  const double s2 = sigma_l * sigma_l;
  const double penalty = c * static_cast<double>(rows) *
                         (sigma2 * s2 + static_cast<double>(cols) * sigma2 * sigma2) / (s2 * s2);
  return std::max(0.0, 1.0 - penalty);
}

/// Lower bound on the expected column-subspace accuracy given the sampled
/// block H_S (N_r x m).
inline double column_bound(double sigma2, const CMatrix& h_s, Index paths, Index n_r,
                           double c = kGaussianNoiseConstant) {
  const double sl = sigma_at(h_s, paths);
  if (!(sl > 1e-12 * std::max(1.0, sigma_at(h_s, 1))))
    throw InvalidParameter("column bound: sampled block has rank below " + std::to_string(paths));
  return subspace_accuracy_bound(sigma2, sl, n_r, h_s.cols(), c);
}

/// Lower bound on the expected row-subspace accuracy given Q_bar = W^H H.
/// `assumed_paths` replaces L in the sigma^4 term when the estimator used a
/// wider frame than the true path count.
inline double row_bound(double sigma2, const CMatrix& q_bar, Index paths, Index n_t, Index assumed_paths = 0,
                        double c = kGaussianNoiseConstant) {
  const double sl = sigma_at(q_bar, paths);
  if (!(sl > 1e-12 * std::max(1.0, sigma_at(q_bar, 1))))
    throw InvalidParameter("row bound: Q_bar has rank below " + std::to_string(paths));
  return subspace_accuracy_bound(sigma2, sl, n_t, assumed_paths > 0 ? assumed_paths : paths, c);
}

/// sigma_L^2(U_hat^H U) * sigma_L^2(V_hat^H V), L = width of the true frames.
inline double joint_bound(const CMatrix& u_hat, const CMatrix& u, const CMatrix& v_hat, const CMatrix& v) {
  const Index l = u.cols();
  const double cu = sigma_at(u_hat.adjoint() * u, l);
  const double cv = sigma_at(v_hat.adjoint() * v, v.cols());
  return cu * cu * cv * cv;
}

/// Channel uses of both stages: m * N_r / M_RF + (N_t - m).
inline Index sase_channel_uses(Index m, Index n_r, Index m_rf, Index n_t) {
  if (m_rf < 1 || n_r % m_rf != 0) throw InvalidParameter("N_r must be a multiple of M_RF");
  return m * n_r / m_rf + (n_t - m);
}

/// Stage-one column budget hitting a channel-use target exactly, if one exists.
inline std::optional<Index> column_budget_for_uses(Index k, Index n_r, Index m_rf, Index n_t) {
  if (m_rf < 1 || n_r % m_rf != 0 || n_r == m_rf) return std::nullopt;
  const Index num = (k - n_t) * m_rf;
  const Index den = n_r - m_rf;
  if (num < 0 || num % den != 0) return std::nullopt;
  return num / den;
}

struct BudgetParams {
  double paths = 4;     // L
  double n_r = 36;
  double n_t = 144;
  double m_rf = 6;
  double n_rf = 8;
  double m = 20;        // SASE column budget
  double grid = 144;    // G
  double krylov = 4;    // q (Arnoldi)
  double beams = 2;     // s (ACE)
  double resolution = 256;  // N_m (ACE)
};

struct BudgetRow {
  std::string method;
  double channel_uses = 0.0;
  bool order_of_magnitude = false;  ///< big-O formula evaluated with unit constant
};

/// Channel-use formulas of SASE and the competing estimators.
inline std::vector<BudgetRow> budget_table(const BudgetParams& p) {
  const double sase = p.m * p.n_r / p.m_rf + (p.n_t - p.m);
  const double subspace = p.paths * (p.n_r + p.n_t) / p.m_rf;
  const double sparse = p.paths * std::log(p.grid * p.grid) / p.m_rf;
  const double arnoldi = 2.0 * p.krylov * p.n_r / p.m_rf + 2.0 * p.krylov * p.n_t / p.n_rf;
  const double ace = p.beams * p.beams * std::pow(p.paths, 3) *
                     (std::log(p.resolution / p.paths) / std::log(p.beams)) / p.m_rf;
  return {
      {"SASE", sase, false},       {"MF", subspace, true},      {"SD", subspace, true},
      {"Arnoldi", arnoldi, false}, {"OMP", sparse, true},       {"SBL", sparse, true},
      {"ACE", ace, false},
  };
}

}  // namespace sase
