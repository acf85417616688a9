#pragma once

#include <cmath>
#include <vector>

#include "sase/channel_model.hpp"
#include "sase/common.hpp"
#include "sase/linalg.hpp"
#include "sase/random.hpp"

namespace sase {

enum class Side { transmit, receive };

/// Analog (constant modulus) times digital sounder.
struct HybridSounder {
  CMatrix analog;
  CMatrix digital;
  Side side = Side::transmit;

  /// Transmit side: analog * digital * s with s = ones / sqrt(chains).
  /// Receive side: the combining matrix analog * digital.
  CMatrix composed() const {
    if (side == Side::receive) return analog * digital;
    const Index chains = digital.cols();
    const CVector s = CVector::Constant(chains, 1.0 / std::sqrt(static_cast<double>(chains)));
    return analog * (digital * s);
  }
};

/// Transmit sounder whose composed vector is the i-th standard basis vector
/// (i is 1-based). Needs at least two RF chains.
inline HybridSounder basis_transmit_sounder(Index i, Index n_t, Index n_rf) {
  if (n_rf < 2) throw InvalidParameter("a basis-vector sounder needs at least two transmit RF chains");
  if (n_t < 1 || i < 1 || i > n_t)
    throw InvalidParameter("basis index " + std::to_string(i) + " outside 1.." + std::to_string(n_t));
  const double mod = 1.0 / std::sqrt(static_cast<double>(n_t));
  HybridSounder s;
  s.side = Side::transmit;
  s.analog = CMatrix::Constant(n_t, n_rf, mod);
  s.analog(i - 1, 1) = -mod;
  s.digital = CMatrix::Zero(n_rf, n_rf);
  const double g = std::sqrt(static_cast<double>(n_rf * n_t)) / 2.0;
  s.digital(0, 0) = g;
  s.digital(1, 0) = -g;
  return s;
}

/// Unitary DFT matrix split into n_r / m_rf receive sounders of width m_rf.
struct DftReceiveBank {
  CMatrix full_matrix;
  Index chains = 1;

  Index block_count() const { return full_matrix.cols() / chains; }

  /// Block j (0-based): columns j*chains .. (j+1)*chains - 1.
  CMatrix block(Index j) const { return full_matrix.middleCols(j * chains, chains); }

  HybridSounder sounder(Index j) const {
    return {block(j), CMatrix::Identity(chains, chains), Side::receive};
  }
};

/// Unitary n-point DFT matrix: entry (p, k) = exp(-j*2*pi*p*k/n) / sqrt(n).
inline CMatrix dft_matrix(Index n) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  CMatrix f(n, n);
  for (Index p = 0; p < n; ++p)
    for (Index k = 0; k < n; ++k) {
      // Reduce the exponent mod n before scaling so large products stay exact.
      const auto e = static_cast<double>((p * k) % n);
      f(p, k) = std::polar(scale, -2.0 * kPi * e / static_cast<double>(n));
    }
  return f;
}

inline DftReceiveBank dft_receive_bank(Index n_r, Index m_rf) {
  if (n_r < 1 || m_rf < 1) throw InvalidParameter("receive bank dimensions must be positive");
  if (n_r % m_rf != 0)
    throw InvalidParameter("N_r = " + std::to_string(n_r) + " is not a multiple of M_RF = " +
                           std::to_string(m_rf));
  return {dft_matrix(n_r), m_rf};
}

/// Receiver noise, CN(0, sigma2 I) per channel use, drawn from a caller-owned stream.
class NoiseModel {
 public:
  NoiseModel(double sigma2, RngStream& stream) : sigma2_(sigma2), stream_(&stream) {
    if (!(sigma2 >= 0.0)) throw InvalidParameter("noise variance must be non-negative");
  }

  double sigma2() const { return sigma2_; }

  /// Antenna-domain noise vector. Draws are consumed even when sigma2 is zero
  /// so the stream position does not depend on the noise level.
  CVector draw(Index n) { return stream_->complex_normal_vector(n, sigma2_); }

 private:
  double sigma2_;
  RngStream* stream_;
};

/// One channel use: w^H H f + w^H n.
inline CVector sound(const ChannelInstance& channel, const CVector& f, const CMatrix& w,
                     NoiseModel& noise) {
  if (f.size() != channel.n_t())
    throw ShapeError("transmit sounder length " + std::to_string(f.size()) + " != N_t " +
                     std::to_string(channel.n_t()));
  if (w.rows() != channel.n_r())
    throw ShapeError("receive sounder has " + std::to_string(w.rows()) + " rows, N_r is " +
                     std::to_string(channel.n_r()));
  const CVector n = noise.draw(channel.n_r());
  return w.adjoint() * (channel.matrix * f + n);
}

struct StageOneObservation {
  CMatrix y_post_dft;  ///< Y_S = M * [y_1 ... y_m] = H_S + N_S
  Index m = 0;
  Index channel_uses = 0;
};

struct StageTwoObservation {
  CMatrix q_c;  ///< L x (N_t - m)
  Index channel_uses = 0;
};

/// Column-sampling stage. Column i is sounded with the basis-vector transmit
/// sounder against every DFT block in turn; the stacked observations are then
/// recombined by the DFT matrix.
inline StageOneObservation collect_stage_one(const ChannelInstance& channel, Index m, Index m_rf,
                                             NoiseModel& noise, Index n_rf = 2) {
  const Index n_t = channel.n_t();
  const Index n_r = channel.n_r();
  if (m < 1 || m > n_t)
    throw InvalidParameter("column budget m = " + std::to_string(m) + " outside 1.." + std::to_string(n_t));
  const DftReceiveBank bank = dft_receive_bank(n_r, m_rf);

  CMatrix stacked(n_r, m);
  Index uses = 0;
  for (Index i = 0; i < m; ++i) {
    const CVector f = basis_transmit_sounder(i + 1, n_t, n_rf).composed();
    for (Index j = 0; j < bank.block_count(); ++j) {
      stacked.block(j * m_rf, i, m_rf, 1) = sound(channel, f, bank.block(j), noise);
      ++uses;
    }
  }
  return {bank.full_matrix * stacked, m, uses};
}

/// Row stage: columns m+1..N_t sounded with the estimated column frame as the
/// receive sounder.
inline StageTwoObservation collect_stage_two(const ChannelInstance& channel, const CMatrix& w_hat,
                                             Index m, NoiseModel& noise, Index n_rf = 2) {
  const Index n_t = channel.n_t();
  if (w_hat.rows() != channel.n_r()) throw ShapeError("receive frame row count differs from N_r");
  if (m < 0 || m > n_t) throw InvalidParameter("column budget outside 0..N_t");
  if (!is_semi_unitary(w_hat, 1e-8))
    throw ContractViolation("stage-two receive frame is not semi-unitary (error " +
                            std::to_string(orthonormality_error(w_hat)) + ")");
  CMatrix q(w_hat.cols(), n_t - m);
  for (Index k = 0; k < n_t - m; ++k) {
    const CVector f = basis_transmit_sounder(m + k + 1, n_t, n_rf).composed();
    q.col(k) = sound(channel, f, w_hat, noise);
  }
  return {std::move(q), n_t - m};
}

}  // namespace sase
