#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "sase/channel_model.hpp"
#include "sase/common.hpp"
#include "sase/linalg.hpp"
#include "sase/sounding.hpp"

namespace sase {

enum class SubspaceSide { column, row };

/// Orthonormal n x L frame with the singular values it was extracted from.
struct SubspaceEstimate {
  CMatrix frame;
  SubspaceSide side = SubspaceSide::column;
  RVector singulars;  ///< top-L, descending
  RVector spectrum;   ///< full spectrum of the source matrix, descending
};

namespace detail {

inline void check_rank_request(Index rank, Index rows, Index cols, const char* who) {
  if (rank < 1 || rank > std::min(rows, cols))
    throw InvalidParameter(std::string(who) + ": rank " + std::to_string(rank) +
                           " exceeds the dimensions " + dims(rows, cols));
}

}  // namespace detail

/// Dominant `rank` left singular vectors of the stage-one observation.
inline SubspaceEstimate left_subspace(const CMatrix& y_s, Index rank) {
  detail::check_rank_request(rank, y_s.rows(), y_s.cols(), "left_subspace");
  ThinSvd svd = thin_svd(y_s);
  CMatrix frame = svd.left.leftCols(rank);
  canonicalize_phases(frame);
  return {std::move(frame), SubspaceSide::column, svd.singulars.head(rank), svd.singulars};
}

/// Dominant `rank` right singular vectors of the row-stage coefficient matrix.
inline SubspaceEstimate right_subspace(const CMatrix& q_hat, Index rank) {
  detail::check_rank_request(rank, q_hat.rows(), q_hat.cols(), "right_subspace");
  ThinSvd svd = thin_svd(q_hat);
  CMatrix frame = svd.right.leftCols(rank);
  canonicalize_phases(frame);
  return {std::move(frame), SubspaceSide::row, svd.singulars.head(rank), svd.singulars};
}

/// [q_s, q_c] column-wise.
inline CMatrix build_q(const CMatrix& q_s, const CMatrix& q_c) {
  if (q_s.rows() != q_c.rows())
    throw ShapeError("build_q: row counts differ (" + std::to_string(q_s.rows()) + " vs " +
                     std::to_string(q_c.rows()) + ")");
  CMatrix q(q_s.rows(), q_s.cols() + q_c.cols());
  q << q_s, q_c;
  return q;
}

enum class PathCountPolicy { largest_ratio };

/// Path count from a descending spectrum: the index i maximizing
/// sigma_i / sigma_{i+1}, clamped to [1, cap]. Lowest index wins ties; a drop
/// to an exact zero counts as an infinite ratio.
inline Index estimate_path_count(const RVector& singulars, Index cap,
                                 PathCountPolicy policy = PathCountPolicy::largest_ratio) {
  (void)policy;
  if (singulars.size() < 2) throw InvalidParameter("path-count estimation needs at least two singular values");
  if (cap < 1) throw InvalidParameter("path-count cap must be at least 1");
  if (!(singulars(0) > 0.0)) throw EstimationFailure("path-count estimation on an all-zero spectrum");
  Index best = 1;
  double best_ratio = -1.0;
  for (Index i = 0; i + 1 < singulars.size(); ++i) {
    const double hi = singulars(i);
    const double lo = singulars(i + 1);
    double ratio = 0.0;
    if (lo > 0.0) ratio = hi / lo;
    else if (hi > 0.0) ratio = kInf;
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = i + 1;
    }
  }
  return std::clamp<Index>(best, 1, cap);
}

enum class DictionaryKind {
  dft,         ///< oversampled DFT frame, uniform in spatial frequency
  angle_grid,  ///< ULA steering vectors on a uniform angle grid over [-pi/2, pi/2)
  dft_2d,      ///< Kronecker product of two oversampled DFT frames (UPA)
};

/// Candidate analog beams: unit-norm columns with entries of modulus 1/sqrt(n).
struct Dictionary {
  CMatrix atoms;
  DictionaryKind kind = DictionaryKind::dft;

  Index size() const { return atoms.cols(); }
  Index length() const { return atoms.rows(); }
};

inline Dictionary build_dictionary(Index n, Index atom_count, DictionaryKind kind = DictionaryKind::dft) {
  if (n < 1) throw InvalidParameter("dictionary atom length must be positive");
  if (atom_count < n)
    throw InvalidParameter("dictionary needs at least n = " + std::to_string(n) + " atoms, got " +
                           std::to_string(atom_count));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Dictionary dict;
  dict.kind = kind;
  dict.atoms.resize(n, atom_count);
  switch (kind) {
    case DictionaryKind::dft:
      for (Index k = 0; k < atom_count; ++k)
        for (Index p = 0; p < n; ++p) {
          const auto e = static_cast<double>((p * k) % atom_count);
          dict.atoms(p, k) = std::polar(scale, -2.0 * kPi * e / static_cast<double>(atom_count));
        }
      break;
    case DictionaryKind::angle_grid:
      for (Index k = 0; k < atom_count; ++k) {
        const double theta = -kPi / 2.0 + kPi * static_cast<double>(k) / static_cast<double>(atom_count);
        dict.atoms.col(k) = steering_vector_ula(theta, n);
      }
      break;
    case DictionaryKind::dft_2d: {
      const auto side = exact_sqrt(n);
      const auto grid = exact_sqrt(atom_count);
      if (!side || !grid)
        throw InvalidParameter("2-D DFT dictionary needs square antenna and atom counts");
      for (Index a = 0; a < *grid; ++a)
        for (Index b = 0; b < *grid; ++b)
          for (Index m = 0; m < *side; ++m)
            for (Index p = 0; p < *side; ++p) {
              const auto e = static_cast<double>((m * a + p * b) % *grid);
              dict.atoms(m * *side + p, a * *grid + b) =
                  std::polar(scale, -2.0 * kPi * e / static_cast<double>(*grid));
            }
      break;
    }
  }
  return dict;
}

/// Default dictionary for an array: steering vectors on a 2n-point angle grid
/// (ULA) or a 2-D DFT frame oversampled by two per axis (UPA).
inline Dictionary default_dictionary(const ArrayGeometry& geometry, Index atom_count = 0) {
  const Index n = geometry.num_antennas;
  if (geometry.kind == ArrayKind::upa) {
    const Index side = *exact_sqrt(n);
    return build_dictionary(n, atom_count > 0 ? atom_count : 4 * side * side, DictionaryKind::dft_2d);
  }
  return build_dictionary(n, atom_count > 0 ? atom_count : 2 * n, DictionaryKind::angle_grid);
}

/// Analog x digital factorization of a frame. In unconstrained mode `analog`
/// and `digital` are empty and `product` holds the frame itself.
struct HybridFrame {
  CMatrix analog;
  CMatrix digital;
  CMatrix product;
  double residual = 0.0;     ///< ||target - analog*digital||_F before orthonormalization
  std::vector<Index> atoms;  ///< dictionary columns used as analog beams

  bool constrained() const { return analog.size() > 0; }
  Index width() const { return product.cols(); }
};

inline HybridFrame unconstrained_frame(const CMatrix& frame) {
  HybridFrame hf;
  hf.product = frame;
  return hf;
}

/// Replaces digital by digital * (P^H P)^{-1/2} with P = analog * digital; the
/// analog part and the span of P are untouched and P becomes semi-unitary.
inline HybridFrame orthonormalize_product(HybridFrame hf) {
  const CMatrix p = hf.constrained() ? CMatrix(hf.analog * hf.digital) : hf.product;
  const CMatrix correction = inverse_sqrt_hermitian(p.adjoint() * p);
  if (hf.constrained()) {
    hf.digital = hf.digital * correction;
    hf.product = hf.analog * hf.digital;
  } else {
    hf.product = p * correction;
  }
  return hf;
}

/// Matrix OMP: pick `slots` atoms greedily by the summed squared correlation
/// with the residual across all target columns, least-squares fit the digital
/// part on the selected atoms, then orthonormalize the product.
inline HybridFrame omp_hybrid_approx(const CMatrix& target, const Dictionary& dict, Index slots) {
  const Index n = target.rows();
  const Index width = target.cols();
  if (dict.length() != n) throw ShapeError("dictionary atom length differs from the target frame");
  if (slots < width || slots > dict.size())
    throw InvalidParameter("OMP needs frame width <= slots <= dictionary size (width " +
                           std::to_string(width) + ", slots " + std::to_string(slots) + ", atoms " +
                           std::to_string(dict.size()) + ")");

  std::vector<Index> chosen;
  std::vector<bool> excluded(static_cast<std::size_t>(dict.size()), false);
  CMatrix basis(n, 0);  // orthonormal basis of the selected atoms
  CMatrix residual = target;

  while (static_cast<Index>(chosen.size()) < slots) {
    const RVector scores = (dict.atoms.adjoint() * residual).rowwise().squaredNorm();
    Index pick = -1;
    double best = -1.0;
    for (Index j = 0; j < dict.size(); ++j) {
      if (excluded[static_cast<std::size_t>(j)]) continue;
      if (scores(j) > best) {
        best = scores(j);
        pick = j;
      }
    }
    if (pick < 0)
      throw InvalidDimension("OMP ran out of linearly independent atoms after " +
                             std::to_string(chosen.size()) + " selections");
    excluded[static_cast<std::size_t>(pick)] = true;

    // Skip atoms already in the span of the selection.
    CVector fresh = dict.atoms.col(pick);
    if (basis.cols() > 0) fresh -= basis * (basis.adjoint() * fresh);
    if (basis.cols() > 0) fresh -= basis * (basis.adjoint() * fresh);
    const double norm = fresh.norm();
    if (norm < 1e-8) continue;

    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = fresh / norm;
    chosen.push_back(pick);
    residual = target - basis * (basis.adjoint() * target);
  }

  HybridFrame hf;
  hf.atoms = chosen;
  hf.analog.resize(n, slots);
  for (Index k = 0; k < slots; ++k) hf.analog.col(k) = dict.atoms.col(chosen[static_cast<std::size_t>(k)]);
  hf.digital = hf.analog.colPivHouseholderQr().solve(target);
  hf.product = hf.analog * hf.digital;
  hf.residual = (target - hf.product).norm();
  return orthonormalize_product(std::move(hf));
}

enum class SaseMode { hybrid, unconstrained };

inline std::string to_string(SaseMode m) { return m == SaseMode::hybrid ? "hybrid" : "unconstrained"; }

struct SaseParams {
  Index m = 20;          ///< stage-one column budget
  Index m_rf = 6;        ///< receive RF chains
  Index n_rf = 8;        ///< transmit RF chains
  Index paths = 4;       ///< assumed path count; 0 estimates it from stage one
  SaseMode mode = SaseMode::hybrid;
  std::shared_ptr<const Dictionary> rx_dictionary;  ///< hybrid mode only
  std::shared_ptr<const Dictionary> tx_dictionary;
};

struct SaseResult {
  HybridFrame w_hat;
  HybridFrame f_hat;
  SubspaceEstimate u_hat;
  SubspaceEstimate v_hat;
  StageOneObservation stage1;
  StageTwoObservation stage2;
  CMatrix q_hat;
  Index paths_used = 0;
};

/// Both SASE stages: column sampling, left subspace, receive-frame design,
/// adaptive row sounding, right subspace, transmit-frame design.
inline SaseResult run_sase(const ChannelInstance& channel, const SaseParams& params, NoiseModel& noise) {
  const Index n_r = channel.n_r();
  const Index n_t = channel.n_t();
  if (params.m_rf < 1 || n_r % params.m_rf != 0)
    throw InvalidParameter("N_r must be a multiple of M_RF");
  if (params.m < 1 || params.m > n_t) throw InvalidParameter("column budget m outside 1..N_t");
  if (params.paths < 0) throw InvalidParameter("path count must be non-negative");

  SaseResult out;
  out.stage1 = collect_stage_one(channel, params.m, params.m_rf, noise, params.n_rf);
  const CMatrix& y_s = out.stage1.y_post_dft;

  Index paths = params.paths;
  if (paths == 0) {
    const RVector spectrum = singular_values(y_s);
    paths = std::min(estimate_path_count(spectrum, std::min(params.m_rf, params.n_rf)), params.m);
  }
  if (paths > params.m) throw InvalidParameter("path count exceeds the column budget m");
  if (paths > params.m_rf) throw InvalidParameter("path count exceeds M_RF (stage-two sounder width)");
  if (params.mode == SaseMode::hybrid && paths > params.n_rf)
    throw InvalidParameter("path count exceeds N_RF");
  out.paths_used = paths;

  auto approximate = [&](const CMatrix& target, const std::shared_ptr<const Dictionary>& dict,
                         Index slots) {
    if (params.mode == SaseMode::unconstrained) return unconstrained_frame(target);
    if (!dict) throw InvalidParameter("hybrid mode needs a dictionary");
    return omp_hybrid_approx(target, *dict, slots);
  };

  out.u_hat = left_subspace(y_s, paths);
  out.w_hat = approximate(out.u_hat.frame, params.rx_dictionary, params.m_rf);

  out.stage2 = collect_stage_two(channel, out.w_hat.product, params.m, noise, params.n_rf);
  out.q_hat = build_q(out.w_hat.product.adjoint() * y_s, out.stage2.q_c);
  out.v_hat = right_subspace(out.q_hat, paths);
  out.f_hat = approximate(out.v_hat.frame, params.tx_dictionary, params.n_rf);
  return out;
}

}  // namespace sase
