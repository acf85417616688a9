#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sase/common.hpp"
#include "sase/linalg.hpp"
#include "sase/random.hpp"

namespace sase {

enum class ArrayKind { ula, upa };

inline std::string to_string(ArrayKind k) { return k == ArrayKind::ula ? "ula" : "upa"; }

/// Integer square root of n when n is a perfect square.
inline std::optional<Index> exact_sqrt(Index n) {
  if (n < 0) return std::nullopt;
  auto r = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  if (r * r != n) return std::nullopt;
  return r;
}

/// Antenna array description. Element spacing is half a wavelength.
struct ArrayGeometry {
  ArrayKind kind = ArrayKind::ula;
  Index num_antennas = 1;
  double spacing_ratio = 0.5;

  static ArrayGeometry ula(Index n) {
    if (n < 1) throw InvalidDimension("ULA needs at least one antenna");
    return {ArrayKind::ula, n, 0.5};
  }

  static ArrayGeometry upa(Index n) {
    if (n < 1 || !exact_sqrt(n))
      throw InvalidDimension("UPA antenna count " + std::to_string(n) + " is not a perfect square");
    return {ArrayKind::upa, n, 0.5};
  }

  static ArrayGeometry of(ArrayKind kind, Index n) { return kind == ArrayKind::ula ? ula(n) : upa(n); }
};

/// ULA response: entry k is exp(-j*pi*k*sin(theta)) / sqrt(n).
inline CVector steering_vector_ula(double theta, Index n) {
  if (n < 1) throw InvalidDimension("steering vector length must be positive");
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  const double phase_step = -kPi * std::sin(theta);
  CVector a(n);
  for (Index k = 0; k < n; ++k) a(k) = std::polar(scale, phase_step * static_cast<double>(k));
  return a;
}

/// UPA response on a sqrt(n) x sqrt(n) grid, flattened row-major (index m*sqrt(n) + p):
/// exp(+j*pi*(m*sin(az)*sin(el) + p*cos(el))) / sqrt(n).
inline CVector steering_vector_upa(double azimuth, double elevation, Index n) {
  const auto side = n >= 1 ? exact_sqrt(n) : std::nullopt;
  if (!side) throw InvalidDimension("UPA steering vector needs a perfect-square length");
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  const double u = std::sin(azimuth) * std::sin(elevation);
  const double v = std::cos(elevation);
  CVector a(n);
  for (Index m = 0; m < *side; ++m)
    for (Index p = 0; p < *side; ++p)
      a(m * *side + p) = std::polar(scale, kPi * (static_cast<double>(m) * u + static_cast<double>(p) * v));
  return a;
}

struct ClusterShape {
  Index clusters = 1;
  Index rays = 1;

  bool operator==(const ClusterShape&) const = default;
};

/// Propagation paths. For ULA only `aoa`/`aod` are used; for UPA those hold the
/// azimuths and `aoa_elevation`/`aod_elevation` the elevations.
struct PathSet {
  ArrayKind kind = ArrayKind::ula;
  std::vector<double> aoa;
  std::vector<double> aod;
  std::vector<double> aoa_elevation;
  std::vector<double> aod_elevation;
  std::vector<Complex> gains;
  std::optional<ClusterShape> cluster_shape;

  Index count() const { return static_cast<Index>(gains.size()); }

  bool operator==(const PathSet&) const = default;
};

namespace detail {

inline bool has_near_duplicates(const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool same_a = std::abs(a[i] - a[j]) <= 1e-12;
      const bool same_b = b.empty() || std::abs(b[i] - b[j]) <= 1e-12;
      if (same_a && same_b) return true;
    }
  return false;
}

inline std::vector<double> uniform_draws(RngStream& rng, Index n, double lo, double hi) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& x : out) x = rng.uniform(lo, hi);
  return out;
}

}  // namespace detail

/// Draws `count` paths: angles i.i.d. uniform, gains CN(0, 1). ULA angles lie in
/// [-pi/2, pi/2); UPA azimuths in [-pi/2, pi/2) and elevations in [0, pi).
/// The whole set is redrawn if two arrival (or two departure) directions coincide.
inline PathSet sample_paths(Index count, ArrayKind kind, RngStream& rng,
                            double gain_variance = 1.0) {
  if (count < 1) throw InvalidParameter("path count must be at least 1");
  const double lo = -kPi / 2.0;
  const double hi = kPi / 2.0;
  for (;;) {
    PathSet p;
    p.kind = kind;
    p.aoa = detail::uniform_draws(rng, count, lo, hi);
    if (kind == ArrayKind::upa) p.aoa_elevation = detail::uniform_draws(rng, count, 0.0, kPi);
    p.aod = detail::uniform_draws(rng, count, lo, hi);
    if (kind == ArrayKind::upa) p.aod_elevation = detail::uniform_draws(rng, count, 0.0, kPi);
    p.gains.resize(static_cast<std::size_t>(count));
    for (auto& g : p.gains) g = rng.complex_normal(gain_variance);
    if (!detail::has_near_duplicates(p.aoa, p.aoa_elevation) &&
        !detail::has_near_duplicates(p.aod, p.aod_elevation))
      return p;
  }
}

/// Clustered UPA paths: clusters * rays independent rays.
inline PathSet sample_clustered_paths(ClusterShape shape, RngStream& rng) {
  if (shape.clusters < 1 || shape.rays < 1) throw InvalidParameter("cluster shape must be positive");
  PathSet p = sample_paths(shape.clusters * shape.rays, ArrayKind::upa, rng);
  p.cluster_shape = shape;
  return p;
}

/// Channel matrix together with the generating paths and its exact rank-L SVD.
struct ChannelInstance {
  CMatrix matrix;
  PathSet paths;
  CMatrix true_left;
  RVector true_singulars;
  CMatrix true_right;

  Index n_r() const { return matrix.rows(); }
  Index n_t() const { return matrix.cols(); }
  Index rank() const { return true_singulars.size(); }
  double power() const { return matrix.squaredNorm(); }
  CMatrix column_prefix(Index m) const { return matrix.leftCols(m); }

  /// Top-k true factors (k <= rank()).
  CMatrix left_frame(Index k) const { return true_left.leftCols(k); }
  CMatrix right_frame(Index k) const { return true_right.leftCols(k); }
};

/// Builds the channel from its factors and caches the SVD truncated to the path
/// count. Singular vectors are phase-canonicalized on the left side.
inline ChannelInstance make_channel(CMatrix matrix, PathSet paths, Index rank) {
  ChannelInstance ch;
  ThinSvd svd = thin_svd(matrix);
  const Index k = std::min<Index>(rank, svd.singulars.size());
  ch.true_left = svd.left.leftCols(k);
  ch.true_right = svd.right.leftCols(k);
  ch.true_singulars = svd.singulars.head(k);
  canonicalize_phases(ch.true_left, &ch.true_right);
  ch.matrix = std::move(matrix);
  ch.paths = std::move(paths);
  return ch;
}

inline ChannelInstance assemble_channel(const PathSet& paths, const ArrayGeometry& rx,
                                        const ArrayGeometry& tx) {
  const Index count = paths.count();
  const auto n = static_cast<std::size_t>(count);
  if (count < 1) throw ShapeError("path set is empty");
  if (rx.kind != paths.kind || tx.kind != paths.kind)
    throw ShapeError("array geometry kind does not match the path set");
  if (paths.aoa.size() != n || paths.aod.size() != n)
    throw ShapeError("path set angle lists disagree with gain count");
  if (paths.kind == ArrayKind::upa && (paths.aoa_elevation.size() != n || paths.aod_elevation.size() != n))
    throw ShapeError("UPA path set needs elevation angles for every path");

  const Index nr = rx.num_antennas;
  const Index nt = tx.num_antennas;
  CMatrix h = CMatrix::Zero(nr, nt);
  for (std::size_t l = 0; l < n; ++l) {
    CVector ar, at;
    if (paths.kind == ArrayKind::ula) {
      ar = steering_vector_ula(paths.aoa[l], nr);
      at = steering_vector_ula(paths.aod[l], nt);
    } else {
      ar = steering_vector_upa(paths.aoa[l], paths.aoa_elevation[l], nr);
      at = steering_vector_upa(paths.aod[l], paths.aod_elevation[l], nt);
    }
    h.noalias() += paths.gains[l] * ar * at.adjoint();
  }
  h *= std::sqrt(static_cast<double>(nr * nt) / static_cast<double>(count));
  return make_channel(std::move(h), paths, count);
}

/// Number of singular values at or above rel_tol * sigma_1 (0 for a zero matrix).
inline Index numerical_rank(const CMatrix& a, double rel_tol) {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw InvalidParameter("rank tolerance must lie in (0, 1)");
  const RVector s = singular_values(a);
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cut = rel_tol * s(0);
  return static_cast<Index>((s.array() >= cut).count());
}

}  // namespace sase
