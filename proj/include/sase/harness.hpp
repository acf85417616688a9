#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sase/channel_model.hpp"
#include "sase/common.hpp"
#include "sase/metrics.hpp"
#include "sase/random.hpp"
#include "sase/reconstruct.hpp"
#include "sase/sounding.hpp"
#include "sase/subspace.hpp"

namespace sase {

enum class SweepKind { snr, channel_uses, paths, mismatch, rank_check };

inline std::string to_string(SweepKind k) {
  switch (k) {
    case SweepKind::snr: return "snr";
    case SweepKind::channel_uses: return "channel_uses";
    case SweepKind::paths: return "paths";
    case SweepKind::mismatch: return "mismatch";
    case SweepKind::rank_check: return "rank_check";
  }
  return "?";
}

/// Estimator path count: a positive value, `kAssumedAuto` (largest-gap
/// estimate) or `kAssumedMatchTrue` (follow true_l).
inline constexpr Index kAssumedAuto = 0;
inline constexpr Index kAssumedMatchTrue = -1;

struct ExperimentConfig {
  Index n_r = 36;
  Index n_t = 144;
  Index m_rf = 6;
  Index n_rf = 8;
  Index true_l = 4;
  Index assumed_l = kAssumedMatchTrue;
  Index m = 20;
  Index k_target = 0;  ///< when positive, m is derived from it
  std::vector<double> snr_db_grid{-20, -15, -10, -5, 0, 5, 10, 15, 20};
  double snr_db = 10.0;  ///< operating point of non-SNR sweeps
  std::vector<Index> m_grid{4, 8, 12, 16, 20, 24, 28, 32, 36, 40, 44, 48};
  std::vector<Index> l_grid{1, 2, 3, 4, 5, 6};
  std::vector<Index> mismatch_grid{3, 4, 5, 6};
  Index trials = 200;
  std::uint64_t seed = 42;
  SaseMode mode = SaseMode::hybrid;
  ArrayKind geometry = ArrayKind::ula;
  Index dict_size = 0;  ///< 0 selects the geometry default
  SweepKind sweep = SweepKind::snr;
  double rank_tol = 1e-8;
  unsigned threads = 1;  ///< 0 uses every hardware thread

  bool operator==(const ExperimentConfig&) const = default;
};

/// Column budget after resolving a channel-use target.
inline Index resolved_m(const ExperimentConfig& c) {
  if (c.k_target <= 0) return c.m;
  if (c.m_rf < 1 || c.n_r % c.m_rf != 0 || c.n_r == c.m_rf)
    throw InvalidParameter("channel-use target needs N_r a multiple of M_RF and N_r > M_RF");
  if (auto m = column_budget_for_uses(c.k_target, c.n_r, c.m_rf, c.n_t)) return *m;
  // Suggest the valid targets on either side.
  const Index step = c.n_r / c.m_rf - 1;
  const Index below = c.n_t + step * std::max<Index>(0, (c.k_target - c.n_t) / step);
  const Index above = below + step;
  throw InvalidParameter("channel-use target K = " + std::to_string(c.k_target) +
                         " is not reachable; nearest valid targets are " + std::to_string(below) + " and " +
                         std::to_string(above));
}

inline Index resolved_assumed_l(const ExperimentConfig& c) {
  return c.assumed_l == kAssumedMatchTrue ? c.true_l : c.assumed_l;
}

/// Throws ConfigError with a named diagnostic when the configuration cannot run.
inline void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& what) { throw InvalidParameter("invalid configuration: " + what); };
  if (c.n_r < 1 || c.n_t < 1) fail("antenna counts must be positive");
  if (c.m_rf < 1 || c.n_rf < 1) fail("RF chain counts must be positive");
  if (c.n_r % c.m_rf != 0)
    fail("n_r = " + std::to_string(c.n_r) + " is not divisible by m_rf = " + std::to_string(c.m_rf));
  if (c.n_rf < 2) fail("n_rf must be at least 2 for basis-vector sounding");
  if (c.geometry == ArrayKind::upa && (!exact_sqrt(c.n_r) || !exact_sqrt(c.n_t)))
    fail("UPA geometry needs square antenna counts");
  if (c.true_l < 1) fail("true_l must be at least 1");
  if (c.true_l > std::min(c.n_r, c.n_t)) fail("true_l exceeds min(n_r, n_t)");
  const Index m = resolved_m(c);
  if (m < c.true_l || m > c.n_t)
    fail("m = " + std::to_string(m) + " must satisfy true_l <= m <= n_t (true_l = " +
         std::to_string(c.true_l) + ", n_t = " + std::to_string(c.n_t) + ")");
  const Index cap = std::min(c.m_rf, c.n_rf);
  const Index assumed = resolved_assumed_l(c);
  if (assumed < 0) fail("assumed_l must be positive, 'auto' or 'match'");
  if (assumed > cap)
    fail("assumed_l = " + std::to_string(assumed) + " exceeds min(m_rf, n_rf) = " + std::to_string(cap));
  if (assumed > m) fail("assumed_l exceeds the column budget m");
  if (c.trials < 1) fail("trials must be positive");
  if (c.dict_size < 0) fail("dict_size must be non-negative");
  if (c.dict_size > 0) {
    if (c.dict_size < std::max(c.n_r, c.n_t)) fail("dict_size must be at least max(n_r, n_t)");
    if (c.geometry == ArrayKind::upa && !exact_sqrt(c.dict_size)) fail("UPA dict_size must be a square");
  }
  if (!(c.rank_tol > 0.0 && c.rank_tol < 1.0)) fail("rank_tol must lie in (0, 1)");
  if (std::isnan(c.snr_db)) fail("snr_db is not a number");
  for (double s : c.snr_db_grid)
    if (std::isnan(s)) fail("snr_db_grid holds a non-number");
}

/// Per-configuration state shared by every trial.
struct TrialContext {
  ExperimentConfig config;
  Index m = 0;
  double sigma2 = 0.0;
  std::shared_ptr<const Dictionary> rx_dictionary;
  std::shared_ptr<const Dictionary> tx_dictionary;
};

inline TrialContext prepare(const ExperimentConfig& config) {
  validate(config);
  TrialContext ctx;
  ctx.config = config;
  ctx.m = resolved_m(config);
  ctx.sigma2 = noise_variance_from_snr_db(config.snr_db);
  if (config.mode == SaseMode::hybrid) {
    ctx.rx_dictionary = std::make_shared<const Dictionary>(
        default_dictionary(ArrayGeometry::of(config.geometry, config.n_r), config.dict_size));
    ctx.tx_dictionary = std::make_shared<const Dictionary>(
        default_dictionary(ArrayGeometry::of(config.geometry, config.n_t), config.dict_size));
  }
  return ctx;
}

/// Channel of trial `trial`; depends only on (seed, trial) and the geometry.
inline ChannelInstance draw_channel(const ExperimentConfig& c, Index trial) {
  RngStream rng(c.seed, static_cast<std::uint64_t>(trial), StreamPurpose::channel);
  const PathSet paths = sample_paths(c.true_l, c.geometry, rng);
  return assemble_channel(paths, ArrayGeometry::of(c.geometry, c.n_r), ArrayGeometry::of(c.geometry, c.n_t));
}

namespace detail {

template <typename E>
[[noreturn]] inline void rethrow_as(const E& e, const std::string& tag) {
  throw E(tag + e.what());
}

/// Rethrows the active library exception with a prefix, keeping its type.
[[noreturn]] inline void rethrow_tagged(const std::string& tag) {
  try {
    throw;
  } catch (const InvalidDimension& e) { rethrow_as(e, tag);
  } catch (const InvalidParameter& e) { rethrow_as(e, tag);
  } catch (const ShapeError& e) { rethrow_as(e, tag);
  } catch (const ConfigError& e) { rethrow_as(e, tag);
  } catch (const ContractViolation& e) { rethrow_as(e, tag);
  } catch (const EstimationFailure& e) { rethrow_as(e, tag);
  } catch (const IllConditioned& e) { rethrow_as(e, tag);
  } catch (const SingularMatrix& e) { rethrow_as(e, tag);
  } catch (const UndefinedMetric& e) { rethrow_as(e, tag);
  } catch (const NumericalError& e) { rethrow_as(e, tag);
  }
}

}  // namespace detail

inline AccuracyReport run_trial(const TrialContext& ctx, Index trial) {
  const ExperimentConfig& c = ctx.config;
  try {
    const ChannelInstance ch = draw_channel(c, trial);
    RngStream noise_rng(c.seed, static_cast<std::uint64_t>(trial), StreamPurpose::noise);
    NoiseModel noise(ctx.sigma2, noise_rng);

    SaseParams params;
    params.m = ctx.m;
    params.m_rf = c.m_rf;
    params.n_rf = c.n_rf;
    params.paths = resolved_assumed_l(c);
    params.mode = c.mode;
    params.rx_dictionary = ctx.rx_dictionary;
    params.tx_dictionary = ctx.tx_dictionary;
    const SaseResult res = run_sase(ch, params, noise);

    const Index l = c.true_l;
    const Index k = std::min(l, res.paths_used);
    const CMatrix& w_full = res.w_hat.product;
    const CMatrix& f_full = res.f_hat.product;
    // Frames are ordered by estimation-stage singular values; the leading k
    // columns are the dominant modes compared against the true channel.
    const CMatrix w = w_full.leftCols(k);
    const CMatrix f = f_full.leftCols(k);

    AccuracyReport r;
    r.eta = eta(w, f, ch.matrix);
    r.eta_c = eta_c(w, ch.matrix);
    r.eta_r = eta_r(f, ch.matrix);
    r.rate = spectrum_efficiency(w, f, ch.matrix, ctx.sigma2, k);
    r.gamma = effective_snr(w, f, ch.matrix, ctx.sigma2, k);
    r.rate_perfect_csi = spectrum_efficiency(ch.left_frame(l), ch.right_frame(l), ch.matrix, ctx.sigma2, l);
    r.col_bound = column_bound(ctx.sigma2, ch.column_prefix(ctx.m), l, c.n_r);
    r.row_bound = k == l ? row_bound(ctx.sigma2, w_full.adjoint() * ch.matrix, l, c.n_t,
                                     std::max(l, res.paths_used))
                         : 0.0;
    r.joint_bound = joint_bound(w, ch.left_frame(l), f, ch.right_frame(l));
    r.delta1 = res.w_hat.residual;
    r.delta2 = res.f_hat.residual;
    r.channel_uses = res.stage1.channel_uses + res.stage2.channel_uses;
    r.paths_used = res.paths_used;

    const ChannelEstimate est = reconstruct_channel(w_full, f_full, res.stage1.y_post_dft, res.stage2.q_c);
    r.nmse = nmse(ch.matrix, est.dense());
    return r;
  } catch (const Error&) {
    detail::rethrow_tagged("trial " + std::to_string(trial) + ": ");
  }
}

/// Deterministic for a fixed (config, trial).
inline AccuracyReport run_trial(const ExperimentConfig& config, Index trial) {
  return run_trial(prepare(config), trial);
}

/// Runs `body(i)` for i in [0, count) on up to `threads` workers. Results must
/// be written by index; the lowest-index failure is rethrown.
template <typename Body>
void parallel_for(Index count, unsigned threads, Body&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<Index>(threads, std::max<Index>(count, 1)));
  if (threads <= 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<Index> next{0};
  std::mutex guard;
  Index failed_at = std::numeric_limits<Index>::max();
  std::exception_ptr failure;
  auto worker = [&] {
    for (Index i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(guard);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::vector<AccuracyReport> run_trials(const ExperimentConfig& config) {
  const TrialContext ctx = prepare(config);
  std::vector<AccuracyReport> out(static_cast<std::size_t>(config.trials));
  parallel_for(config.trials, config.threads,
               [&](Index i) { out[static_cast<std::size_t>(i)] = run_trial(ctx, i); });
  return out;
}

struct Stat {
  double mean = 0.0;
  double se = 0.0;  ///< standard error of the mean (sample sd / sqrt(n))

  bool operator==(const Stat&) const = default;
};

inline Stat summarize(const std::vector<double>& xs) {
  Stat s;
  const auto n = static_cast<double>(xs.size());
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= n;
  if (xs.size() > 1 && std::isfinite(s.mean)) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return s;
}

struct SweepRow {
  double sweep_var = 0.0;
  Stat eta, eta_c, eta_r, nmse, rate, rate_perfect_csi, gamma;
  Stat col_bound, row_bound, joint_bound, delta1, delta2, paths_used;
  Index channel_uses = 0;
  Index trials = 0;

  bool operator==(const SweepRow&) const = default;
};

/// Numerical rank of the sampled block H_S across trials.
struct RankRow {
  Index m = 0;
  double rank_mean = 0.0;
  Index rank_min = 0;
  Index rank_max = 0;
  Index trials = 0;

  bool operator==(const RankRow&) const = default;
};

struct SweepResult {
  SweepKind sweep = SweepKind::snr;
  ExperimentConfig config;
  std::vector<SweepRow> rows;
  std::vector<RankRow> rank_rows;
  double wall_time_s = 0.0;

  Index grid_size() const { return static_cast<Index>(sweep == SweepKind::rank_check ? rank_rows.size() : rows.size()); }

  bool operator==(const SweepResult&) const = default;
};

inline SweepRow aggregate(double sweep_var, const std::vector<AccuracyReport>& reports) {
  SweepRow row;
  row.sweep_var = sweep_var;
  row.trials = static_cast<Index>(reports.size());
  auto field = [&](auto member) {
    std::vector<double> xs;
    xs.reserve(reports.size());
    for (const auto& r : reports) xs.push_back(static_cast<double>(r.*member));
    return summarize(xs);
  };
  row.eta = field(&AccuracyReport::eta);
  row.eta_c = field(&AccuracyReport::eta_c);
  row.eta_r = field(&AccuracyReport::eta_r);
  row.nmse = field(&AccuracyReport::nmse);
  row.rate = field(&AccuracyReport::rate);
  row.rate_perfect_csi = field(&AccuracyReport::rate_perfect_csi);
  row.gamma = field(&AccuracyReport::gamma);
  row.col_bound = field(&AccuracyReport::col_bound);
  row.row_bound = field(&AccuracyReport::row_bound);
  row.joint_bound = field(&AccuracyReport::joint_bound);
  row.delta1 = field(&AccuracyReport::delta1);
  row.delta2 = field(&AccuracyReport::delta2);
  row.paths_used = field(&AccuracyReport::paths_used);
  row.channel_uses = reports.empty() ? 0 : reports.front().channel_uses;
  return row;
}

/// Grid points of a sweep as (sweep-variable value, point configuration).
inline std::vector<std::pair<double, ExperimentConfig>> sweep_points(const ExperimentConfig& c) {
  std::vector<std::pair<double, ExperimentConfig>> pts;
  switch (c.sweep) {
    case SweepKind::snr:
      for (double s : c.snr_db_grid) {
        ExperimentConfig p = c;
        p.snr_db = s;
        pts.emplace_back(s, p);
      }
      break;
    case SweepKind::channel_uses:
    case SweepKind::rank_check:
      for (Index m : c.m_grid) {
        ExperimentConfig p = c;
        p.m = m;
        p.k_target = 0;
        const double x = c.sweep == SweepKind::rank_check
                             ? static_cast<double>(m)
                             : static_cast<double>(m * c.n_r / std::max<Index>(c.m_rf, 1) + (c.n_t - m));
        pts.emplace_back(x, p);
      }
      break;
    case SweepKind::paths:
      for (Index l : c.l_grid) {
        ExperimentConfig p = c;
        p.true_l = l;
        pts.emplace_back(static_cast<double>(l), p);
      }
      break;
    case SweepKind::mismatch:
      for (Index l : c.mismatch_grid) {
        ExperimentConfig p = c;
        p.assumed_l = l;
        pts.emplace_back(static_cast<double>(l), p);
      }
      break;
  }
  return pts;
}

inline RankRow rank_check_point(const ExperimentConfig& c) {
  RankRow row;
  row.m = c.m;
  row.trials = c.trials;
  std::vector<Index> ranks(static_cast<std::size_t>(c.trials));
  parallel_for(c.trials, c.threads, [&](Index i) {
    ranks[static_cast<std::size_t>(i)] = numerical_rank(draw_channel(c, i).column_prefix(c.m), c.rank_tol);
  });
  row.rank_min = *std::min_element(ranks.begin(), ranks.end());
  row.rank_max = *std::max_element(ranks.begin(), ranks.end());
  double sum = 0.0;
  for (Index r : ranks) sum += static_cast<double>(r);
  row.rank_mean = sum / static_cast<double>(ranks.size());
  return row;
}

/// Validates every grid point, then runs `trials` trials at each.
inline SweepResult run_sweep(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const auto points = sweep_points(config);
  if (points.empty()) throw InvalidParameter("sweep '" + to_string(config.sweep) + "' has an empty grid");
  for (const auto& [x, p] : points) {
    try {
      validate(p);
    } catch (const ConfigError& e) {
      throw InvalidParameter(to_string(config.sweep) + " grid point " + std::to_string(x) + ": " + e.what());
    }
  }

  SweepResult out;
  out.sweep = config.sweep;
  out.config = config;
  for (const auto& [x, p] : points) {
    if (config.sweep == SweepKind::rank_check) {
      out.rank_rows.push_back(rank_check_point(p));
    } else {
      out.rows.push_back(aggregate(x, run_trials(p)));
    }
  }
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace sase
