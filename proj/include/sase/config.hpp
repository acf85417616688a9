#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sase/common.hpp"
#include "sase/harness.hpp"

namespace sase {

// Flat `key = value` configuration text. Lists are comma separated or given
// as an inclusive range `start:step:stop`. Lines starting with '#' are
// ignored, as is anything after a '#' on a line.

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

[[noreturn]] inline void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw InvalidParameter("config key '" + std::string(key) + "': cannot read '" + std::string(value) + "' as " +
                         expected);
}

inline double parse_double(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v == "inf" || v == "+inf") return kInf;
  if (v == "-inf") return -kInf;
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end || v.empty()) bad_value(key, v, "a number");
  return x;
}

template <typename Int>
inline Int parse_int(std::string_view key, std::string_view v) {
  v = trim(v);
  Int x = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end || v.empty()) bad_value(key, v, "an integer");
  return x;
}

template <typename T, typename Parse>
inline std::vector<T> parse_list(std::string_view key, std::string_view v, Parse parse) {
  v = trim(v);
  std::vector<T> out;
  if (v.empty()) return out;
  const auto range = split(v, ':');
  if (range.size() == 3) {
    const T a = parse(key, range[0]);
    const T step = parse(key, range[1]);
    const T b = parse(key, range[2]);
    if (!(step > T(0)) || b < a) bad_value(key, v, "an increasing range start:step:stop");
    const auto count = static_cast<long long>(std::floor(static_cast<double>(b - a) / static_cast<double>(step) + 1e-9));
    if (count > 100000) bad_value(key, v, "a range of at most 100000 points");
    for (long long i = 0; i <= count; ++i) out.push_back(a + static_cast<T>(i) * step);
    return out;
  }
  if (range.size() != 1) bad_value(key, v, "a list or start:step:stop range");
  for (auto part : split(v, ',')) out.push_back(parse(key, part));
  return out;
}

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

template <typename T>
inline std::string join(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>) s += format_double(xs[i]);
    else s += std::to_string(xs[i]);
  }
  return s;
}

}  // namespace detail

inline SaseMode parse_mode(std::string_view v) {
  if (v == "hybrid") return SaseMode::hybrid;
  if (v == "unconstrained") return SaseMode::unconstrained;
  detail::bad_value("mode", v, "hybrid|unconstrained");
}

inline ArrayKind parse_geometry(std::string_view v) {
  if (v == "ula" || v == "ULA") return ArrayKind::ula;
  if (v == "upa" || v == "UPA") return ArrayKind::upa;
  detail::bad_value("geometry", v, "ula|upa");
}

inline SweepKind parse_sweep(std::string_view v) {
  if (v == "snr") return SweepKind::snr;
  if (v == "channel_uses" || v == "channel-uses") return SweepKind::channel_uses;
  if (v == "paths") return SweepKind::paths;
  if (v == "mismatch") return SweepKind::mismatch;
  if (v == "rank_check" || v == "rank-check") return SweepKind::rank_check;
  detail::bad_value("sweep", v, "snr|channel_uses|paths|mismatch|rank_check");
}

/// Applies one setting; unknown keys are rejected.
inline void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value) {
  using detail::parse_double;
  using detail::parse_int;
  key = detail::trim(key);
  value = detail::trim(value);
  auto idx = [&] { return parse_int<Index>(key, value); };
  auto idx_list = [&] { return detail::parse_list<Index>(key, value, parse_int<Index>); };

  if (key == "n_r") c.n_r = idx();
  else if (key == "n_t") c.n_t = idx();
  else if (key == "m_rf") c.m_rf = idx();
  else if (key == "n_rf") c.n_rf = idx();
  else if (key == "true_l") c.true_l = idx();
  else if (key == "assumed_l") {
    if (value == "auto") c.assumed_l = kAssumedAuto;
    else if (value == "match") c.assumed_l = kAssumedMatchTrue;
    else {
      c.assumed_l = idx();
      if (c.assumed_l < 1) detail::bad_value(key, value, "a positive integer, 'auto' or 'match'");
    }
  } else if (key == "m") {
    c.m = idx();
    c.k_target = 0;
  } else if (key == "k") c.k_target = idx();
  else if (key == "snr_db_grid") c.snr_db_grid = detail::parse_list<double>(key, value, parse_double);
  else if (key == "snr_db") c.snr_db = parse_double(key, value);
  else if (key == "m_grid") c.m_grid = idx_list();
  else if (key == "l_grid") c.l_grid = idx_list();
  else if (key == "mismatch_grid") c.mismatch_grid = idx_list();
  else if (key == "trials") c.trials = idx();
  else if (key == "seed") c.seed = parse_int<std::uint64_t>(key, value);
  else if (key == "mode") c.mode = parse_mode(value);
  else if (key == "geometry") c.geometry = parse_geometry(value);
  else if (key == "dict_size") c.dict_size = idx();
  else if (key == "sweep") c.sweep = parse_sweep(value);
  else if (key == "rank_tol") c.rank_tol = parse_double(key, value);
  else if (key == "threads") c.threads = parse_int<unsigned>(key, value);
  else throw InvalidParameter("unknown config key '" + std::string(key) + "'");
}

/// Parses configuration text on top of `base`.
inline ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {}) {
  std::size_t line_no = 0;
  for (auto line : detail::split(text, '\n')) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InvalidParameter("config line " + std::to_string(line_no) + ": expected 'key = value'");
    try {
      apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw InvalidParameter("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

inline std::string assumed_l_text(Index a) {
  if (a == kAssumedAuto) return "auto";
  if (a == kAssumedMatchTrue) return "match";
  return std::to_string(a);
}

/// Inverse of parse_config: every key, one per line.
inline std::string format_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "n_r = " << c.n_r << "\n"
    << "n_t = " << c.n_t << "\n"
    << "m_rf = " << c.m_rf << "\n"
    << "n_rf = " << c.n_rf << "\n"
    << "true_l = " << c.true_l << "\n"
    << "assumed_l = " << assumed_l_text(c.assumed_l) << "\n"
    << "m = " << c.m << "\n";
  if (c.k_target > 0) o << "k = " << c.k_target << "\n";
  o << "snr_db_grid = " << detail::join(c.snr_db_grid) << "\n"
    << "snr_db = " << detail::format_double(c.snr_db) << "\n"
    << "m_grid = " << detail::join(c.m_grid) << "\n"
    << "l_grid = " << detail::join(c.l_grid) << "\n"
    << "mismatch_grid = " << detail::join(c.mismatch_grid) << "\n"
    << "trials = " << c.trials << "\n"
    << "seed = " << c.seed << "\n"
    << "mode = " << to_string(c.mode) << "\n"
    << "geometry = " << to_string(c.geometry) << "\n"
    << "dict_size = " << c.dict_size << "\n"
    << "sweep = " << to_string(c.sweep) << "\n"
    << "rank_tol = " << detail::format_double(c.rank_tol) << "\n"
    << "threads = " << c.threads << "\n";
  return o.str();
}

}  // namespace sase
