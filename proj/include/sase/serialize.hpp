#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sase/channel_model.hpp"
#include "sase/common.hpp"
#include "sase/config.hpp"
#include "sase/harness.hpp"
#include "sase/sounding.hpp"

namespace sase {

using Json = nlohmann::json;

// Numbers that JSON cannot carry (inf, nan) travel as the strings "inf",
// "-inf" and "nan".

inline Json number_to_json(double x) {
  if (std::isfinite(x)) return x;
  return detail::format_double(x);
}

inline double number_from_json(const Json& j) {
  if (j.is_string()) return detail::parse_double("json", j.get<std::string>());
  return j.get<double>();
}

/// Complex matrix as a row-major list of rows of [re, im] pairs.
inline Json matrix_to_json(const CMatrix& a) {
  Json rows = Json::array();
  for (Index r = 0; r < a.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < a.cols(); ++c) row.push_back({a(r, c).real(), a(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline CMatrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw ShapeError("matrix JSON must be an array of rows");
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows > 0 ? static_cast<Index>(j[0].size()) : 0;
  CMatrix a(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (static_cast<Index>(row.size()) != cols) throw ShapeError("matrix JSON rows differ in length");
    for (Index c = 0; c < cols; ++c) {
      const Json& z = row[static_cast<std::size_t>(c)];
      if (!z.is_array() || z.size() != 2) throw ShapeError("matrix entries must be [re, im] pairs");
      a(r, c) = Complex(z[0].get<double>(), z[1].get<double>());
    }
  }
  return a;
}

inline Json vector_to_json(const RVector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline RVector vector_from_json(const Json& j) {
  RVector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

inline Json paths_to_json(const PathSet& p) {
  Json j;
  j["kind"] = to_string(p.kind);
  j["aoa"] = p.aoa;
  j["aod"] = p.aod;
  if (p.kind == ArrayKind::upa) {
    j["aoa_elevation"] = p.aoa_elevation;
    j["aod_elevation"] = p.aod_elevation;
  }
  Json gains = Json::array();
  for (const auto& g : p.gains) gains.push_back({g.real(), g.imag()});
  j["gains"] = std::move(gains);
  if (p.cluster_shape) j["cluster_shape"] = {p.cluster_shape->clusters, p.cluster_shape->rays};
  return j;
}

inline PathSet paths_from_json(const Json& j) {
  PathSet p;
  p.kind = parse_geometry(j.at("kind").get<std::string>());
  p.aoa = j.at("aoa").get<std::vector<double>>();
  p.aod = j.at("aod").get<std::vector<double>>();
  if (j.contains("aoa_elevation")) p.aoa_elevation = j["aoa_elevation"].get<std::vector<double>>();
  if (j.contains("aod_elevation")) p.aod_elevation = j["aod_elevation"].get<std::vector<double>>();
  for (const auto& g : j.at("gains")) p.gains.emplace_back(g.at(0).get<double>(), g.at(1).get<double>());
  if (j.contains("cluster_shape"))
    p.cluster_shape = ClusterShape{j["cluster_shape"][0].get<Index>(), j["cluster_shape"][1].get<Index>()};
  return p;
}

inline Json channel_to_json(const ChannelInstance& ch) {
  return {{"matrix", matrix_to_json(ch.matrix)},
          {"paths", paths_to_json(ch.paths)},
          {"true_left", matrix_to_json(ch.true_left)},
          {"true_singulars", vector_to_json(ch.true_singulars)},
          {"true_right", matrix_to_json(ch.true_right)}};
}

inline ChannelInstance channel_from_json(const Json& j) {
  ChannelInstance ch;
  ch.matrix = matrix_from_json(j.at("matrix"));
  ch.paths = paths_from_json(j.at("paths"));
  ch.true_left = matrix_from_json(j.at("true_left"));
  ch.true_singulars = vector_from_json(j.at("true_singulars"));
  ch.true_right = matrix_from_json(j.at("true_right"));
  return ch;
}

inline Json observation_to_json(const StageOneObservation& o) {
  return {{"stage", 1}, {"y_s", matrix_to_json(o.y_post_dft)}, {"m", o.m}, {"channel_uses", o.channel_uses}};
}

inline Json observation_to_json(const StageTwoObservation& o) {
  return {{"stage", 2}, {"q_c", matrix_to_json(o.q_c)}, {"channel_uses", o.channel_uses}};
}

inline StageOneObservation stage_one_from_json(const Json& j) {
  return {matrix_from_json(j.at("y_s")), j.at("m").get<Index>(), j.at("channel_uses").get<Index>()};
}

inline StageTwoObservation stage_two_from_json(const Json& j) {
  return {matrix_from_json(j.at("q_c")), j.at("channel_uses").get<Index>()};
}

// ---------------------------------------------------------------------------
// Sweep results

inline const char* const kCsvHeader =
    "sweep_var,eta_mean,eta_se,eta_c_mean,eta_c_se,eta_r_mean,eta_r_se,nmse_mean,nmse_se,rate_mean,rate_se,"
    "rate_perfect_csi,col_bound_mean,row_bound_mean,joint_bound_mean,delta1_mean,delta2_mean,channel_uses,trials";

inline const char* const kRankCsvHeader = "m,rank_mean,rank_min,rank_max,trials";

inline Json config_to_json(const ExperimentConfig& c) {
  Json grid = Json::array();
  for (double x : c.snr_db_grid) grid.push_back(number_to_json(x));
  return {{"n_r", c.n_r},
          {"n_t", c.n_t},
          {"m_rf", c.m_rf},
          {"n_rf", c.n_rf},
          {"true_l", c.true_l},
          {"assumed_l", assumed_l_text(c.assumed_l)},
          {"m", c.m},
          {"k", c.k_target},
          {"snr_db_grid", std::move(grid)},
          {"snr_db", number_to_json(c.snr_db)},
          {"m_grid", c.m_grid},
          {"l_grid", c.l_grid},
          {"mismatch_grid", c.mismatch_grid},
          {"trials", c.trials},
          {"seed", c.seed},
          {"mode", to_string(c.mode)},
          {"geometry", to_string(c.geometry)},
          {"dict_size", c.dict_size},
          {"sweep", to_string(c.sweep)},
          {"rank_tol", c.rank_tol},
          {"threads", c.threads}};
}

inline ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  c.n_r = j.at("n_r").get<Index>();
  c.n_t = j.at("n_t").get<Index>();
  c.m_rf = j.at("m_rf").get<Index>();
  c.n_rf = j.at("n_rf").get<Index>();
  c.true_l = j.at("true_l").get<Index>();
  apply_setting(c, "assumed_l", j.at("assumed_l").get<std::string>());
  c.m = j.at("m").get<Index>();
  c.k_target = j.at("k").get<Index>();
  c.snr_db_grid.clear();
  for (const auto& x : j.at("snr_db_grid")) c.snr_db_grid.push_back(number_from_json(x));
  c.snr_db = number_from_json(j.at("snr_db"));
  c.m_grid = j.at("m_grid").get<std::vector<Index>>();
  c.l_grid = j.at("l_grid").get<std::vector<Index>>();
  c.mismatch_grid = j.at("mismatch_grid").get<std::vector<Index>>();
  c.trials = j.at("trials").get<Index>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.mode = parse_mode(j.at("mode").get<std::string>());
  c.geometry = parse_geometry(j.at("geometry").get<std::string>());
  c.dict_size = j.at("dict_size").get<Index>();
  c.sweep = parse_sweep(j.at("sweep").get<std::string>());
  c.rank_tol = j.at("rank_tol").get<double>();
  c.threads = j.at("threads").get<unsigned>();
  return c;
}

inline Json row_to_json(const SweepRow& r) {
  return {{"sweep_var", number_to_json(r.sweep_var)},
          {"eta_mean", number_to_json(r.eta.mean)},
          {"eta_se", number_to_json(r.eta.se)},
          {"eta_c_mean", number_to_json(r.eta_c.mean)},
          {"eta_c_se", number_to_json(r.eta_c.se)},
          {"eta_r_mean", number_to_json(r.eta_r.mean)},
          {"eta_r_se", number_to_json(r.eta_r.se)},
          {"nmse_mean", number_to_json(r.nmse.mean)},
          {"nmse_se", number_to_json(r.nmse.se)},
          {"rate_mean", number_to_json(r.rate.mean)},
          {"rate_se", number_to_json(r.rate.se)},
          {"rate_perfect_csi", number_to_json(r.rate_perfect_csi.mean)},
          {"col_bound_mean", number_to_json(r.col_bound.mean)},
          {"row_bound_mean", number_to_json(r.row_bound.mean)},
          {"joint_bound_mean", number_to_json(r.joint_bound.mean)},
          {"delta1_mean", number_to_json(r.delta1.mean)},
          {"delta2_mean", number_to_json(r.delta2.mean)},
          {"channel_uses", r.channel_uses},
          {"trials", r.trials},
          // Extra statistics beyond the CSV schema, kept so the row round-trips.
          {"extra",
           {{"rate_perfect_csi_se", number_to_json(r.rate_perfect_csi.se)},
            {"gamma_mean", number_to_json(r.gamma.mean)},
            {"gamma_se", number_to_json(r.gamma.se)},
            {"col_bound_se", number_to_json(r.col_bound.se)},
            {"row_bound_se", number_to_json(r.row_bound.se)},
            {"joint_bound_se", number_to_json(r.joint_bound.se)},
            {"delta1_se", number_to_json(r.delta1.se)},
            {"delta2_se", number_to_json(r.delta2.se)},
            {"paths_used_mean", number_to_json(r.paths_used.mean)},
            {"paths_used_se", number_to_json(r.paths_used.se)}}}};
}

inline SweepRow row_from_json(const Json& j) {
  auto num = [&](const Json& o, const char* k) { return number_from_json(o.at(k)); };
  SweepRow r;
  r.sweep_var = num(j, "sweep_var");
  r.eta = {num(j, "eta_mean"), num(j, "eta_se")};
  r.eta_c = {num(j, "eta_c_mean"), num(j, "eta_c_se")};
  r.eta_r = {num(j, "eta_r_mean"), num(j, "eta_r_se")};
  r.nmse = {num(j, "nmse_mean"), num(j, "nmse_se")};
  r.rate = {num(j, "rate_mean"), num(j, "rate_se")};
  r.col_bound.mean = num(j, "col_bound_mean");
  r.row_bound.mean = num(j, "row_bound_mean");
  r.joint_bound.mean = num(j, "joint_bound_mean");
  r.delta1.mean = num(j, "delta1_mean");
  r.delta2.mean = num(j, "delta2_mean");
  r.rate_perfect_csi.mean = num(j, "rate_perfect_csi");
  r.channel_uses = j.at("channel_uses").get<Index>();
  r.trials = j.at("trials").get<Index>();
  if (j.contains("extra")) {
    const Json& e = j["extra"];
    r.rate_perfect_csi.se = num(e, "rate_perfect_csi_se");
    r.gamma = {num(e, "gamma_mean"), num(e, "gamma_se")};
    r.col_bound.se = num(e, "col_bound_se");
    r.row_bound.se = num(e, "row_bound_se");
    r.joint_bound.se = num(e, "joint_bound_se");
    r.delta1.se = num(e, "delta1_se");
    r.delta2.se = num(e, "delta2_se");
    r.paths_used = {num(e, "paths_used_mean"), num(e, "paths_used_se")};
  }
  return r;
}

inline Json rank_row_to_json(const RankRow& r) {
  return {{"m", r.m}, {"rank_mean", r.rank_mean}, {"rank_min", r.rank_min}, {"rank_max", r.rank_max},
          {"trials", r.trials}};
}

inline RankRow rank_row_from_json(const Json& j) {
  return {j.at("m").get<Index>(), j.at("rank_mean").get<double>(), j.at("rank_min").get<Index>(),
          j.at("rank_max").get<Index>(), j.at("trials").get<Index>()};
}

inline Json to_json(const SweepResult& res) {
  Json rows = Json::array();
  if (res.sweep == SweepKind::rank_check)
    for (const auto& r : res.rank_rows) rows.push_back(rank_row_to_json(r));
  else
    for (const auto& r : res.rows) rows.push_back(row_to_json(r));
  return {{"sweep", to_string(res.sweep)},
          {"config", config_to_json(res.config)},
          {"wall_time_s", res.wall_time_s},
          {"rows", std::move(rows)}};
}

inline SweepResult sweep_result_from_json(const Json& j) {
  SweepResult res;
  res.sweep = parse_sweep(j.at("sweep").get<std::string>());
  res.config = config_from_json(j.at("config"));
  res.wall_time_s = j.at("wall_time_s").get<double>();
  for (const auto& r : j.at("rows")) {
    if (res.sweep == SweepKind::rank_check) res.rank_rows.push_back(rank_row_from_json(r));
    else res.rows.push_back(row_from_json(r));
  }
  return res;
}

inline void write_csv(std::ostream& out, const SweepResult& res) {
  using detail::format_double;
  if (res.sweep == SweepKind::rank_check) {
    out << kRankCsvHeader << "\n";
    for (const auto& r : res.rank_rows)
      out << r.m << ',' << format_double(r.rank_mean) << ',' << r.rank_min << ',' << r.rank_max << ','
          << r.trials << "\n";
    return;
  }
  out << kCsvHeader << "\n";
  for (const auto& r : res.rows) {
    const double cells[] = {r.sweep_var,        r.eta.mean,       r.eta.se,          r.eta_c.mean,
                            r.eta_c.se,         r.eta_r.mean,     r.eta_r.se,        r.nmse.mean,
                            r.nmse.se,          r.rate.mean,      r.rate.se,         r.rate_perfect_csi.mean,
                            r.col_bound.mean,   r.row_bound.mean, r.joint_bound.mean, r.delta1.mean,
                            r.delta2.mean};
    for (double x : cells) out << format_double(x) << ',';
    out << r.channel_uses << ',' << r.trials << "\n";
  }
}

enum class OutputFormat { csv, json };

inline OutputFormat parse_format(std::string_view v) {
  if (v == "csv") return OutputFormat::csv;
  if (v == "json") return OutputFormat::json;
  detail::bad_value("format", v, "csv|json");
}

inline std::string render(const SweepResult& res, OutputFormat format) {
  if (format == OutputFormat::json) return to_json(res).dump(2) + "\n";
  std::ostringstream o;
  write_csv(o, res);
  return o.str();
}

/// Writes the result to `path`; I/O failures name the path.
inline void emit(const SweepResult& res, OutputFormat format, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << render(res, format);
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

}  // namespace sase
