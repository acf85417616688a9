// Command-line front end for the SASE experiment harness.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sase/sase.hpp"

namespace {

enum ExitCode { kOk = 0, kIoError = 1, kConfigError = 2, kNumericalError = 3 };

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> settings;  // key=value overrides
  std::optional<std::string> sweep;
  std::optional<std::uint64_t> seed;
  std::optional<long> trials;
  std::optional<std::string> mode;
  std::optional<std::string> geometry;
  std::optional<double> snr_db;
  std::optional<long> m;
  std::optional<long> k;
  std::optional<std::string> assumed_l;
  std::optional<long> dict_size;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_sweep) {
  cmd->add_option("--config,-c", o.config_path, "key = value configuration file");
  cmd->add_option("--set", o.settings, "override a configuration key (key=value), repeatable");
  if (with_sweep) cmd->add_option("--sweep", o.sweep, "snr | channel_uses | paths | mismatch | rank_check");
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--trials", o.trials, "trials per grid point");
  cmd->add_option("--mode", o.mode, "hybrid | unconstrained");
  cmd->add_option("--geometry", o.geometry, "ula | upa");
  cmd->add_option("--snr", o.snr_db, "SNR in dB for sweeps other than snr");
  cmd->add_option("--m", o.m, "stage-one column budget");
  cmd->add_option("--k", o.k, "total channel-use target (sets m)");
  cmd->add_option("--assumed-l", o.assumed_l, "estimator path count: integer, auto or match");
  cmd->add_option("--dict-size", o.dict_size, "dictionary atoms (0 = default)");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

sase::ExperimentConfig resolve(const CommonOptions& o) {
  sase::ExperimentConfig c;
  if (!o.config_path.empty()) c = sase::load_config(o.config_path);
  auto set = [&c](const char* key, const std::string& value) { sase::apply_setting(c, key, value); };
  if (o.sweep) set("sweep", *o.sweep);
  if (o.seed) set("seed", std::to_string(*o.seed));
  if (o.trials) set("trials", std::to_string(*o.trials));
  if (o.mode) set("mode", *o.mode);
  if (o.geometry) set("geometry", *o.geometry);
  if (o.snr_db) c.snr_db = *o.snr_db;
  if (o.m) set("m", std::to_string(*o.m));
  if (o.k) set("k", std::to_string(*o.k));
  if (o.assumed_l) set("assumed_l", *o.assumed_l);
  if (o.dict_size) set("dict_size", std::to_string(*o.dict_size));
  if (o.threads) set("threads", std::to_string(*o.threads));
  for (const auto& kv : o.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw sase::InvalidParameter("--set expects key=value, got '" + kv + "'");
    sase::apply_setting(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return c;
}

/// Explicit --out wins; otherwise SASE_OUTPUT_DIR names a directory for a
/// default file name; otherwise results go to stdout.
std::optional<std::filesystem::path> output_path(const std::string& out, const sase::ExperimentConfig& c,
                                                 sase::OutputFormat fmt) {
  if (!out.empty() && out != "-") return std::filesystem::path(out);
  if (out == "-") return std::nullopt;
  if (const char* dir = std::getenv("SASE_OUTPUT_DIR"); dir != nullptr && *dir != '\0')
    return std::filesystem::path(dir) /
           ("sase_" + sase::to_string(c.sweep) + (fmt == sase::OutputFormat::json ? ".json" : ".csv"));
  return std::nullopt;
}

int run_and_emit(const sase::ExperimentConfig& c, const std::string& out, const std::string& format) {
  const sase::OutputFormat fmt = sase::parse_format(format);
  const sase::SweepResult res = sase::run_sweep(c);
  if (auto path = output_path(out, c, fmt)) {
    sase::emit(res, fmt, *path);
    std::cerr << "wrote " << res.grid_size() << " rows to " << path->string() << " (" << res.wall_time_s
              << " s)\n";
  } else {
    std::cout << sase::render(res, fmt);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SASE channel subspace estimation experiments"};
  app.require_subcommand(1);

  CommonOptions run_opts, rank_opts, show_opts;
  std::string run_out, run_format = "csv", rank_out, rank_format = "csv";

  auto* run = app.add_subcommand("run", "run a Monte Carlo sweep and write CSV or JSON");
  add_common(run, run_opts, true);
  run->add_option("--out,-o", run_out, "output file ('-' for stdout)");
  run->add_option("--format,-f", run_format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  auto* rank = app.add_subcommand("rank-check", "numerical rank of the sampled column block");
  add_common(rank, rank_opts, false);
  rank->add_option("--out,-o", rank_out, "output file ('-' for stdout)");
  rank->add_option("--format,-f", rank_format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  sase::BudgetParams budget;
  auto* table = app.add_subcommand("budget-table", "channel-use formulas of SASE and competing methods");
  table->add_option("--paths", budget.paths, "L");
  table->add_option("--n-r", budget.n_r, "receive antennas");
  table->add_option("--n-t", budget.n_t, "transmit antennas");
  table->add_option("--m-rf", budget.m_rf, "receive RF chains");
  table->add_option("--n-rf", budget.n_rf, "transmit RF chains");
  table->add_option("--m", budget.m, "SASE column budget");
  table->add_option("--grid", budget.grid, "sparse-recovery grid size G");
  table->add_option("--krylov", budget.krylov, "Arnoldi iterations q");
  table->add_option("--beams", budget.beams, "ACE beams per stage s");
  table->add_option("--resolution", budget.resolution, "ACE angular resolution N_m");

  auto* show = app.add_subcommand("show-config", "print the resolved configuration");
  add_common(show, show_opts, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return run_and_emit(resolve(run_opts), run_out, run_format);
    if (*rank) {
      sase::ExperimentConfig c = resolve(rank_opts);
      c.sweep = sase::SweepKind::rank_check;
      return run_and_emit(c, rank_out, rank_format);
    }
    if (*table) {
      std::cout << "method,channel_uses,order_of_magnitude\n";
      for (const auto& row : sase::budget_table(budget))
        std::cout << row.method << ',' << sase::detail::format_double(row.channel_uses) << ','
                  << (row.order_of_magnitude ? "true" : "false") << "\n";
      return kOk;
    }
    if (*show) {
      const sase::ExperimentConfig c = resolve(show_opts);
      sase::validate(c);
      std::cout << sase::format_config(c);
      return kOk;
    }
  } catch (const sase::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const sase::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kOk;
}
