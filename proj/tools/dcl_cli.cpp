// dcl_cli: run cooperative-localization experiments and the acceptance suite.
//
//   dcl_cli simulate   --config run.cfg --out results/   per-trial CSVs + meta
//   dcl_cli montecarlo --preset all --trials 20          summary.csv + meta
//   dcl_cli check                                        acceptance criteria
//
// Exit codes: 0 success, 1 runtime/I-O failure, 2 configuration error,
// 3 acceptance failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dcl/acceptance.hpp"
#include "dcl/config_io.hpp"
#include "dcl/csv_export.hpp"
#include "dcl/scenario.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAcceptance = 3;

struct Overrides {
  std::string config_path;
  std::uint64_t seed = 0;
  int trials = 0;
  std::string preset;
  std::string filter;
  std::string fusion;
  std::string out;
  int threads = 0;
  std::vector<int> criteria;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* trials_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "key = value configuration file")
      ->check(CLI::ExistingFile);
  o.seed_opt = cmd->add_option("--seed", o.seed, "base seed (trial k uses seed + k)");
  o.trials_opt = cmd->add_option("--trials", o.trials, "trials per preset");
  cmd->add_option("--preset", o.preset, "1, 2, 3, a comma list, or all");
  cmd->add_option("--filter", o.filter, "both, dinekf or qdekf");
  cmd->add_option("--fusion", o.fusion, "ci or naive");
  cmd->add_option("--out", o.out, "output directory");
  o.threads_opt = cmd->add_option("--threads", o.threads, "worker threads");
}

dcl::RunConfig resolve(const Overrides& o) {
  dcl::RunConfig c = o.config_path.empty() ? dcl::RunConfig{} : dcl::load_config(o.config_path);
  if (o.seed_opt && o.seed_opt->count() > 0) c.scenario.seed = o.seed;
  if (o.trials_opt && o.trials_opt->count() > 0) c.scenario.trials = o.trials;
  if (o.threads_opt && o.threads_opt->count() > 0) c.threads = o.threads;
  if (!o.preset.empty()) c.presets = dcl::parse_presets(o.preset);
  if (!o.filter.empty()) dcl::set_filters(c.scenario, o.filter);
  if (!o.fusion.empty()) dcl::set_fusion(c.scenario, o.fusion);
  if (!o.out.empty()) c.output_dir = o.out;
  c.validate();
  return c;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

fs::path prepare_output(const dcl::RunConfig& c) {
  const fs::path dir(c.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
  }
  return dir;
}

void write_meta(const fs::path& dir, const dcl::RunConfig& c, const std::string& command) {
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(dcl::experiment_hash(c)));
  std::string meta = "schema_version = " + std::to_string(dcl::kCsvSchemaVersion) + "\n" +
                     "command = " + command + "\n" + "config_hash = " + hash + "\n" +
                     "seed = " + std::to_string(c.scenario.seed) + "\n" + "# effective config\n" +
                     dcl::canonical_text(c);
  write_file(dir / "meta", meta);
}

int cmd_simulate(const dcl::RunConfig& c) {
  const fs::path dir = prepare_output(c);
  const auto records = dcl::run_monte_carlo(c.scenario, c.presets, c.scenario.trials, c.threads);
  for (const auto& rec : records) write_file(dir / dcl::trial_file_name(rec), dcl::trial_csv(rec));
  write_meta(dir, c, "simulate");
  std::printf("wrote %zu trial files to %s\n", records.size(), dir.string().c_str());
  return 0;
}

int cmd_montecarlo(const dcl::RunConfig& c) {
  const fs::path dir = prepare_output(c);
  const auto records = dcl::run_monte_carlo(c.scenario, c.presets, c.scenario.trials, c.threads);
  const auto rows = dcl::summarize(records);
  const std::string csv = dcl::summary_csv(rows);
  write_file(dir / "summary.csv", csv);
  write_meta(dir, c, "montecarlo");
  std::printf("%-7s %-7s %7s %10s %10s %8s %8s\n", "preset", "filter", "trials", "PRMSE[m]",
              "ORMSE[deg]", "PNEES", "ONEES");
  for (const auto& row : rows) {
    std::printf("%-7d %-7s %7d %10.4f %10.4f %8.3f %8.3f\n", row.preset,
                dcl::to_string(row.filter).c_str(), row.summary.trials, row.summary.prmse,
                row.summary.ormse, row.summary.pnees, row.summary.onees);
  }
  return 0;
}

int cmd_check(const dcl::RunConfig& c, const std::vector<int>& criteria) {
  const auto results = dcl::run_acceptance(c, criteria);
  int failed = 0;
  for (const auto& r : results) {
    std::printf("%s\n", dcl::format_result(r).c_str());
    std::fflush(stdout);
    failed += r.pass() ? 0 : 1;
  }
  std::printf("%zu criteria, %d failed\n", results.size(), failed);
  return failed == 0 ? 0 : kExitAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed invariant EKF cooperative localization experiments"};
  app.require_subcommand(1);

  Overrides sim, mc, chk;
  CLI::App* simulate = app.add_subcommand("simulate", "write per-trial time-series CSVs");
  add_common(simulate, sim);
  CLI::App* montecarlo = app.add_subcommand("montecarlo", "write the averaged metric table");
  add_common(montecarlo, mc);
  CLI::App* check = app.add_subcommand("check", "run the acceptance criteria");
  add_common(check, chk);
  check->add_option("--criteria", chk.criteria, "subset of criteria ids (default: all)")
      ->check(CLI::Range(1, 9));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(resolve(sim));
    if (montecarlo->parsed()) return cmd_montecarlo(resolve(mc));
    return cmd_check(resolve(chk), chk.criteria);
  } catch (const dcl::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
