// Command-line front end: train, sweep, report.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dea/artifacts.hpp"
#include "dea/config.hpp"
#include "dea/errors.hpp"
#include "dea/trainer.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitRunFailed = 4;

struct Overrides {
  std::string config;
  std::string seed;
  std::string seeds;
  std::string method;
  std::string env;
  std::string regime;
  std::string out_dir;
};

dea::ResolvedConfig load(const Overrides& o) {
  dea::ConfigDocument doc;
  std::string origin = "<defaults>";
  if (!o.config.empty()) {
    doc = dea::read_config_file(o.config);
    origin = o.config;
  }
  // Flags win over file values.
  auto set = [&](const char* key, const std::string& v) {
    if (!v.empty()) doc[key] = dea::ConfigEntry{v, 0};
  };
  set("seed", o.seed);
  set("seeds", o.seeds);
  set("method", o.method);
  set("env", o.env);
  set("regime", o.regime);
  set("out_dir", o.out_dir);
  return dea::resolve_config(doc, origin);
}

int cmd_train(const Overrides& o) {
  const dea::ResolvedConfig rc = load(o);
  if (rc.sweep.envs.size() != 1 || rc.sweep.methods.size() != 1) {
    throw dea::ConfigError("train takes exactly one env and one method; use sweep for lists");
  }
  const dea::RunConfig& cfg = rc.run;
  const fs::path dir = cfg.out_dir.empty()
                           ? dea::default_out_root() /
                                 dea::artifacts::run_dir_name(cfg.env, dea::method_name(cfg.method), cfg.seed)
                           : fs::path(cfg.out_dir);
  const auto res = dea::train(cfg, dir);
  std::cout << "run complete: " << dir.string() << "\n"
            << "  final_return " << dea::artifacts::format_real(res.final_return) << "\n"
            << "  aulc " << dea::artifacts::format_real(res.aulc) << "\n";
  return 0;
}

int cmd_sweep(const Overrides& o, int jobs) {
  const dea::ResolvedConfig rc = load(o);
  const fs::path root = rc.run.out_dir.empty() ? dea::default_out_root() : fs::path(rc.run.out_dir);
  const auto rows = dea::sweep(rc.run, rc.sweep, root, jobs, &std::cerr);
  int failed = 0;
  for (const auto& r : rows) failed += r.status != "ok";
  std::cout << "sweep complete: " << rows.size() - failed << " ok, " << failed << " failed; summary at "
            << (root / "summary.csv").string() << "\n";
  return failed == 0 ? 0 : kExitRunFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble soft actor-critic with directional aggregation"};
  app.require_subcommand(1);

  Overrides train_o;
  auto* train = app.add_subcommand("train", "Train one run");
  train->add_option("--config", train_o.config, "Config file (key = value)")->check(CLI::ExistingFile);
  train->add_option("--seed", train_o.seed, "Seed");
  train->add_option("--method", train_o.method, "sac | redq | dea");
  train->add_option("--env", train_o.env, "pendulum | pointreach");
  train->add_option("--regime", train_o.regime, "Learning regime preset");
  train->add_option("--out-dir", train_o.out_dir, "Output directory");

  Overrides sweep_o;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Train every env x method x seed combination");
  sweep->add_option("--config", sweep_o.config, "Config file (key = value)")->check(CLI::ExistingFile);
  sweep->add_option("--seeds", sweep_o.seeds, "Seeds, e.g. 1..5 or 1,2,3");
  sweep->add_option("--method", sweep_o.method, "Comma-separated methods");
  sweep->add_option("--env", sweep_o.env, "Comma-separated environments");
  sweep->add_option("--regime", sweep_o.regime, "Learning regime preset");
  sweep->add_option("--out-dir", sweep_o.out_dir, "Output root");
  sweep->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  std::vector<std::string> report_in;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Aggregate sweeps into report.csv and SVG charts");
  report->add_option("--in", report_in, "Sweep or run directories")->required();
  report->add_option("--out", report_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train) return cmd_train(train_o);
    if (*sweep) return cmd_sweep(sweep_o, jobs);
    if (*report) {
      std::vector<fs::path> in(report_in.begin(), report_in.end());
      dea::artifacts::write_report(in, report_out);
      std::cout << "report written to " << report_out << "\n";
      return 0;
    }
  } catch (const dea::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dea::NumericError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
