#pragma once

// Run artifacts: CSV schemas, sweep summaries, the cross-run report and its
// SVG line charts.
//
//   metrics.csv  step,eval_return_mean,eval_return_std
//   kappa.csv    step,kappa_bar,kappa,delta_mean,delta_bar_mean
//   summary.csv  env,method,seed,status,final_return,aulc
//   report.csv   env,method,final_return,iqm,aulc,rank_final,rank_iqm,rank_aulc
//
// Reals are written with 9 significant digits.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dea/metrics.hpp"

namespace dea::artifacts {

inline constexpr const char* kMetricsHeader = "step,eval_return_mean,eval_return_std";
inline constexpr const char* kKappaHeader = "step,kappa_bar,kappa,delta_mean,delta_bar_mean";
inline constexpr const char* kSummaryHeader = "env,method,seed,status,final_return,aulc";
inline constexpr const char* kReportHeader = "env,method,final_return,iqm,aulc,rank_final,rank_iqm,rank_aulc";

std::string format_real(double v);

struct KappaRecord {
  long step = 0;
  double kappa_bar = 0.0;
  double kappa = 0.0;
  double delta_mean = 0.0;
  double delta_bar_mean = 0.0;
};

struct SummaryRow {
  std::string env;
  std::string method;
  std::uint64_t seed = 0;
  std::string status;  // "ok" or "failed: <reason>"
  double final_return = 0.0;
  double aulc = 0.0;
};

// Throws std::runtime_error on I/O failure or a header mismatch.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<metrics::EvalRecord>& records);
std::vector<metrics::EvalRecord> read_metrics_csv(const std::filesystem::path& path);

void write_kappa_csv(const std::filesystem::path& path, const std::vector<KappaRecord>& records);
std::vector<KappaRecord> read_kappa_csv(const std::filesystem::path& path);

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);

// Subdirectory name of one sweep run.
std::string run_dir_name(const std::string& env, const std::string& method, std::uint64_t seed);

struct ReportRow {
  std::string env;  // "ALL" rows carry average ranks only
  std::string method;
  double final_return = 0.0;
  double iqm = 0.0;
  double aulc = 0.0;
  double rank_final = 0.0;
  double rank_iqm = 0.0;
  double rank_aulc = 0.0;
};

// Per env and method: final_return = seed mean of the last checkpoint,
// iqm = IQM over seeds of that value, aulc = seed mean of AULC. Ranks are
// per env; the "ALL" rows average them over envs.
std::vector<ReportRow> build_report_rows(const std::vector<SummaryRow>& runs);

// Collects successful runs from sweep directories (summary.csv) or single
// run directories (run.json + metrics.csv), writes report.csv plus
// learning_<env>.svg and kappa_<env>.svg. Everything is validated before
// the first file is written. Throws std::runtime_error.
void write_report(const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& out_dir);

// Minimal SVG line chart.
class LineChart {
 public:
  LineChart(std::string title, std::string x_label, std::string y_label);

  void add_line(const std::string& name, const std::vector<double>& xs, const std::vector<double>& ys);
  void add_band(const std::string& name, const std::vector<double>& xs, const std::vector<double>& lo,
                const std::vector<double>& hi);

  std::string render(int width = 720, int height = 420) const;
  void write(const std::filesystem::path& path) const;

 private:
  struct Series {
    std::string name;
    std::vector<double> xs, ys, lo, hi;
    bool band = false;
    int color = 0;
  };
  int color_for(const std::string& name);

  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
  std::vector<std::string> color_names_;
};

}  // namespace dea::artifacts
