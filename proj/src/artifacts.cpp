#include "dea/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dea::artifacts {

namespace fs = std::filesystem;

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw std::runtime_error(path.string() + ": expected header '" + header + "'");
  }
  const std::size_t width = split(header).size();
  std::vector<std::vector<std::string>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != width) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(width) + " fields");
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

double to_real(const std::string& s, const fs::path& path) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    if (s == "nan") return std::nan("");
    throw std::runtime_error(path.string() + ": invalid number '" + s + "'");
  }
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot write");
  return out;
}

}  // namespace

void write_metrics_csv(const fs::path& path, const std::vector<metrics::EvalRecord>& records) {
  auto out = open_out(path);
  out << kMetricsHeader << "\n";
  for (const auto& r : records) {
    out << r.step << "," << format_real(r.mean_return) << "," << format_real(r.std_return) << "\n";
  }
}

std::vector<metrics::EvalRecord> read_metrics_csv(const fs::path& path) {
  std::vector<metrics::EvalRecord> out;
  for (const auto& c : read_csv(path, kMetricsHeader)) {
    out.push_back({std::stol(c[0]), to_real(c[1], path), to_real(c[2], path)});
  }
  return out;
}

void write_kappa_csv(const fs::path& path, const std::vector<KappaRecord>& records) {
  auto out = open_out(path);
  out << kKappaHeader << "\n";
  for (const auto& r : records) {
    out << r.step << "," << format_real(r.kappa_bar) << "," << format_real(r.kappa) << ","
        << format_real(r.delta_mean) << "," << format_real(r.delta_bar_mean) << "\n";
  }
}

std::vector<KappaRecord> read_kappa_csv(const fs::path& path) {
  std::vector<KappaRecord> out;
  for (const auto& c : read_csv(path, kKappaHeader)) {
    out.push_back({std::stol(c[0]), to_real(c[1], path), to_real(c[2], path), to_real(c[3], path),
                   to_real(c[4], path)});
  }
  return out;
}

void write_summary_csv(const fs::path& path, const std::vector<SummaryRow>& rows) {
  auto out = open_out(path);
  out << kSummaryHeader << "\n";
  for (const auto& r : rows) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << r.env << "," << r.method << "," << r.seed << "," << status << "," << format_real(r.final_return)
        << "," << format_real(r.aulc) << "\n";
  }
}

std::vector<SummaryRow> read_summary_csv(const fs::path& path) {
  std::vector<SummaryRow> out;
  for (const auto& c : read_csv(path, kSummaryHeader)) {
    out.push_back({c[0], c[1], std::stoull(c[2]), c[3], to_real(c[4], path), to_real(c[5], path)});
  }
  return out;
}

std::string run_dir_name(const std::string& env, const std::string& method, std::uint64_t seed) {
  return env + "-" + method + "-seed" + std::to_string(seed);
}

std::vector<ReportRow> build_report_rows(const std::vector<SummaryRow>& runs) {
  // env -> method -> per-seed values
  std::map<std::string, std::map<std::string, std::vector<const SummaryRow*>>> grouped;
  for (const auto& r : runs) grouped[r.env][r.method].push_back(&r);

  metrics::MetricTable finals, iqms, aulcs;
  std::vector<ReportRow> rows;
  for (const auto& [env, by_method] : grouped) {
    for (const auto& [method, seeds] : by_method) {
      std::vector<double> f, a;
      for (const SummaryRow* r : seeds) {
        f.push_back(r->final_return);
        a.push_back(r->aulc);
      }
      ReportRow row{env, method, metrics::mean(f), metrics::iqm(f), metrics::mean(a)};
      finals[method][env] = row.final_return;
      iqms[method][env] = row.iqm;
      aulcs[method][env] = row.aulc;
      rows.push_back(row);
    }
  }
  const auto rf = metrics::per_env_ranks(finals);
  const auto ri = metrics::per_env_ranks(iqms);
  const auto ra = metrics::per_env_ranks(aulcs);
  for (auto& row : rows) {
    row.rank_final = rf.at(row.method).at(row.env);
    row.rank_iqm = ri.at(row.method).at(row.env);
    row.rank_aulc = ra.at(row.method).at(row.env);
  }
  const auto af = metrics::rank_table(finals);
  const auto ai = metrics::rank_table(iqms);
  const auto aa = metrics::rank_table(aulcs);
  for (const auto& [method, r] : af) {
    ReportRow all{"ALL", method, std::nan(""), std::nan(""), std::nan(""), r, ai.at(method), aa.at(method)};
    rows.push_back(all);
  }
  return rows;
}

namespace {

struct RunData {
  SummaryRow summary;
  std::vector<metrics::EvalRecord> curve;
  std::vector<KappaRecord> kappa;
};

std::vector<RunData> collect_runs(const std::vector<fs::path>& inputs) {
  if (inputs.empty()) throw std::runtime_error("report: no input directories");
  std::vector<RunData> runs;
  for (const auto& dir : inputs) {
    if (!fs::is_directory(dir)) throw std::runtime_error("report: " + dir.string() + " is not a directory");
    if (fs::exists(dir / "summary.csv")) {
      for (const auto& row : read_summary_csv(dir / "summary.csv")) {
        if (row.status != "ok") continue;
        RunData rd{row, {}, {}};
        const fs::path sub = dir / run_dir_name(row.env, row.method, row.seed);
        if (fs::exists(sub / "metrics.csv")) rd.curve = read_metrics_csv(sub / "metrics.csv");
        if (fs::exists(sub / "kappa.csv")) rd.kappa = read_kappa_csv(sub / "kappa.csv");
        runs.push_back(std::move(rd));
      }
    } else if (fs::exists(dir / "run.json") && fs::exists(dir / "metrics.csv")) {
      std::ifstream in(dir / "run.json");
      const auto cfg = nlohmann::json::parse(in);
      RunData rd;
      rd.summary.env = cfg.at("env").get<std::string>();
      rd.summary.method = cfg.at("method").get<std::string>();
      rd.summary.seed = cfg.at("seed").get<std::uint64_t>();
      rd.summary.status = "ok";
      rd.curve = read_metrics_csv(dir / "metrics.csv");
      if (rd.curve.empty()) throw std::runtime_error("report: " + (dir / "metrics.csv").string() + " is empty");
      rd.summary.final_return = rd.curve.back().mean_return;
      rd.summary.aulc = metrics::aulc(rd.curve);
      if (fs::exists(dir / "kappa.csv")) rd.kappa = read_kappa_csv(dir / "kappa.csv");
      runs.push_back(std::move(rd));
    } else {
      throw std::runtime_error("report: " + dir.string() + " contains neither summary.csv nor run.json + metrics.csv");
    }
  }
  if (runs.empty()) throw std::runtime_error("report: no successful runs in the inputs");

  std::set<std::string> envs, methods;
  std::set<std::tuple<std::string, std::string, std::uint64_t>> seen;
  std::set<std::pair<std::string, std::string>> cells;
  for (const auto& r : runs) {
    envs.insert(r.summary.env);
    methods.insert(r.summary.method);
    cells.insert({r.summary.env, r.summary.method});
    if (!seen.insert({r.summary.env, r.summary.method, r.summary.seed}).second) {
      throw std::runtime_error("report: duplicate run " + run_dir_name(r.summary.env, r.summary.method, r.summary.seed));
    }
  }
  std::string missing;
  for (const auto& e : envs) {
    for (const auto& m : methods) {
      if (!cells.count({e, m})) missing += " " + e + "/" + m;
    }
  }
  if (!missing.empty()) throw std::runtime_error("report: inconsistent env/method sets; missing:" + missing);
  std::sort(runs.begin(), runs.end(), [](const RunData& a, const RunData& b) {
    return std::tie(a.summary.env, a.summary.method, a.summary.seed) <
           std::tie(b.summary.env, b.summary.method, b.summary.seed);
  });
  return runs;
}

std::string render_report(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << kReportHeader << "\n";
  auto cell = [](double v) { return std::isnan(v) ? std::string() : format_real(v); };
  for (const auto& r : rows) {
    out << r.env << "," << r.method << "," << cell(r.final_return) << "," << cell(r.iqm) << "," << cell(r.aulc)
        << "," << format_real(r.rank_final) << "," << format_real(r.rank_iqm) << "," << format_real(r.rank_aulc)
        << "\n";
  }
  return out.str();
}

// Mean and population std across runs at each step present in all of them.
struct Curve {
  std::vector<double> x, mean, lo, hi;
};

template <typename Get>
Curve pool(const std::vector<const RunData*>& group, Get get_series) {
  std::map<long, std::vector<double>> at;
  for (const RunData* r : group) {
    for (const auto& [step, v] : get_series(*r)) at[step].push_back(v);
  }
  Curve c;
  for (const auto& [step, vs] : at) {
    if (vs.size() != group.size()) continue;
    const double m = metrics::mean(vs);
    const double s = metrics::stddev(vs);
    c.x.push_back(static_cast<double>(step));
    c.mean.push_back(m);
    c.lo.push_back(m - s);
    c.hi.push_back(m + s);
  }
  return c;
}

Curve thin(const Curve& c, std::size_t max_points) {
  if (c.x.size() <= max_points) return c;
  Curve out;
  const double stride = static_cast<double>(c.x.size() - 1) / static_cast<double>(max_points - 1);
  for (std::size_t k = 0; k < max_points; ++k) {
    const auto i = static_cast<std::size_t>(std::llround(k * stride));
    out.x.push_back(c.x[i]);
    out.mean.push_back(c.mean[i]);
    out.lo.push_back(c.lo[i]);
    out.hi.push_back(c.hi[i]);
  }
  return out;
}

}  // namespace

void write_report(const std::vector<fs::path>& inputs, const fs::path& out_dir) {
  const auto runs = collect_runs(inputs);
  std::vector<SummaryRow> summaries;
  for (const auto& r : runs) summaries.push_back(r.summary);
  const std::string report = render_report(build_report_rows(summaries));

  std::map<std::string, std::map<std::string, std::vector<const RunData*>>> grouped;
  for (const auto& r : runs) grouped[r.summary.env][r.summary.method].push_back(&r);

  std::vector<std::pair<std::string, std::string>> charts;
  for (const auto& [env, by_method] : grouped) {
    LineChart learning("Learning curves: " + env, "environment steps", "evaluation return");
    bool any_curve = false;
    for (const auto& [method, group] : by_method) {
      const Curve c = pool(group, [](const RunData& r) {
        std::vector<std::pair<long, double>> s;
        for (const auto& e : r.curve) s.emplace_back(e.step, e.mean_return);
        return s;
      });
      if (c.x.empty()) continue;
      any_curve = true;
      learning.add_band(method, c.x, c.lo, c.hi);
      learning.add_line(method, c.x, c.mean);
    }
    if (any_curve) charts.emplace_back("learning_" + env + ".svg", learning.render());

    LineChart kappa("Directional parameters: " + env, "environment steps", "value");
    bool any_kappa = false;
    for (const auto& [method, group] : by_method) {
      std::vector<const RunData*> with;
      for (const RunData* r : group) {
        if (!r->kappa.empty()) with.push_back(r);
      }
      if (with.empty()) continue;
      any_kappa = true;
      const Curve kb = thin(pool(with, [](const RunData& r) {
        std::vector<std::pair<long, double>> s;
        for (const auto& e : r.kappa) s.emplace_back(e.step, e.kappa_bar);
        return s;
      }), 400);
      const Curve k = thin(pool(with, [](const RunData& r) {
        std::vector<std::pair<long, double>> s;
        for (const auto& e : r.kappa) s.emplace_back(e.step, e.kappa);
        return s;
      }), 400);
      const std::string prefix = by_method.size() > 1 ? method + " " : "";
      kappa.add_band(prefix + "kappa_bar", kb.x, kb.lo, kb.hi);
      kappa.add_line(prefix + "kappa_bar", kb.x, kb.mean);
      kappa.add_band(prefix + "kappa", k.x, k.lo, k.hi);
      kappa.add_line(prefix + "kappa", k.x, k.mean);
    }
    if (any_kappa) charts.emplace_back("kappa_" + env + ".svg", kappa.render());
  }

  fs::create_directories(out_dir);
  open_out(out_dir / "report.csv") << report;
  for (const auto& [name, svg] : charts) open_out(out_dir / name) << svg;
}

// ---------------------------------------------------------------------------

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

LineChart::LineChart(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

int LineChart::color_for(const std::string& name) {
  auto it = std::find(color_names_.begin(), color_names_.end(), name);
  if (it != color_names_.end()) return static_cast<int>(it - color_names_.begin());
  color_names_.push_back(name);
  return static_cast<int>(color_names_.size() - 1);
}

void LineChart::add_line(const std::string& name, const std::vector<double>& xs, const std::vector<double>& ys) {
  Series s{name, xs, ys, {}, {}, false, color_for(name)};
  series_.push_back(std::move(s));
}

void LineChart::add_band(const std::string& name, const std::vector<double>& xs, const std::vector<double>& lo,
                         const std::vector<double>& hi) {
  Series s{name, xs, {}, lo, hi, true, color_for(name)};
  series_.push_back(std::move(s));
}

std::string LineChart::render(int width, int height) const {
  const double left = 70, right = 150, top = 40, bottom = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series_) {
    for (double x : s.xs) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
    }
    for (const auto* v : {&s.ys, &s.lo, &s.hi}) {
      for (double y : *v) {
        if (!std::isfinite(y)) continue;
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    }
  }
  if (!(x1 > x0)) {
    x0 = std::isfinite(x0) ? x0 - 1 : 0;
    x1 = x0 + 2;
  }
  if (!(y1 > y0)) {
    y0 = std::isfinite(y0) ? y0 - 1 : 0;
    y1 = y0 + 2;
  }
  const double pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title_)
    << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0;
    const double yv = y0 + (y1 - y0) * k / 4.0;
    o << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(top + ph + 16) << "\" text-anchor=\"middle\">"
      << format_real(std::round(xv * 1000) / 1000) << "</text>\n";
    o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">"
      << format_real(std::round(yv * 1000) / 1000) << "</text>\n";
    o << "<line x1=\"" << num(left) << "\" x2=\"" << num(left + pw) << "\" y1=\"" << num(py(yv)) << "\" y2=\""
      << num(py(yv)) << "\" stroke=\"#ddd\"/>\n";
  }
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">"
    << escape(x_label_) << "</text>\n";
  o << "<text transform=\"translate(16," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(y_label_) << "</text>\n";

  for (const auto& s : series_) {
    const char* color = kPalette[s.color % 8];
    if (s.band) {
      if (s.xs.empty()) continue;
      o << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.xs.size(); ++i) o << num(px(s.xs[i])) << "," << num(py(s.hi[i])) << " ";
      for (std::size_t i = s.xs.size(); i-- > 0;) o << num(px(s.xs[i])) << "," << num(py(s.lo[i])) << " ";
      o << "\"/>\n";
    } else {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\"";
      for (std::size_t i = 0; i < s.xs.size(); ++i) o << num(px(s.xs[i])) << "," << num(py(s.ys[i])) << " ";
      o << "\"/>\n";
    }
  }
  for (std::size_t i = 0; i < color_names_.size(); ++i) {
    const double ly = top + 14 + 18.0 * i;
    o << "<line x1=\"" << num(left + pw + 12) << "\" x2=\"" << num(left + pw + 32) << "\" y1=\"" << num(ly)
      << "\" y2=\"" << num(ly) << "\" stroke=\"" << kPalette[i % 8] << "\" stroke-width=\"3\"/>\n";
    o << "<text x=\"" << num(left + pw + 38) << "\" y=\"" << num(ly + 4) << "\">" << escape(color_names_[i])
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void LineChart::write(const fs::path& path) const { open_out(path) << render(); }

}  // namespace dea::artifacts
