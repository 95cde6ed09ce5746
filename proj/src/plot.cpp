#include "gcrl/plot.hpp"

#include <glob.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <regex>
#include <sstream>

namespace gcrl {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 160.0;
constexpr double kMarginTop = 30.0;
constexpr double kMarginBottom = 50.0;
constexpr double kInfinityGuard = std::numeric_limits<double>::infinity();

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::vector<double> moving_average(const std::vector<double>& values, int window) {
  if (window < 1) throw Error("moving_average: window must be at least 1");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) {
      out[i] = values[i];
      continue;
    }
    double sum = 0.0;
    int n = 0;
    for (std::size_t j = i + 1; j-- > 0 && n < window;) {
      if (std::isnan(values[j])) continue;
      sum += values[j];
      ++n;
    }
    out[i] = sum / n;
  }
  return out;
}

ChartData chart_data(const std::vector<PlotSeries>& series, const std::string& metric, int smoothing_window) {
  ChartData chart;
  chart.metric = metric;
  for (const auto& s : series) {
    if (s.seeds.empty()) continue;
    ChartLine line;
    line.label = s.label;
    line.has_band = s.seeds.size() > 1;
    std::size_t len = s.seeds.front().size();
    for (const auto& rows : s.seeds) len = std::min(len, rows.size());
    std::vector<std::vector<double>> smoothed;
    for (const auto& rows : s.seeds) {
      std::vector<double> v;
      for (std::size_t i = 0; i < len; ++i) v.push_back(metric_value(rows[i], metric));
      smoothed.push_back(moving_average(v, smoothing_window));
    }
    for (std::size_t i = 0; i < len; ++i) {
      double sum = 0.0;
      int n = 0;
      for (const auto& v : smoothed) {
        if (std::isnan(v[i])) continue;
        sum += v[i];
        ++n;
      }
      if (n == 0) continue;
      const double mean = sum / n;
      double sq = 0.0;
      for (const auto& v : smoothed)
        if (!std::isnan(v[i])) sq += (v[i] - mean) * (v[i] - mean);
      const double sd = std::sqrt(sq / n);
      line.x.push_back(static_cast<double>(s.seeds.front()[i].env_step));
      line.mean.push_back(mean);
      line.lower.push_back(mean - sd);
      line.upper.push_back(mean + sd);
    }
    chart.lines.push_back(std::move(line));
  }
  return chart;
}

std::string render_svg(const ChartData& chart) {
  double x0 = kInfinityGuard, x1 = -kInfinityGuard, y0 = kInfinityGuard, y1 = -kInfinityGuard;
  for (const auto& l : chart.lines) {
    for (std::size_t i = 0; i < l.x.size(); ++i) {
      if (!std::isfinite(l.lower[i]) || !std::isfinite(l.upper[i])) continue;
      x0 = std::min(x0, l.x[i]);
      x1 = std::max(x1, l.x[i]);
      y0 = std::min(y0, l.lower[i]);
      y1 = std::max(y1, l.upper[i]);
    }
  }
  if (x0 > x1) {
    x0 = 0.0;
    x1 = 1.0;
    y0 = 0.0;
    y1 = 1.0;
  }
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pw = kWidth - kMarginLeft - kMarginRight;
  const double ph = kHeight - kMarginTop - kMarginBottom;
  auto sx = [&](double x) { return kMarginLeft + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return kMarginTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kMarginLeft << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">"
      << escape(chart.metric) << "</text>\n";
  svg << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0;
    const double yv = y0 + (y1 - y0) * k / 4.0;
    svg << "<text x=\"" << num(sx(xv)) << "\" y=\"" << num(kHeight - kMarginBottom + 18)
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" << label_num(xv) << "</text>\n";
    svg << "<text x=\"" << num(kMarginLeft - 6) << "\" y=\"" << num(sy(yv) + 3)
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" << label_num(yv) << "</text>\n";
  }
  svg << "<text x=\"" << num(kMarginLeft + pw / 2) << "\" y=\"" << num(kHeight - 10)
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">env_step</text>\n";

  std::size_t ci = 0;
  for (const auto& l : chart.lines) {
    const std::string color = kColors[ci++ % std::size(kColors)];
    if (l.has_band && !l.x.empty()) {
      svg << "<polygon class=\"band\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < l.x.size(); ++i) svg << num(sx(l.x[i])) << ',' << num(sy(l.upper[i])) << ' ';
      for (std::size_t i = l.x.size(); i-- > 0;) svg << num(sx(l.x[i])) << ',' << num(sy(l.lower[i])) << ' ';
      svg << "\"/>\n";
    }
    svg << "<polyline class=\"mean\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < l.x.size(); ++i) {
      if (!std::isfinite(l.mean[i])) continue;
      svg << num(sx(l.x[i])) << ',' << num(sy(l.mean[i])) << ' ';
    }
    svg << "\"/>\n";
    const double ly = kMarginTop + 14.0 * static_cast<double>(ci);
    svg << "<line x1=\"" << num(kWidth - kMarginRight + 10) << "\" y1=\"" << num(ly) << "\" x2=\""
        << num(kWidth - kMarginRight + 30) << "\" y2=\"" << num(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << num(kWidth - kMarginRight + 34) << "\" y=\"" << num(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"10\">" << escape(l.label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<std::string> glob_paths(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> out;
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  if (rc == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH) throw Error("glob failed for '" + pattern + "'");
  return out;
}

std::vector<PlotSeries> group_logs(const std::vector<std::string>& metrics_paths) {
  namespace fs = std::filesystem;
  static const std::regex seed_dir("seed_[0-9]+");
  std::map<std::string, PlotSeries> groups;
  std::vector<std::string> order;
  for (const auto& p : metrics_paths) {
    fs::path dir = fs::path(p).parent_path();
    if (std::regex_match(dir.filename().string(), seed_dir)) dir = dir.parent_path();
    std::string label = dir.filename().string();
    if (label.empty()) label = dir.string().empty() ? "run" : dir.string();
    const std::string key = dir.string();
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) {
      it->second.label = label;
      order.push_back(key);
    }
    it->second.seeds.push_back(read_metrics_file(p));
  }
  std::vector<PlotSeries> out;
  for (const auto& k : order) out.push_back(std::move(groups[k]));
  return out;
}

std::vector<std::string> emit_plots(const std::vector<PlotSeries>& series, const std::string& out_dir,
                                    const PlotOptions& options) {
  if (series.empty()) throw Error("emit_plots: no logs");
  namespace fs = std::filesystem;
  std::vector<std::string> metrics = options.metrics;
  if (metrics.empty()) {
    for (const auto& c : metrics_columns())
      if (c != "env_step" && c != "episode") metrics.push_back(c);
  }
  fs::create_directories(out_dir);
  std::vector<std::string> written;
  for (const auto& m : metrics) {
    const fs::path path = fs::path(out_dir) / (m + ".svg");
    std::ofstream out(path);
    out << render_svg(chart_data(series, m, options.smoothing_window));
    if (!out) throw Error("cannot write plot '" + path.string() + "'");
    written.push_back(path.string());
  }
  return written;
}

}  // namespace gcrl
