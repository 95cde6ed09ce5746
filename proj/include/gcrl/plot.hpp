#pragma once

// SVG line charts of metrics logs: one chart per metric, one line per group
// of seeds, mean as a solid line and +-1 std as a shaded band.

#include <string>
#include <vector>

#include "gcrl/metrics.hpp"

namespace gcrl {

struct PlotSeries {
  std::string label;
  std::vector<std::vector<MetricsRow>> seeds;
};

struct PlotOptions {
  int smoothing_window = 5;  // trailing moving average; 1 disables
  std::vector<std::string> metrics;  // empty: every column except env_step and episode
};

struct ChartLine {
  std::string label;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> lower;  // mean - std
  std::vector<double> upper;  // mean + std
  bool has_band = false;      // more than one seed
};

struct ChartData {
  std::string metric;
  std::vector<ChartLine> lines;
};

// Trailing mean over the last `window` finite values (NaN entries stay NaN).
std::vector<double> moving_average(const std::vector<double>& values, int window);

ChartData chart_data(const std::vector<PlotSeries>& series, const std::string& metric, int smoothing_window);
std::string render_svg(const ChartData& chart);

// Expands a shell glob; no matches yields an empty list.
std::vector<std::string> glob_paths(const std::string& pattern);

// Groups metrics files by their run directory with a trailing seed_<N>
// component removed, so <variant>/seed_1 and <variant>/seed_2 share a line.
std::vector<PlotSeries> group_logs(const std::vector<std::string>& metrics_paths);

// Writes <out_dir>/<metric>.svg for every metric; returns the paths.
std::vector<std::string> emit_plots(const std::vector<PlotSeries>& series, const std::string& out_dir,
                                    const PlotOptions& options = {});

}  // namespace gcrl
