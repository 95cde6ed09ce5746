#include "gcrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "gcrl/kernels.hpp"

namespace gcrl {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_cell(const std::string& cell) {
  if (cell == "nan" || cell == "-nan") return std::nan("");
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(cell, &used);
  if (used != cell.size()) throw Error("metrics: bad value '" + cell + "'");
  return v;
}

}  // namespace

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols = {
      "env_step", "episode", "eval_success_rate", "eval_success_rate_no_planner", "l_critic",
      "l_actor", "l_pig_latest", "mean_jump_count", "state_entropy", "wall_clock_s"};
  return cols;
}

void write_metrics_header(std::ostream& out) {
  const auto& cols = metrics_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
}

void write_metrics_row(std::ostream& out, const MetricsRow& r) {
  out << r.env_step << ',' << r.episode << ',' << fmt(r.eval_success_rate) << ','
      << fmt(r.eval_success_rate_no_planner) << ',' << fmt(r.l_critic) << ',' << fmt(r.l_actor) << ','
      << fmt(r.l_pig_latest) << ',' << fmt(r.mean_jump_count) << ',' << fmt(r.state_entropy) << ','
      << fmt(r.wall_clock_s) << '\n';
}

std::vector<MetricsRow> read_metrics(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("metrics: missing header");
  const auto& cols = metrics_columns();
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) header.push_back(cell);
  }
  if (header != cols) throw Error("metrics: unexpected header '" + line + "'");

  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != cols.size()) throw Error("metrics: wrong column count in '" + line + "'");
    MetricsRow r;
    r.env_step = std::stoll(cells[0]);
    r.episode = std::stoll(cells[1]);
    r.eval_success_rate = parse_cell(cells[2]);
    r.eval_success_rate_no_planner = parse_cell(cells[3]);
    r.l_critic = parse_cell(cells[4]);
    r.l_actor = parse_cell(cells[5]);
    r.l_pig_latest = parse_cell(cells[6]);
    r.mean_jump_count = parse_cell(cells[7]);
    r.state_entropy = parse_cell(cells[8]);
    r.wall_clock_s = parse_cell(cells[9]);
    rows.push_back(r);
  }
  return rows;
}

std::vector<MetricsRow> read_metrics_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open metrics file '" + path + "'");
  return read_metrics(in);
}

double metric_value(const MetricsRow& r, const std::string& column) {
  if (column == "env_step") return static_cast<double>(r.env_step);
  if (column == "episode") return static_cast<double>(r.episode);
  if (column == "eval_success_rate") return r.eval_success_rate;
  if (column == "eval_success_rate_no_planner") return r.eval_success_rate_no_planner;
  if (column == "l_critic") return r.l_critic;
  if (column == "l_actor") return r.l_actor;
  if (column == "l_pig_latest") return r.l_pig_latest;
  if (column == "mean_jump_count") return r.mean_jump_count;
  if (column == "state_entropy") return r.state_entropy;
  if (column == "wall_clock_s") return r.wall_clock_s;
  throw Error("unknown metrics column '" + column + "'");
}

double knn_entropy_all(std::span<const Goal> states, int k) {
  if (k < 1 || states.size() < static_cast<std::size_t>(k) + 1) throw Error("knn_entropy: too few states");
  std::vector<Vec2> points;
  points.reserve(states.size());
  for (const auto& g : states) points.push_back(g.position);
  std::vector<double> mean_dist(points.size());
  kernels::knn_mean_distances(points, static_cast<std::size_t>(k), mean_dist);
  double sum = 0.0;
  for (double d : mean_dist) sum += std::log(std::max(d, kEntropyFloor));
  return sum / static_cast<double>(points.size());
}

double knn_entropy(std::span<const Goal> states, int n, int k, std::mt19937_64& rng) {
  if (n < k + 1 || k < 1) throw Error("knn_entropy: need n >= k + 1 and k >= 1");
  if (states.size() < static_cast<std::size_t>(n)) throw Error("knn_entropy: fewer states than n");
  std::vector<std::size_t> idx(states.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first n entries become the subsample.
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<Goal> sub;
  sub.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) sub.push_back(states[idx[static_cast<std::size_t>(i)]]);
  return knn_entropy_all(sub, k);
}

}  // namespace gcrl
