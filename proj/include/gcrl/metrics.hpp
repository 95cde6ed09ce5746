#pragma once

// Evaluation-tick log rows and the particle-based state entropy estimate.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gcrl/types.hpp"

namespace gcrl {

// Optional columns hold NaN when not measured.
struct MetricsRow {
  std::int64_t env_step = 0;
  std::int64_t episode = 0;
  double eval_success_rate = 0.0;
  double eval_success_rate_no_planner = 0.0;
  double l_critic = 0.0;
  double l_actor = 0.0;
  double l_pig_latest = 0.0;
  double mean_jump_count = 0.0;
  double state_entropy = 0.0;
  double wall_clock_s = 0.0;
};

const std::vector<std::string>& metrics_columns();

void write_metrics_header(std::ostream& out);
// Doubles are written with 17 significant digits so rows read back exactly.
void write_metrics_row(std::ostream& out, const MetricsRow& row);

std::vector<MetricsRow> read_metrics(std::istream& in);
std::vector<MetricsRow> read_metrics_file(const std::string& path);

// Value of a named column; throws Error on an unknown name.
double metric_value(const MetricsRow& row, const std::string& column);

inline constexpr double kEntropyFloor = 1e-12;

// Mean over points of log(max(mean k-NN distance, floor)).
double knn_entropy_all(std::span<const Goal> states, int k);

// Subsamples n of the states without replacement, then applies
// knn_entropy_all. Throws Error when states.size() < n or n < k + 1.
double knn_entropy(std::span<const Goal> states, int n, int k, std::mt19937_64& rng);

}  // namespace gcrl
