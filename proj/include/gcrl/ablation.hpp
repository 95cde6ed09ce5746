#pragma once

// Cross product of method variants and seeds with a comparative summary.

#include <cstdint>
#include <string>
#include <vector>

#include "gcrl/config.hpp"
#include "gcrl/metrics.hpp"

namespace gcrl {

struct AblationVariant {
  std::string name;
  std::vector<std::string> overrides;  // "key=value", applied on top of the base config
};

// full, lambda0, gcsl, noskip, randomskip and the lambda sweep
// lambda=0, lambda=0.1, lambda=1, lambda=10.
std::vector<AblationVariant> default_variants();
// Looks up a variant of default_variants() by name; throws ConfigError.
AblationVariant find_variant(const std::string& name);

struct AblationRun {
  std::string variant;
  std::uint64_t seed = 0;
  std::vector<MetricsRow> rows;
  std::string out_dir;
};

struct CurvePoint {
  std::int64_t env_step = 0;
  double mean = 0.0;
  double std = 0.0;
  int count = 0;
};

struct VariantSummary {
  std::string variant;
  std::vector<CurvePoint> success;            // eval_success_rate across seeds
  std::vector<CurvePoint> success_no_planner;
  double final_mean = 0.0;
  double final_std = 0.0;
  // First env_step at which the mean success reaches the threshold; -1 if never.
  std::int64_t steps_to_threshold = -1;
};

struct AblationReport {
  std::vector<AblationRun> runs;  // variants x seeds, variant-major
  std::vector<VariantSummary> variants;
  double threshold = 0.8;

  // One line per run: variant, seed, final success, final success without
  // planner, env steps to the threshold.
  std::string summary_table() const;
};

// Mean and population standard deviation of a column across runs, aligned
// by row index. Rows beyond the shortest run are dropped.
std::vector<CurvePoint> mean_curve(const std::vector<const std::vector<MetricsRow>*>& runs,
                                   const std::string& column);

// First env_step whose value reaches threshold, or -1.
std::int64_t steps_to_reach(const std::vector<CurvePoint>& curve, double threshold);

struct AblationOptions {
  std::string out_dir;  // runs go to <out_dir>/<variant>/seed_<N>; empty writes nothing
  double threshold = 0.8;
  bool verbose = false;
};

AblationReport run_ablation_matrix(const RunConfig& base, const std::vector<std::uint64_t>& seeds,
                                   const std::vector<AblationVariant>& variants, const AblationOptions& options = {});

}  // namespace gcrl
