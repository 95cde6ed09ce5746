#include "gcrl/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gcrl/trainer.hpp"

namespace gcrl {

std::vector<AblationVariant> default_variants() {
  return {
      {"full", {"pig_loss=on", "skipping=on"}},
      {"lambda0", {"pig_loss=off", "balancing_coefficient=0", "skipping=off"}},
      {"gcsl", {"pig_loss=off", "gcsl_loss=on", "skipping=off"}},
      {"noskip", {"pig_loss=on", "skipping=off"}},
      {"randomskip", {"pig_loss=on", "skipping=random"}},
      {"lambda=0", {"pig_loss=on", "skipping=on", "balancing_coefficient=0"}},
      {"lambda=0.1", {"pig_loss=on", "skipping=on", "balancing_coefficient=0.1"}},
      {"lambda=1", {"pig_loss=on", "skipping=on", "balancing_coefficient=1"}},
      {"lambda=10", {"pig_loss=on", "skipping=on", "balancing_coefficient=10"}},
  };
}

AblationVariant find_variant(const std::string& name) {
  for (auto& v : default_variants())
    if (v.name == name) return v;
  throw ConfigError("unknown ablation variant '" + name + "'");
}

std::vector<CurvePoint> mean_curve(const std::vector<const std::vector<MetricsRow>*>& runs,
                                   const std::string& column) {
  std::vector<CurvePoint> out;
  if (runs.empty()) return out;
  std::size_t len = runs.front()->size();
  for (const auto* r : runs) len = std::min(len, r->size());
  for (std::size_t i = 0; i < len; ++i) {
    CurvePoint p;
    p.env_step = (*runs.front())[i].env_step;
    double sum = 0.0;
    for (const auto* r : runs) {
      const double v = metric_value((*r)[i], column);
      if (std::isnan(v)) continue;
      sum += v;
      ++p.count;
    }
    if (p.count == 0) {
      p.mean = p.std = std::nan("");
    } else {
      p.mean = sum / p.count;
      double sq = 0.0;
      for (const auto* r : runs) {
        const double v = metric_value((*r)[i], column);
        if (!std::isnan(v)) sq += (v - p.mean) * (v - p.mean);
      }
      p.std = std::sqrt(sq / p.count);
    }
    out.push_back(p);
  }
  return out;
}

std::int64_t steps_to_reach(const std::vector<CurvePoint>& curve, double threshold) {
  for (const auto& p : curve)
    if (p.count > 0 && p.mean >= threshold) return p.env_step;
  return -1;
}

std::string AblationReport::summary_table() const {
  std::ostringstream out;
  out << "variant,seed,final_success,final_success_no_planner,steps_to_" << threshold << '\n';
  for (const auto& run : runs) {
    const double fin = run.rows.empty() ? std::nan("") : run.rows.back().eval_success_rate;
    const double fin_np = run.rows.empty() ? std::nan("") : run.rows.back().eval_success_rate_no_planner;
    std::int64_t reach = -1;
    for (const auto& r : run.rows) {
      if (r.eval_success_rate >= threshold) {
        reach = r.env_step;
        break;
      }
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%llu,%.4f,%.4f,%lld\n", run.variant.c_str(),
                  static_cast<unsigned long long>(run.seed), fin, fin_np, static_cast<long long>(reach));
    out << buf;
  }
  return out.str();
}

AblationReport run_ablation_matrix(const RunConfig& base, const std::vector<std::uint64_t>& seeds,
                                   const std::vector<AblationVariant>& variants, const AblationOptions& options) {
  if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
  if (variants.empty()) throw ConfigError("ablation needs at least one variant");
  namespace fs = std::filesystem;
  AblationReport report;
  report.threshold = options.threshold;

  // Validate every cell before spending time on any of them.
  std::vector<RunConfig> configs;
  for (const auto& v : variants) {
    RunConfig cfg = base;
    apply_overrides(cfg, v.overrides);
    cfg.validate();
    configs.push_back(cfg);
  }

  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    std::vector<const std::vector<MetricsRow>*> rows;
    const std::size_t first = report.runs.size();
    for (auto seed : seeds) {
      RunConfig cfg = configs[vi];
      cfg.seed = seed;
      TrainOptions topt;
      topt.verbose = options.verbose;
      if (!options.out_dir.empty())
        topt.out_dir = (fs::path(options.out_dir) / variants[vi].name / ("seed_" + std::to_string(seed))).string();
      if (options.verbose) std::fprintf(stderr, "ablation: %s seed %llu\n", variants[vi].name.c_str(),
                                        static_cast<unsigned long long>(seed));
      TrainResult res = train(cfg, topt);
      report.runs.push_back(AblationRun{variants[vi].name, seed, std::move(res.rows), topt.out_dir});
    }
    for (std::size_t k = first; k < report.runs.size(); ++k) rows.push_back(&report.runs[k].rows);

    VariantSummary s;
    s.variant = variants[vi].name;
    s.success = mean_curve(rows, "eval_success_rate");
    s.success_no_planner = mean_curve(rows, "eval_success_rate_no_planner");
    if (!s.success.empty()) {
      s.final_mean = s.success.back().mean;
      s.final_std = s.success.back().std;
    } else {
      s.final_mean = s.final_std = std::nan("");
    }
    s.steps_to_threshold = steps_to_reach(s.success, options.threshold);
    report.variants.push_back(std::move(s));
  }

  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    std::ofstream table(fs::path(options.out_dir) / "summary.csv");
    table << report.summary_table();
    std::ofstream curves(fs::path(options.out_dir) / "curves.csv");
    curves << "variant,env_step,mean,std,mean_no_planner,std_no_planner\n";
    for (const auto& v : report.variants) {
      for (std::size_t i = 0; i < v.success.size(); ++i) {
        char buf[256];
        const double mnp = i < v.success_no_planner.size() ? v.success_no_planner[i].mean : std::nan("");
        const double snp = i < v.success_no_planner.size() ? v.success_no_planner[i].std : std::nan("");
        std::snprintf(buf, sizeof buf, "%s,%lld,%.17g,%.17g,%.17g,%.17g\n", v.variant.c_str(),
                      static_cast<long long>(v.success[i].env_step), v.success[i].mean, v.success[i].std, mnp, snp);
        curves << buf;
      }
    }
    if (!table || !curves) throw Error("cannot write ablation summary in '" + options.out_dir + "'");
  }
  return report;
}

}  // namespace gcrl
