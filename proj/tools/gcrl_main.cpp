// Command-line front end: train, eval, ablate, plot.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "gcrl/ablation.hpp"
#include "gcrl/plot.hpp"
#include "gcrl/trainer.hpp"

namespace {

gcrl::RunConfig load_with_overrides(const std::string& path, const std::vector<std::string>& overrides) {
  gcrl::RunConfig cfg = path.empty() ? gcrl::RunConfig{} : gcrl::load_config_file(path);
  gcrl::apply_overrides(cfg, overrides);
  cfg.validate();
  return cfg;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw gcrl::ConfigError("bad seed '" + item + "'");
    }
  }
  if (seeds.empty()) throw gcrl::ConfigError("--seeds needs at least one seed");
  return seeds;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{gcrl::pig_enabled() ? "Goal-conditioned RL with landmark planning and self-imitation"
                                   : "Goal-conditioned RL with landmark planning (self-imitation disabled)"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool verbose = false;
  std::vector<std::string> overrides;
  auto* train_cmd = app.add_subcommand("train", "Run one training job");
  train_cmd->add_option("--config", config_path, "Config file (key = value lines)")->required();
  auto* seed_opt = train_cmd->add_option("--seed", seed, "Override the seed");
  train_cmd->add_option("--out", out_dir, "Output directory")->required();
  train_cmd->add_flag("-v,--verbose", verbose, "Print a line per evaluation");
  train_cmd->add_option("overrides", overrides, "key=value overrides");

  std::string ckpt_path;
  bool no_planner = false;
  int episodes = 10;
  std::uint64_t eval_seed_value = 0;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_flag("--no-planner", no_planner, "Feed the goal directly to the policy");
  eval_cmd->add_option("--episodes", episodes, "Number of greedy episodes")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", eval_seed_value, "Seed of the evaluation episodes");

  std::string abl_config;
  std::string seeds_text;
  std::string variants_text;
  std::string abl_out;
  double threshold = 0.8;
  std::vector<std::string> abl_overrides;
  auto* ablate_cmd = app.add_subcommand("ablate", "Run the variant x seed matrix");
  ablate_cmd->add_option("--config", abl_config, "Base config file")->required();
  ablate_cmd->add_option("--seeds", seeds_text, "Comma separated seeds")->required();
  ablate_cmd->add_option("--variants", variants_text, "Comma separated variant names (default: all)");
  ablate_cmd->add_option("--out", abl_out, "Output directory")->required();
  ablate_cmd->add_option("--threshold", threshold, "Success level for the steps-to-threshold column");
  ablate_cmd->add_flag("-v,--verbose", verbose, "Print progress");
  ablate_cmd->add_option("overrides", abl_overrides, "key=value overrides for the base config");

  std::vector<std::string> log_patterns;
  std::string plot_out;
  int window = 5;
  auto* plot_cmd = app.add_subcommand("plot", "Render SVG charts from metrics logs");
  plot_cmd->add_option("--logs", log_patterns, "Glob(s) matching metrics.csv files")->required();
  plot_cmd->add_option("--out", plot_out, "Output directory")->required();
  plot_cmd->add_option("--window", window, "Moving-average window")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) {
      std::vector<std::string> all = overrides;
      if (*seed_opt) all.push_back("seed=" + std::to_string(seed));
      const gcrl::RunConfig cfg = load_with_overrides(config_path, all);
      gcrl::TrainOptions opts;
      opts.out_dir = out_dir;
      opts.verbose = verbose;
      const auto result = gcrl::train(cfg, opts);
      std::printf("%s\n", result.checkpoint_path.c_str());
    } else if (*eval_cmd) {
      const gcrl::Agent agent = gcrl::load_checkpoint(ckpt_path);
      const double rate = gcrl::evaluate(agent, gcrl::EvalOptions{episodes, !no_planner, eval_seed_value, {}});
      std::printf("%.17g\n", rate);
    } else if (*ablate_cmd) {
      const gcrl::RunConfig base = load_with_overrides(abl_config, abl_overrides);
      std::vector<gcrl::AblationVariant> variants;
      if (variants_text.empty()) {
        variants = gcrl::default_variants();
      } else {
        for (const auto& name : split_commas(variants_text)) variants.push_back(gcrl::find_variant(name));
      }
      gcrl::AblationOptions opts;
      opts.out_dir = abl_out;
      opts.threshold = threshold;
      opts.verbose = verbose;
      const auto report = gcrl::run_ablation_matrix(base, parse_seeds(seeds_text), variants, opts);
      std::cout << report.summary_table();
    } else if (*plot_cmd) {
      std::vector<std::string> paths;
      for (const auto& p : log_patterns) {
        auto found = gcrl::glob_paths(p);
        paths.insert(paths.end(), found.begin(), found.end());
      }
      if (paths.empty()) throw gcrl::ConfigError("no metrics logs match the given --logs pattern");
      gcrl::PlotOptions opts;
      opts.smoothing_window = window;
      for (const auto& f : gcrl::emit_plots(gcrl::group_logs(paths), plot_out, opts)) std::printf("%s\n", f.c_str());
    }
  } catch (const gcrl::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
