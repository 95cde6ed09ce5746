#pragma once

// Run configuration. Defaults are the 2DReach hyperparameters. Keys in the
// text format are the hyperparameter names in lower_snake_case; additional
// keys cover the maze and the method flags.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "gcrl/graph.hpp"
#include "gcrl/maze.hpp"

namespace gcrl {

enum class SkippingSetting { off, pig, random };
enum class GraphRebuild { episode, step };

struct RunConfig {
  // environment
  std::string maze = "u";  // preset name or path to a maze text file
  std::uint64_t seed = 1;
  std::int64_t total_env_steps = 500000;
  double env_noise_std = 0.0;

  // DDPG
  double actor_learning_rate = 2e-4;
  double critic_learning_rate = 2e-4;
  std::int64_t replay_buffer_size = 1000000;
  int number_of_hidden_layers_for_actors = 4;
  int number_of_hidden_layers_for_critics = 5;
  int number_of_hidden_units_per_layer = 400;
  int batch_size = 200;
  double polyak_for_target_network = 0.99;
  int target_update_frequency_per_episode = 3;
  int ratio_between_env_vs_optimization_steps = 1;
  double gamma = 0.99;
  double hindsight_relabelling_ratio = 0.8;
  std::int64_t initial_random_trajectories = 2500;  // environment steps of uniform random actions
  int hindsight_relabelling_range = 50;
  double action_l2 = 0.5;
  double action_noise = 0.2;
  double q_target_clip = 100.0;  // 1 / (1 - gamma); 0 disables
  bool literal_critic_target = false;

  // graph
  int number_of_soft_value_iteration = 20;
  double temperature = 0.9;
  int number_of_nodes_in_a_graph = 100;
  double clipping_threshold_for_distances = 4.0;
  int pool_size = 1000;
  PlanMethod plan_method = PlanMethod::dijkstra;
  double planner_hop_cost = 1.0;  // added per planned edge; 0 plans on raw -Q
  GraphRebuild graph_rebuild = GraphRebuild::episode;

  // self-imitation and skipping
  double balancing_coefficient = 1.0;  // lambda
  double skipping_temperature = 1.0;   // alpha
  bool pig_loss = true;
  SkippingSetting skipping = SkippingSetting::pig;
  bool gcsl_loss = false;  // replaces the imitation loss in the lambda slot
  double loss_smoothing = 0.95;
  bool replan_relabeled = false;  // imitation paths re-planned towards hindsight goals

  // evaluation and logging
  int eval_interval_episodes = 50;
  int eval_episodes = 10;
  bool planner_at_test = true;
  bool eval_without_planner = true;
  bool track_entropy = true;
  int entropy_n = 128;
  int entropy_k = 10;
  int checkpoint_every_evals = 0;  // 0: final checkpoint only

  // Set one key from its text form. Throws ConfigError.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  void validate() const;
  MazeSpec maze_spec() const;
  NetworkShape network_shape() const;

  // Canonical "key = value" text, one key per line, in keys() order.
  std::string echo() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Parses "key = value" lines; '#' starts a comment.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig load_config_file(const std::string& path, RunConfig base = {});
// Applies "key=value" overrides in order.
void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides);

}  // namespace gcrl
