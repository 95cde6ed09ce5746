#pragma once

// Training loop, evaluation protocol and run checkpoints.
//
// Draw order on the run RNG within one episode: the two reset draws, the
// pool and farthest-point draws when the graph is rebuilt, then per step the
// skipping draws, the exploration draws (two uniforms during warmup, two
// normals afterwards), the transition noise draws when the maze is noisy and
// finally the replay batch draws of every optimisation step. Evaluation and
// the entropy subsample use their own generators derived from the seed, so
// switching them on or off does not perturb training.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gcrl/checkpoint.hpp"
#include "gcrl/config.hpp"
#include "gcrl/ddpg.hpp"
#include "gcrl/graph.hpp"
#include "gcrl/maze.hpp"
#include "gcrl/metrics.hpp"

#ifndef GCRL_DISABLE_PIG
#include "gcrl/pig.hpp"
#endif

namespace gcrl {

// Whether this library was built with the self-imitation module.
bool pig_enabled();

// Everything needed to continue evaluating or training a run except the
// replay buffer.
struct Agent {
  RunConfig config;
  MazeSpec spec;
  ActorCritic ac;
  AdamState actor_opt;
  AdamState critic_opt;
  double latest_pig_loss = std::numeric_limits<double>::infinity();
  std::int64_t pig_updates = 0;
  std::optional<LandmarkGraph> graph;
  std::int64_t env_step = 0;
  std::int64_t episode = 0;
  std::int64_t eval_ticks = 0;
  std::mt19937_64 rng;
};

// Fresh networks and optimisers for a validated config.
Agent make_agent(const RunConfig& cfg);

Container to_checkpoint(const Agent& agent);
// Throws Error when the stored networks do not match the stored config.
Agent from_checkpoint(const Container& c);
void save_checkpoint(const Agent& agent, const std::string& path);
Agent load_checkpoint(const std::string& path);

// Chooses actions for one evaluation episode.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual void begin_episode(const State& /*s*/, const Goal& /*g*/) {}
  virtual Action act(const State& s, const Goal& g) = 0;
};

// Greedy policy, optionally steered towards the nearest planned subgoal.
class AgentController final : public Controller {
 public:
  AgentController(const Agent& agent, bool use_planner);
  void begin_episode(const State& s, const Goal& g) override;
  Action act(const State& s, const Goal& g) override;

 private:
  const Agent& agent_;
  ValueDistance model_;
  std::optional<Planner> planner_;
};

struct EvalOptions {
  int episodes = 10;
  bool use_planner = true;
  std::uint64_t seed = 0;
  // Replaces the random reset for every episode.
  std::optional<std::pair<State, Goal>> fixed_task;
};

// Fraction of episodes reaching the goal within delta before the horizon.
double evaluate(const MazeSpec& spec, Controller& controller, const EvalOptions& options);
double evaluate(const Agent& agent, const EvalOptions& options);

// Seed of the evaluation generator for a given tick of a run.
std::uint64_t eval_seed(std::uint64_t run_seed, std::int64_t tick);

struct TrainOptions {
  std::string out_dir;  // empty: nothing is written
  bool verbose = false;
  std::function<void(const MetricsRow&)> on_eval;
};

struct TrainResult {
  std::vector<MetricsRow> rows;
  Agent agent;
  std::string checkpoint_path;  // empty when out_dir is empty
};

// Runs the full training loop for cfg. Throws ConfigError on an invalid
// config and Error on I/O failures.
TrainResult train(const RunConfig& cfg, const TrainOptions& options = {});

}  // namespace gcrl
