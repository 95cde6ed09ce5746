#pragma once

// Landmark graph over visited states and shortest-path subgoal planning.

#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "gcrl/ddpg.hpp"
#include "gcrl/replay.hpp"

namespace gcrl {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Landmark {
  State state;
  Goal goal;  // goal_map(state)
};

struct LandmarkGraph {
  std::vector<Landmark> landmarks;
  // weights[i * n + j]: estimated steps from landmark i to landmark j; +inf when cut.
  std::vector<double> weights;
  double clip_threshold = 4.0;

  std::size_t size() const { return landmarks.size(); }
  double weight(std::size_t i, std::size_t j) const { return weights[i * landmarks.size() + j]; }
};

// pool_size states drawn uniformly with replacement from the stored s fields.
std::vector<State> sample_pool(const ReplayBuffer& buf, std::size_t pool_size, std::mt19937_64& rng);

// Farthest point sampling in goal space starting from pool[first]. Stops at
// `budget` landmarks or when every pool point coincides with a landmark.
std::vector<Landmark> fps_from(std::span<const State> pool, std::size_t budget, std::size_t first);
// Same with the first landmark drawn uniformly from the pool.
std::vector<Landmark> fps(std::span<const State> pool, std::size_t budget, std::mt19937_64& rng);

// Largest distance from a pool point to its nearest landmark.
double covering_radius(std::span<const State> pool, std::span<const Landmark> landmarks);

// Interface for anything that can estimate step counts between a state and a
// goal. The value-function estimator is the production implementation; tests
// plug in exact oracles.
class DistanceModel {
 public:
  virtual ~DistanceModel() = default;
  // out[k] = estimated distance from from[k] to to[k].
  virtual std::vector<double> distances(std::span<const State> from, std::span<const Goal> to) const = 0;
};

// d(s, g) = max(0, -Q(s, pi(s, g), g)) with the online networks.
class ValueDistance final : public DistanceModel {
 public:
  explicit ValueDistance(const ActorCritic& ac, std::size_t chunk = 2048) : ac_(ac), chunk_(chunk) {}
  std::vector<double> distances(std::span<const State> from, std::span<const Goal> to) const override;

 private:
  const ActorCritic& ac_;
  std::size_t chunk_;
};

double estimate_distance(const ActorCritic& ac, const State& from, const Goal& to);

LandmarkGraph build_graph_from_landmarks(std::vector<Landmark> landmarks, const DistanceModel& model,
                                         double clip_threshold);

// sample_pool + fps + all-pairs weighting with clipping.
LandmarkGraph build_graph(const DistanceModel& model, const ReplayBuffer& buf, std::size_t budget,
                          std::size_t pool_size, double clip_threshold, std::mt19937_64& rng);

enum class PlanMethod { dijkstra, soft_vi };

struct SoftViOptions {
  int iterations = 20;
  double temperature = 0.9;
};

// Dense directed graph with +inf for missing edges.
struct DenseDigraph {
  std::size_t n = 0;
  std::vector<double> w;  // n * n

  explicit DenseDigraph(std::size_t nodes = 0) : n(nodes), w(nodes * nodes, kInf) {}
  double& at(std::size_t i, std::size_t j) { return w[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return w[i * n + j]; }
};

struct NodePath {
  std::vector<std::size_t> nodes;
  double cost = 0.0;
};

std::optional<NodePath> dijkstra(const DenseDigraph& g, std::size_t source, std::size_t target);

// Smoothed Bellman backups D(u) <- -T log sum_v exp(-(w(u,v) + D(v)) / T)
// towards `target`, then greedy successor extraction. Falls back to the
// exact path when greedy extraction revisits a node or dead-ends.
std::optional<NodePath> soft_value_iteration(const DenseDigraph& g, std::size_t source, std::size_t target,
                                             const SoftViOptions& options);

// Plans on a landmark graph expanded with the agent's state and the target
// goal. Edges into the goal depend only on the goal, so they are cached
// between calls that share it. hop_cost is added to every edge that survives
// clipping: -Q counts the steps before the one that reaches the goal, so a
// hop cost of 1 turns path costs into step counts.
class Planner {
 public:
  Planner(const LandmarkGraph& graph, const DistanceModel& model, PlanMethod method, SoftViOptions options = {},
          double hop_cost = 0.0);

  // Returns nullopt when the goal is unreachable on the expanded graph.
  std::optional<Path> try_plan(const State& s, const Goal& g);
  // Throws NoPathError when unreachable.
  Path plan(const State& s, const Goal& g);

  const LandmarkGraph& graph() const { return graph_; }

 private:
  const LandmarkGraph& graph_;
  const DistanceModel& model_;
  PlanMethod method_;
  SoftViOptions options_;
  double hop_cost_;
  std::optional<Goal> cached_goal_;
  std::vector<double> into_goal_;
};

Path plan(const LandmarkGraph& graph, const DistanceModel& model, const State& s, const Goal& g, PlanMethod method,
          SoftViOptions options = {}, double hop_cost = 0.0);

// Removes the leading intermediate subgoals that already lie within `radius`
// of the path start, so that l^2 is never a waypoint the agent has reached.
// The start and the final goal are always kept.
Path drop_reached_subgoals(Path path, double radius);

}  // namespace gcrl
