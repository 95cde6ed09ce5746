#pragma once

// Planning-guided self-imitation and subgoal skipping.
//
// The imitation loss pulls the target-goal-conditioned action towards frozen
// copies of the actions the same policy takes for every later subgoal on the
// stored planned path. Skipping turns that loss into a per-hop probability of
// advancing past the nearest planned subgoal during execution.

#include <limits>
#include <random>
#include <span>

#include "gcrl/ddpg.hpp"

namespace gcrl {

struct LossTracker {
  double latest_pig_loss = std::numeric_limits<double>::infinity();
  std::int64_t update_count = 0;
  // Weight on the previous value; 0 keeps only the newest loss.
  double smoothing = 0.95;

  void record(double loss);
};

enum class SkipMode { off, pig, random };

struct SkipConfig {
  double alpha = 1.0;
  SkipMode mode = SkipMode::pig;
};

// One sample for the imitation loss: state, stored path, original goal.
struct ImitationSample {
  State s;
  const Path* path = nullptr;
  Goal g;
};

// mean_b (1/(N-1)) sum_{k=2..N} |pi(s,g) - SG(pi(s,l^k))|^2 and its gradient
// through the pi(s, g) branch only. Throws on paths shorter than 2.
AuxiliaryTerm pig_loss(const Mlp& actor, const InputEncoder& encoder, std::span<const ImitationSample> batch);

// Samples from a relabelled batch using each transition's stored goal and path.
std::vector<ImitationSample> imitation_samples(const RelabeledBatch& batch);

inline double total_actor_loss(double actor_loss, double pig, double lambda) { return actor_loss + lambda * pig; }

// min(alpha / latest, 1); exactly 0 whenever alpha == 0.
double jump_probability(double alpha, double latest_pig_loss);

struct SkipResult {
  Goal subgoal;
  std::size_t index = 1;  // position in path.nodes
  int jumps = 0;
};

// Starts at l^2 and keeps advancing while Bernoulli(jump_probability) draws
// succeed, stopping at l^N. Draws are made only when 0 < p < 1. In random
// mode the subgoal is uniform over l^2..l^N instead.
SkipResult skip_subgoal(const Path& path, const SkipConfig& skip, const LossTracker& tracker, std::mt19937_64& rng);

// mean |pi(s, g_used) - a|^2 over the batch and its gradient.
AuxiliaryTerm gcsl_loss(const Mlp& actor, const InputEncoder& encoder, const RelabeledBatch& batch);

}  // namespace gcrl
