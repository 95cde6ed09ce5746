#pragma once

// DDPG actor-critic with universal (goal-conditioned) value functions.

#include <random>
#include <span>

#include "gcrl/mlp.hpp"
#include "gcrl/replay.hpp"

namespace gcrl {

// Fixed affine map of raw positions and actions into network inputs:
// positions to roughly [-1, 1] over the maze extent, actions divided by the
// action bound.
struct InputEncoder {
  Vec2 center{0.0, 0.0};
  Vec2 half_extent{1.0, 1.0};
  double action_scale = 1.0;

  static InputEncoder for_extent(double width, double height, double action_bound);

  Vec2 position(Vec2 p) const { return {(p.x - center.x) / half_extent.x, (p.y - center.y) / half_extent.y}; }

  // Columns [s, g] (4 rows).
  Matrix policy_inputs(std::span<const State> s, std::span<const Goal> g) const;
  // Columns [s, a, g] (6 rows).
  Matrix critic_inputs(std::span<const State> s, const Matrix& actions, std::span<const Goal> g) const;

  friend bool operator==(const InputEncoder&, const InputEncoder&) = default;
};

struct NetworkShape {
  int actor_hidden_layers = 4;
  int critic_hidden_layers = 5;
  int hidden_units = 400;
};

struct ActorCritic {
  Mlp actor;   // [s, g] -> action, scaled tanh
  Mlp critic;  // [s, a, g] -> Q, linear
  Mlp actor_target;
  Mlp critic_target;
  InputEncoder encoder;
  double gamma = 0.99;
  double action_bound = 1.0;

  static ActorCritic create(const NetworkShape& shape, const InputEncoder& encoder, double action_bound, double gamma,
                            std::mt19937_64& rng);

  // Actions as a 2 x B matrix.
  Matrix act(std::span<const State> s, std::span<const Goal> g, bool target = false) const;
  Action act(const State& s, const Goal& g) const;
  // Q values (length B) for explicit actions.
  Vector q_values(std::span<const State> s, const Matrix& actions, std::span<const Goal> g, bool target = false) const;
  // Q(s, pi(s, g), g) with the online networks.
  Vector q_of_policy(std::span<const State> s, std::span<const Goal> g) const;
};

// clamp(pi(s, g) + N(0, noise_std^2), +-action_bound). No draws when noise_std == 0.
Action select_action(const ActorCritic& ac, const State& s, const Goal& goal, double noise_std, std::mt19937_64& rng);

struct CriticOptions {
  // Targets are clipped to [-q_target_clip, 0] when q_target_clip > 0.
  double q_target_clip = 0.0;
  // Use the online actor and critic inside the bootstrap target.
  bool literal_target = false;
};

struct CriticStep {
  double loss = 0.0;  // before the update
  GradBundle grads;
};

// TD targets y = r + gamma * Q'(s', pi'(s', g), g), or y = r on success.
Vector td_targets(const ActorCritic& ac, const RelabeledBatch& batch, const CriticOptions& options);

// Mean squared TD error and its gradient, without updating.
CriticStep critic_gradient(const ActorCritic& ac, const RelabeledBatch& batch, const CriticOptions& options);
double critic_update(ActorCritic& ac, const RelabeledBatch& batch, AdamState& opt, const CriticOptions& options = {});

// Extra actor objective computed elsewhere (self-imitation or GCSL), already
// differentiated with respect to the actor parameters.
struct AuxiliaryTerm {
  double loss = 0.0;
  GradBundle grads;
};

struct ActorStep {
  double actor_loss = 0.0;      // -mean Q(s, pi(s, g), g)
  double auxiliary_loss = 0.0;  // as passed in, before weighting
  double l2_loss = 0.0;         // mean |pi(s, g)|^2
  double total = 0.0;
  GradBundle grads;
};

// Gradient of actor_loss + weight * aux + action_l2 * l2_loss. Goals are the
// batch's g_used. The critic is held fixed.
ActorStep actor_gradient(const ActorCritic& ac, const RelabeledBatch& batch, const AuxiliaryTerm* aux, double weight,
                         double action_l2);

// One Adam step on the objective above. Returns the pre-step loss parts.
ActorStep actor_update(ActorCritic& ac, const RelabeledBatch& batch, const AuxiliaryTerm* aux, double weight,
                       double action_l2, AdamState& opt);

void update_targets(ActorCritic& ac, double rho);

}  // namespace gcrl
