#include "gcrl/ddpg.hpp"

#include <algorithm>

namespace gcrl {
namespace {

Mlp make_net(int in, int hidden_layers, int units, int out, OutputActivation act, double bound) {
  std::vector<int> dims{in};
  for (int i = 0; i < hidden_layers; ++i) dims.push_back(units);
  dims.push_back(out);
  return Mlp(dims, act, bound);
}

std::vector<State> states_of(const RelabeledBatch& b) {
  std::vector<State> out;
  out.reserve(b.size());
  for (const auto& x : b) out.push_back(x.s);
  return out;
}

std::vector<State> next_states_of(const RelabeledBatch& b) {
  std::vector<State> out;
  out.reserve(b.size());
  for (const auto& x : b) out.push_back(x.s_next);
  return out;
}

std::vector<Goal> goals_of(const RelabeledBatch& b) {
  std::vector<Goal> out;
  out.reserve(b.size());
  for (const auto& x : b) out.push_back(x.g_used);
  return out;
}

Matrix actions_of(const RelabeledBatch& b) {
  Matrix a(2, static_cast<Eigen::Index>(b.size()));
  for (std::size_t j = 0; j < b.size(); ++j) {
    a(0, static_cast<Eigen::Index>(j)) = b[j].a.x;
    a(1, static_cast<Eigen::Index>(j)) = b[j].a.y;
  }
  return a;
}

}  // namespace

InputEncoder InputEncoder::for_extent(double width, double height, double action_bound) {
  return InputEncoder{{width / 2.0, height / 2.0}, {width / 2.0, height / 2.0}, action_bound};
}

Matrix InputEncoder::policy_inputs(std::span<const State> s, std::span<const Goal> g) const {
  if (s.size() != g.size()) throw DimensionError("policy_inputs: state/goal count mismatch");
  Matrix x(4, static_cast<Eigen::Index>(s.size()));
  for (std::size_t j = 0; j < s.size(); ++j) {
    const Vec2 ps = position(s[j].position);
    const Vec2 pg = position(g[j].position);
    x.col(static_cast<Eigen::Index>(j)) << ps.x, ps.y, pg.x, pg.y;
  }
  return x;
}

Matrix InputEncoder::critic_inputs(std::span<const State> s, const Matrix& actions, std::span<const Goal> g) const {
  if (s.size() != g.size() || actions.cols() != static_cast<Eigen::Index>(s.size()) || actions.rows() != 2) {
    throw DimensionError("critic_inputs: shape mismatch");
  }
  Matrix x(6, static_cast<Eigen::Index>(s.size()));
  for (std::size_t j = 0; j < s.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(j);
    const Vec2 ps = position(s[j].position);
    const Vec2 pg = position(g[j].position);
    x.col(c) << ps.x, ps.y, actions(0, c) / action_scale, actions(1, c) / action_scale, pg.x, pg.y;
  }
  return x;
}

ActorCritic ActorCritic::create(const NetworkShape& shape, const InputEncoder& encoder, double action_bound,
                                double gamma, std::mt19937_64& rng) {
  ActorCritic ac;
  ac.actor = make_net(4, shape.actor_hidden_layers, shape.hidden_units, 2, OutputActivation::scaled_tanh, action_bound);
  ac.critic = make_net(6, shape.critic_hidden_layers, shape.hidden_units, 1, OutputActivation::linear, 1.0);
  ac.actor.initialize(rng, 1e-3);
  ac.critic.initialize(rng);
  ac.actor_target = ac.actor;
  ac.critic_target = ac.critic;
  ac.encoder = encoder;
  ac.gamma = gamma;
  ac.action_bound = action_bound;
  return ac;
}

Matrix ActorCritic::act(std::span<const State> s, std::span<const Goal> g, bool target) const {
  return (target ? actor_target : actor).forward(encoder.policy_inputs(s, g));
}

Action ActorCritic::act(const State& s, const Goal& g) const {
  const Matrix a = act(std::span<const State>(&s, 1), std::span<const Goal>(&g, 1));
  return {a(0, 0), a(1, 0)};
}

Vector ActorCritic::q_values(std::span<const State> s, const Matrix& actions, std::span<const Goal> g,
                             bool target) const {
  const Matrix q = (target ? critic_target : critic).forward(encoder.critic_inputs(s, actions, g));
  return q.row(0).transpose();
}

Vector ActorCritic::q_of_policy(std::span<const State> s, std::span<const Goal> g) const {
  return q_values(s, act(s, g), g);
}

Action select_action(const ActorCritic& ac, const State& s, const Goal& goal, double noise_std, std::mt19937_64& rng) {
  Action a = ac.act(s, goal);
  if (noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_std);
    a.x += noise(rng);
    a.y += noise(rng);
  }
  a.x = std::clamp(a.x, -ac.action_bound, ac.action_bound);
  a.y = std::clamp(a.y, -ac.action_bound, ac.action_bound);
  return a;
}

Vector td_targets(const ActorCritic& ac, const RelabeledBatch& batch, const CriticOptions& options) {
  const auto next = next_states_of(batch);
  const auto goals = goals_of(batch);
  const bool use_target = !options.literal_target;
  const Matrix next_actions = ac.act(next, goals, use_target);
  const Vector q_next = ac.q_values(next, next_actions, goals, use_target);
  Vector y(static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(j);
    double v = batch[j].success ? batch[j].r : batch[j].r + ac.gamma * q_next(c);
    if (options.q_target_clip > 0.0) v = std::clamp(v, -options.q_target_clip, 0.0);
    y(c) = v;
  }
  return y;
}

CriticStep critic_gradient(const ActorCritic& ac, const RelabeledBatch& batch, const CriticOptions& options) {
  if (batch.empty()) throw Error("critic_gradient: empty batch");
  const Vector y = td_targets(ac, batch, options);
  const auto states = states_of(batch);
  const auto goals = goals_of(batch);
  const ForwardCache cache = ac.critic.forward_cached(ac.encoder.critic_inputs(states, actions_of(batch), goals));
  const double n = static_cast<double>(batch.size());
  const Vector diff = cache.output.row(0).transpose() - y;
  CriticStep out;
  out.loss = diff.squaredNorm() / n;
  const Matrix upstream = (2.0 / n) * diff.transpose();
  out.grads = ac.critic.backward(cache, upstream, true, false);
  return out;
}

double critic_update(ActorCritic& ac, const RelabeledBatch& batch, AdamState& opt, const CriticOptions& options) {
  CriticStep step = critic_gradient(ac, batch, options);
  adam_step(ac.critic, step.grads, opt);
  return step.loss;
}

ActorStep actor_gradient(const ActorCritic& ac, const RelabeledBatch& batch, const AuxiliaryTerm* aux, double weight,
                         double action_l2) {
  if (batch.empty()) throw Error("actor_gradient: empty batch");
  const auto states = states_of(batch);
  const auto goals = goals_of(batch);
  const double n = static_cast<double>(batch.size());

  const ForwardCache actor_cache = ac.actor.forward_cached(ac.encoder.policy_inputs(states, goals));
  const Matrix& actions = actor_cache.output;
  const ForwardCache critic_cache = ac.critic.forward_cached(ac.encoder.critic_inputs(states, actions, goals));

  ActorStep out;
  out.actor_loss = -critic_cache.output.sum() / n;
  out.l2_loss = actions.colwise().squaredNorm().sum() / n;

  const Matrix critic_upstream = Matrix::Constant(1, critic_cache.output.cols(), -1.0 / n);
  const GradBundle through_critic = ac.critic.backward(critic_cache, critic_upstream, false, true);
  // Rows 2..3 of the critic input are the encoded action a / action_scale.
  Matrix action_upstream = through_critic.input.middleRows(2, 2) / ac.encoder.action_scale;
  if (action_l2 != 0.0) action_upstream += (2.0 * action_l2 / n) * actions;

  out.grads = ac.actor.backward(actor_cache, action_upstream, true, false);
  out.total = out.actor_loss + action_l2 * out.l2_loss;
  if (aux != nullptr) {
    out.auxiliary_loss = aux->loss;
    if (weight != 0.0) {
      GradBundle scaled = aux->grads;
      scaled.scale(weight);
      out.grads += scaled;
      out.total += weight * aux->loss;
    }
  }
  return out;
}

ActorStep actor_update(ActorCritic& ac, const RelabeledBatch& batch, const AuxiliaryTerm* aux, double weight,
                       double action_l2, AdamState& opt) {
  ActorStep step = actor_gradient(ac, batch, aux, weight, action_l2);
  adam_step(ac.actor, step.grads, opt);
  return step;
}

void update_targets(ActorCritic& ac, double rho) {
  polyak_update(ac.actor_target, ac.actor, rho);
  polyak_update(ac.critic_target, ac.critic, rho);
}

}  // namespace gcrl
