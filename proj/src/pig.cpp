#include "gcrl/pig.hpp"

#include <cmath>

namespace gcrl {

void LossTracker::record(double loss) {
  if (update_count == 0 || !std::isfinite(latest_pig_loss)) {
    latest_pig_loss = loss;
  } else {
    latest_pig_loss = smoothing * latest_pig_loss + (1.0 - smoothing) * loss;
  }
  ++update_count;
}

AuxiliaryTerm pig_loss(const Mlp& actor, const InputEncoder& encoder, std::span<const ImitationSample> batch) {
  if (batch.empty()) throw Error("pig_loss: empty batch");
  const std::size_t n = batch.size();
  std::vector<State> states;
  std::vector<Goal> goals;
  std::vector<State> sub_states;
  std::vector<Goal> sub_goals;
  states.reserve(n);
  goals.reserve(n);
  for (const auto& smp : batch) {
    if (smp.path == nullptr || smp.path->size() < 2) throw Error("pig_loss: path needs at least two nodes");
    states.push_back(smp.s);
    goals.push_back(smp.g);
    for (std::size_t k = 1; k < smp.path->size(); ++k) {
      sub_states.push_back(smp.s);
      sub_goals.push_back(smp.path->nodes[k]);
    }
  }

  const ForwardCache cache = actor.forward_cached(encoder.policy_inputs(states, goals));
  // Subgoal-conditioned actions are constants here (stop-gradient).
  const Matrix frozen = actor.forward(encoder.policy_inputs(sub_states, sub_goals));

  Matrix upstream = Matrix::Zero(cache.output.rows(), cache.output.cols());
  double total = 0.0;
  Eigen::Index col = 0;
  const double inv_batch = 1.0 / static_cast<double>(n);
  for (std::size_t b = 0; b < n; ++b) {
    const auto hops = static_cast<Eigen::Index>(batch[b].path->size() - 1);
    const auto bc = static_cast<Eigen::Index>(b);
    double per_sample = 0.0;
    for (Eigen::Index k = 0; k < hops; ++k, ++col) {
      const Vector diff = cache.output.col(bc) - frozen.col(col);
      per_sample += diff.squaredNorm();
      upstream.col(bc) += 2.0 * diff;
    }
    const double norm = 1.0 / static_cast<double>(hops);
    total += per_sample * norm;
    upstream.col(bc) *= norm * inv_batch;
  }

  AuxiliaryTerm out;
  out.loss = total * inv_batch;
  out.grads = actor.backward(cache, upstream, true, false);
  return out;
}

std::vector<ImitationSample> imitation_samples(const RelabeledBatch& batch) {
  std::vector<ImitationSample> out;
  out.reserve(batch.size());
  for (const auto& smp : batch) {
    if (smp.source == nullptr) throw Error("imitation_samples: sample has no source transition");
    out.push_back(ImitationSample{smp.s, &smp.source->path, smp.source->g});
  }
  return out;
}

double jump_probability(double alpha, double latest_pig_loss) {
  if (alpha <= 0.0) return 0.0;
  if (latest_pig_loss <= alpha) return 1.0;
  return alpha / latest_pig_loss;
}

SkipResult skip_subgoal(const Path& path, const SkipConfig& skip, const LossTracker& tracker, std::mt19937_64& rng) {
  if (path.size() < 2) throw Error("skip_subgoal: path needs at least two nodes");
  const std::size_t last = path.size() - 1;
  SkipResult out{path.nodes[1], 1, 0};
  if (skip.mode == SkipMode::off) return out;
  if (skip.mode == SkipMode::random) {
    std::uniform_int_distribution<std::size_t> pick(1, last);
    out.index = pick(rng);
    out.jumps = static_cast<int>(out.index - 1);
    out.subgoal = path.nodes[out.index];
    return out;
  }

  const double p = jump_probability(skip.alpha, tracker.latest_pig_loss);
  if (p <= 0.0) return out;
  std::bernoulli_distribution jump(p);
  while (out.index < last) {
    if (p < 1.0 && !jump(rng)) break;
    ++out.index;
    ++out.jumps;
  }
  out.subgoal = path.nodes[out.index];
  return out;
}

AuxiliaryTerm gcsl_loss(const Mlp& actor, const InputEncoder& encoder, const RelabeledBatch& batch) {
  if (batch.empty()) throw Error("gcsl_loss: empty batch");
  std::vector<State> states;
  std::vector<Goal> goals;
  Matrix stored(2, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    states.push_back(batch[j].s);
    goals.push_back(batch[j].g_used);
    stored.col(static_cast<Eigen::Index>(j)) << batch[j].a.x, batch[j].a.y;
  }
  const ForwardCache cache = actor.forward_cached(encoder.policy_inputs(states, goals));
  const Matrix diff = cache.output - stored;
  const double n = static_cast<double>(batch.size());
  AuxiliaryTerm out;
  out.loss = diff.colwise().squaredNorm().sum() / n;
  out.grads = actor.backward(cache, (2.0 / n) * diff, true, false);
  return out;
}

}  // namespace gcrl
