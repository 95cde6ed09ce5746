#include <doctest.h>

#include <cmath>

#include "gcrl/ddpg.hpp"
#include "gcrl/maze.hpp"
#include "oracles.hpp"

using namespace gcrl;

namespace {

ActorCritic small_ac(std::uint64_t seed, int layers = 2, int units = 12) {
  std::mt19937_64 rng(seed);
  return ActorCritic::create(NetworkShape{layers, layers, units}, InputEncoder::for_extent(15.0, 15.0, 1.0), 1.0, 0.99,
                             rng);
}

void make_constant(Mlp& net, double value) {
  net.set_zero();
  net.layer(net.layer_count() - 1).bias.setConstant(value);
}

// One episode of `len` steps along x, stored contiguously.
void push_episode(ReplayBuffer& buf, std::int64_t id, int len, Vec2 start, Goal g) {
  State s{start};
  for (int t = 0; t < len; ++t) {
    const State next{{s.position.x + 0.5, s.position.y}};
    const double r = reward(next, g, 0.5);
    buf.push(Transition{s, {0.5, 0.0}, r, next, g, direct_path(goal_map(s), g), r == 0.0, id, t});
    s = next;
  }
}

RelabeledBatch batch_from(const ReplayBuffer& buf, std::size_t n, std::mt19937_64& rng) {
  return her_sample(buf, std::min(n, buf.size()), 0.5, 5, 0.5, rng);
}

// Concatenation of `rounds` full-occupancy batches.
RelabeledBatch repeated_her(const ReplayBuffer& buf, int rounds, double ratio, int range, std::mt19937_64& rng) {
  RelabeledBatch out;
  for (int i = 0; i < rounds; ++i) {
    auto b = her_sample(buf, buf.size(), ratio, range, 0.5, rng);
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

}  // namespace

TEST_CASE("select_action without noise is the actor output") {
  ActorCritic ac = small_ac(1);
  std::mt19937_64 rng(1);
  const State s{{3.0, 4.0}};
  const Goal g{{10.0, 2.0}};
  const auto before = rng;
  const Action a = select_action(ac, s, g, 0.0, rng);
  CHECK(a == ac.act(s, g));
  CHECK(rng == before);
  make_constant(ac.actor, 0.0);
  CHECK(select_action(ac, s, g, 0.0, rng) == Action{0.0, 0.0});
}

TEST_CASE("exploration noise has the configured spread") {
  ActorCritic ac = small_ac(2);
  make_constant(ac.actor, 0.0);
  std::mt19937_64 rng(2);
  double sx = 0.0, sxx = 0.0, sy = 0.0, syy = 0.0;
  const int n = 10000;
  for (int k = 0; k < n; ++k) {
    const Action a = select_action(ac, State{{2.0, 2.0}}, Goal{{3.0, 3.0}}, 0.2, rng);
    CHECK(std::abs(a.x) <= 1.0);
    sx += a.x;
    sxx += a.x * a.x;
    sy += a.y;
    syy += a.y * a.y;
  }
  const double stdx = std::sqrt(sxx / n - (sx / n) * (sx / n));
  const double stdy = std::sqrt(syy / n - (sy / n) * (sy / n));
  CHECK(std::abs(stdx - 0.2) < 0.02);
  CHECK(std::abs(stdy - 0.2) < 0.02);
}

TEST_CASE("replay buffer ring semantics") {
  ReplayBuffer buf(5);
  push_episode(buf, 0, 3, {1.0, 1.0}, Goal{{9.0, 1.0}});
  CHECK(buf.size() == 3);
  CHECK(buf.remaining_in_episode(0) == 3);
  CHECK(buf.remaining_in_episode(2) == 1);
  push_episode(buf, 1, 4, {1.0, 2.0}, Goal{{9.0, 2.0}});
  CHECK(buf.size() == 5);
  CHECK(buf.total_pushed() == 7);
  CHECK(buf.at(0).episode_id == 0);
  CHECK(buf.at(0).t == 2);
  CHECK(buf.at(4).episode_id == 1);
  CHECK(buf.remaining_in_episode(1) == 4);
  CHECK_THROWS_AS(ReplayBuffer(0), ConfigError);
}

TEST_CASE("her_sample with ratio 0 returns stored transitions") {
  ReplayBuffer buf(100);
  push_episode(buf, 0, 10, {1.0, 1.0}, Goal{{12.0, 1.0}});
  std::mt19937_64 rng(3);
  for (const auto& smp : repeated_her(buf, 5, 0.0, 50, rng)) {
    CHECK_FALSE(smp.relabeled);
    CHECK(smp.g_used == smp.source->g);
    CHECK(smp.r == smp.source->r);
    CHECK(smp.s == smp.source->s);
    CHECK(smp.a == smp.source->a);
  }
}

TEST_CASE("her_sample with ratio 1 and range 1 relabels to the next state") {
  ReplayBuffer buf(100);
  push_episode(buf, 0, 10, {1.0, 1.0}, Goal{{12.0, 1.0}});
  std::mt19937_64 rng(4);
  for (const auto& smp : repeated_her(buf, 5, 1.0, 1, rng)) {
    CHECK(smp.relabeled);
    CHECK(smp.g_used == goal_map(smp.s_next));
    CHECK(smp.r == 0.0);
    CHECK(smp.success);
  }
}

TEST_CASE("her_sample relabel fraction concentrates around the ratio") {
  ReplayBuffer buf(1000);
  for (int e = 0; e < 20; ++e) push_episode(buf, e, 10, {1.0, 1.0 + 0.1 * e}, Goal{{12.0, 1.0}});
  std::mt19937_64 rng(5);
  const auto batch = repeated_her(buf, 50, 0.8, 50, rng);
  double relabeled = 0.0;
  for (const auto& smp : batch) relabeled += smp.relabeled ? 1.0 : 0.0;
  const double frac = relabeled / static_cast<double>(batch.size());
  CHECK(frac >= 0.78);
  CHECK(frac <= 0.82);
  CHECK_THROWS_AS(her_sample(buf, 201, 0.8, 50, 0.5, rng), Error);
}

TEST_CASE("her_sample never crosses episode boundaries") {
  // Adversarial: many one- and two-step episodes, some overwritten by the ring.
  ReplayBuffer buf(37);
  for (int e = 0; e < 60; ++e) push_episode(buf, e, 1 + e % 2, {1.0 + (e % 9), 1.0 + 0.1 * (e % 7)}, Goal{{14, 14}});
  std::mt19937_64 rng(6);
  for (const auto& smp : repeated_her(buf, 150, 1.0, 50, rng)) {
    const auto* src = smp.source;
    bool found = false;
    for (std::size_t i = 0; i < buf.size(); ++i) {
      const auto& tr = buf.at(i);
      if (tr.episode_id == src->episode_id && tr.t >= src->t && goal_map(tr.s_next) == smp.g_used) found = true;
    }
    REQUIRE(found);
    CHECK(smp.r == reward(smp.s_next, smp.g_used, 0.5));
  }
}

TEST_CASE("td target arithmetic and bootstrap cut") {
  ActorCritic ac = small_ac(7);
  make_constant(ac.critic_target, -10.0);
  RelabeledBatch batch(2);
  batch[0].r = -1.0;
  batch[0].success = false;
  batch[1].r = 0.0;
  batch[1].success = true;
  const Vector y = td_targets(ac, batch, CriticOptions{});
  CHECK(y(0) == doctest::Approx(-10.9).epsilon(1e-14));
  CHECK(y(1) == 0.0);

  make_constant(ac.critic_target, -500.0);
  CHECK(td_targets(ac, batch, CriticOptions{100.0, false})(0) == -100.0);

  // The literal form bootstraps from the online critic instead.
  make_constant(ac.critic, -2.0);
  CHECK(td_targets(ac, batch, CriticOptions{0.0, true})(0) == doctest::Approx(-1.0 - 0.99 * 2.0));
}

TEST_CASE("critic already at its targets has zero loss and does not move") {
  ActorCritic ac = small_ac(8);
  make_constant(ac.critic, -100.0);
  make_constant(ac.critic_target, -100.0);
  RelabeledBatch batch(4);
  for (auto& smp : batch) smp.r = -1.0;  // y = -1 + 0.99 * -100 = -100
  AdamState opt = AdamState::for_parameters(ac.critic.parameter_count(), 2e-4);
  const Mlp before = ac.critic;
  CHECK(critic_update(ac, batch, opt) == doctest::Approx(0.0).epsilon(1e-20));
  CHECK(ac.critic == before);
}

TEST_CASE("critic gradient matches finite differences") {
  std::mt19937_64 rng(9);
  ReplayBuffer buf(200);
  for (int e = 0; e < 5; ++e) push_episode(buf, e, 8, {1.0, 1.0 + e}, Goal{{5.0, 1.0 + e}});
  for (int trial = 0; trial < 10; ++trial) {
    ActorCritic ac = small_ac(100 + trial, 1 + trial % 2, 6 + trial);
    const auto batch = batch_from(buf, 16, rng);
    const CriticOptions opts{};
    const CriticStep step = critic_gradient(ac, batch, opts);
    const Vector y = td_targets(ac, batch, opts);
    auto f = [&] {
      double sum = 0.0;
      for (std::size_t j = 0; j < batch.size(); ++j) {
        const auto& smp = batch[j];
        const Vec2 s = ac.encoder.position(smp.s.position);
        const Vec2 g = ac.encoder.position(smp.g_used.position);
        const auto q = oracle::forward(ac.critic, {s.x, s.y, smp.a.x, smp.a.y, g.x, g.y})[0];
        const double d = q - y(static_cast<Eigen::Index>(j));
        sum += d * d;
      }
      return sum / static_cast<double>(batch.size());
    };
    CHECK(step.loss == doctest::Approx(f()).epsilon(1e-12));
    CHECK(oracle::rel_error(oracle::flat_grads(step.grads), oracle::fd_params(ac.critic, f)) < 1e-4);
  }
}

TEST_CASE("actor gradient is zero when the critic ignores the action") {
  ActorCritic ac = small_ac(10);
  // Zero the critic's action columns in the first layer.
  ac.critic.layer(0).weights.col(2).setZero();
  ac.critic.layer(0).weights.col(3).setZero();
  ReplayBuffer buf(100);
  push_episode(buf, 0, 10, {1.0, 1.0}, Goal{{9.0, 1.0}});
  std::mt19937_64 rng(10);
  const auto batch = batch_from(buf, 20, rng);
  const ActorStep st = actor_gradient(ac, batch, nullptr, 0.0, 0.0);
  for (double v : oracle::flat_grads(st.grads)) CHECK(v == 0.0);
}

TEST_CASE("combined actor objective matches finite differences") {
  std::mt19937_64 rng(11);
  ReplayBuffer buf(200);
  for (int e = 0; e < 5; ++e) push_episode(buf, e, 8, {1.0, 1.0 + e}, Goal{{5.0, 1.0 + e}});
  for (int trial = 0; trial < 10; ++trial) {
    ActorCritic ac = small_ac(200 + trial, 1 + trial % 3, 5 + trial);
    ac.actor.initialize(rng);  // larger actor weights than the default small final layer
    const auto batch = batch_from(buf, 12, rng);
    const double l2 = 0.5;
    const ActorStep st = actor_gradient(ac, batch, nullptr, 0.0, l2);
    auto f = [&] {
      double q_sum = 0.0;
      double a_sq = 0.0;
      for (const auto& smp : batch) {
        const Vec2 s = ac.encoder.position(smp.s.position);
        const Vec2 g = ac.encoder.position(smp.g_used.position);
        const auto a = oracle::forward(ac.actor, {s.x, s.y, g.x, g.y});
        q_sum += oracle::forward(ac.critic, {s.x, s.y, a[0] / ac.encoder.action_scale, a[1] / ac.encoder.action_scale,
                                             g.x, g.y})[0];
        a_sq += a[0] * a[0] + a[1] * a[1];
      }
      const double n = static_cast<double>(batch.size());
      return -q_sum / n + l2 * a_sq / n;
    };
    CHECK(st.total == doctest::Approx(f()).epsilon(1e-12));
    CHECK(oracle::rel_error(oracle::flat_grads(st.grads), oracle::fd_params(ac.actor, f)) < 1e-4);
  }
}

TEST_CASE("actor update with zero weight ignores the auxiliary term") {
  ActorCritic ac = small_ac(12);
  ReplayBuffer buf(100);
  push_episode(buf, 0, 10, {1.0, 1.0}, Goal{{9.0, 1.0}});
  std::mt19937_64 rng(12);
  const auto batch = batch_from(buf, 20, rng);
  AuxiliaryTerm aux;
  aux.loss = 3.0;
  aux.grads = zero_grads_like(ac.actor);
  for (auto& w : aux.grads.weights) w.setConstant(1.0);
  const ActorStep with = actor_gradient(ac, batch, &aux, 0.0, 0.5);
  const ActorStep without = actor_gradient(ac, batch, nullptr, 0.0, 0.5);
  CHECK(oracle::flat_grads(with.grads) == oracle::flat_grads(without.grads));
  const ActorStep weighted = actor_gradient(ac, batch, &aux, 2.0, 0.5);
  CHECK(weighted.total == doctest::Approx(without.total + 6.0));
}

TEST_CASE("target updates apply polyak to both networks") {
  ActorCritic ac = small_ac(13);
  make_constant(ac.actor_target, 0.0);
  make_constant(ac.critic_target, 0.0);
  ac.actor.for_each_block([](std::span<double> b) { std::fill(b.begin(), b.end(), 1.0); });
  ac.critic.for_each_block([](std::span<double> b) { std::fill(b.begin(), b.end(), 1.0); });
  for (int k = 0; k < 3; ++k) update_targets(ac, 0.99);
  const double expected = 1.0 - std::pow(0.99, 3);
  ac.actor_target.for_each_block([&](std::span<const double> b) {
    for (double v : b) CHECK(v == doctest::Approx(expected).epsilon(1e-12));
  });
  ac.critic_target.for_each_block([&](std::span<const double> b) {
    for (double v : b) CHECK(v == doctest::Approx(expected).epsilon(1e-12));
  });
}
