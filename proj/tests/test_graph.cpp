#include <doctest.h>

#include <numeric>
#include <set>

#include "gcrl/graph.hpp"
#include "gcrl/maze.hpp"
#include "oracles.hpp"

using namespace gcrl;

namespace {

ActorCritic small_ac(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ActorCritic::create(NetworkShape{1, 1, 8}, InputEncoder::for_extent(15.0, 15.0, 1.0), 1.0, 0.99, rng);
}

void set_constant_critic(ActorCritic& ac, double q) {
  ac.critic.set_zero();
  ac.critic.layer(ac.critic.layer_count() - 1).bias.setConstant(q);
}

ReplayBuffer buffer_of(const std::vector<Vec2>& points) {
  ReplayBuffer buf(points.size() + 1);
  int t = 0;
  for (const auto& p : points) {
    buf.push(Transition{State{p}, {0, 0}, -1.0, State{p}, Goal{{0, 0}}, direct_path(Goal{p}, Goal{{0, 0}}), false, 0,
                        t++});
  }
  return buf;
}

std::vector<State> states_1d(const std::vector<double>& xs) {
  std::vector<State> out;
  for (double x : xs) out.push_back(State{{x, 0.0}});
  return out;
}

// Distances given by a table keyed on the x coordinate of goals and states.
class TableDistance final : public DistanceModel {
 public:
  explicit TableDistance(std::function<double(double, double)> f) : f_(std::move(f)) {}
  std::vector<double> distances(std::span<const State> from, std::span<const Goal> to) const override {
    std::vector<double> out;
    for (std::size_t k = 0; k < from.size(); ++k) out.push_back(f_(from[k].position.x, to[k].position.x));
    return out;
  }

 private:
  std::function<double(double, double)> f_;
};

}  // namespace

TEST_CASE("sample_pool draws stored states") {
  std::mt19937_64 rng(1);
  const auto one = sample_pool(buffer_of({{2.0, 3.0}}), 5, rng);
  CHECK(one.size() == 5);
  for (const auto& s : one) CHECK(s.position == Vec2{2.0, 3.0});
  CHECK(sample_pool(buffer_of({{2.0, 3.0}}), 0, rng).empty());
  CHECK_THROWS_AS(fps(std::vector<State>{}, 3, rng), Error);
  CHECK_THROWS_AS(sample_pool(ReplayBuffer(4), 3, rng), Error);

  const auto two = sample_pool(buffer_of({{1.0, 1.0}, {2.0, 2.0}}), 10000, rng);
  double first = 0;
  for (const auto& s : two) first += s.position.x == 1.0 ? 1.0 : 0.0;
  CHECK(std::abs(first / 10000.0 - 0.5) <= 0.02);
}

TEST_CASE("farthest point sampling hand example") {
  const auto pool = states_1d({0.0, 2.0, 5.0, 9.0});
  const auto l = fps_from(pool, 3, 0);
  REQUIRE(l.size() == 3);
  CHECK(l[0].goal.position.x == 0.0);
  CHECK(l[1].goal.position.x == 9.0);
  CHECK(l[2].goal.position.x == 5.0);
  for (const auto& lm : l) CHECK(lm.goal == goal_map(lm.state));
}

TEST_CASE("farthest point sampling stops at the distinct pool size") {
  const auto pool = states_1d({1.0, 1.0, 4.0, 4.0, 4.0, 7.0});
  std::mt19937_64 rng(2);
  const auto l = fps(pool, 10, rng);
  std::set<double> xs;
  for (const auto& lm : l) xs.insert(lm.goal.position.x);
  CHECK(l.size() == 3);
  CHECK(xs == std::set<double>{1.0, 4.0, 7.0});
  CHECK(fps(pool, 1, rng).size() == 1);
}

TEST_CASE("covering radius shrinks and beats random subsets") {
  const MazeSpec u = preset_maze("u");
  std::mt19937_64 rng(3);
  int wins = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<State> pool;
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);
    for (int k = 0; k < 300; ++k) {
      const auto cell = reset(u, rng).first.position;
      pool.push_back(State{{cell.x + jitter(rng), cell.y + jitter(rng)}});
    }
    const auto l = fps(pool, 20, rng);
    if (trial < 5) {
      double prev = kInf;
      for (std::size_t k = 1; k <= l.size(); ++k) {
        const double r = covering_radius(pool, std::span<const Landmark>(l.data(), k));
        CHECK(r <= prev);
        prev = r;
      }
    }
    std::vector<Landmark> random;
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int k = 0; k < 20; ++k) random.push_back(Landmark{pool[idx[k]], goal_map(pool[idx[k]])});
    if (covering_radius(pool, l) <= covering_radius(pool, random)) ++wins;
  }
  CHECK(wins >= 95);
}

TEST_CASE("estimate_distance follows the critic") {
  ActorCritic ac = small_ac(4);
  set_constant_critic(ac, 0.0);
  CHECK(estimate_distance(ac, State{{1.0, 1.0}}, Goal{{5.0, 5.0}}) == 0.0);
  set_constant_critic(ac, -7.0);
  CHECK(estimate_distance(ac, State{{1.0, 1.0}}, Goal{{5.0, 5.0}}) == doctest::Approx(7.0).epsilon(1e-15));
  set_constant_critic(ac, 3.0);  // positive values clamp to zero
  CHECK(estimate_distance(ac, State{{1.0, 1.0}}, Goal{{5.0, 5.0}}) == 0.0);
}

TEST_CASE("build_graph edge cases") {
  ActorCritic ac = small_ac(5);
  std::mt19937_64 rng(5);
  const ReplayBuffer buf = buffer_of({{1.5, 1.5}, {3.5, 1.5}, {5.5, 2.5}, {1.5, 7.5}});
  const ValueDistance model(ac);
  const LandmarkGraph one = build_graph(model, buf, 1, 10, 4.0, rng);
  CHECK(one.size() == 1);
  CHECK(one.weights == std::vector<double>{0.0});

  set_constant_critic(ac, -5.0);
  const LandmarkGraph cut = build_graph(model, buf, 4, 200, 4.0, rng);
  CHECK(cut.size() == 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(cut.weight(i, j) == (i == j ? 0.0 : kInf));
}

TEST_CASE("graph weights equal clipped geodesics under an oracle critic") {
  const MazeSpec u = preset_maze("u");
  std::mt19937_64 rng(6);
  std::vector<Vec2> visited;
  for (int k = 0; k < 200; ++k) visited.push_back(reset(u, rng).first.position);
  const ReplayBuffer buf = buffer_of(visited);
  const oracle::GeodesicDistance model(u);
  const LandmarkGraph g = build_graph(model, buf, 30, 200, 4.0, rng);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double d = oracle::geodesic(u, g.landmarks[i].state.position, g.landmarks[j].goal.position);
      const double expected = i == j ? 0.0 : (d > 4.0 ? kInf : d);
      CHECK(g.weight(i, j) == expected);
      CHECK(g.weight(i, j) >= 0.0);
    }
  }
}

TEST_CASE("dijkstra three-node chain") {
  DenseDigraph g(3);
  for (std::size_t i = 0; i < 3; ++i) g.at(i, i) = 0.0;
  g.at(0, 1) = 1.0;
  g.at(1, 2) = 1.0;
  const auto p = dijkstra(g, 0, 2);
  REQUIRE(p);
  CHECK(p->nodes == std::vector<std::size_t>{0, 1, 2});
  CHECK(p->cost == 2.0);
  CHECK_FALSE(dijkstra(g, 2, 0));
}

TEST_CASE("planner returns the direct path when it is cheapest") {
  // One landmark at x = 5; start at 0, goal at 1.
  const TableDistance model([](double a, double b) { return std::abs(a - b); });
  LandmarkGraph g;
  g.landmarks = {Landmark{State{{5.0, 0.0}}, Goal{{5.0, 0.0}}}};
  g.weights = {0.0};
  const Path p = plan(g, model, State{{0.0, 0.0}}, Goal{{1.0, 0.0}}, PlanMethod::dijkstra);
  REQUIRE(p.size() == 2);
  CHECK(p.front() == Goal{{0.0, 0.0}});
  CHECK(p.back() == Goal{{1.0, 0.0}});
  CHECK(p.total_cost == 1.0);
}

TEST_CASE("planner routes through landmarks when the direct edge is cut") {
  // A at 0, B at 3, C at 6; clip 4 cuts A -> C.
  const TableDistance model([](double a, double b) { return std::abs(a - b); });
  LandmarkGraph g;
  g.clip_threshold = 4.0;
  g.landmarks = {Landmark{State{{3.0, 0.0}}, Goal{{3.0, 0.0}}}};
  g.weights = {0.0};
  for (auto method : {PlanMethod::dijkstra, PlanMethod::soft_vi}) {
    const Path p = plan(g, model, State{{0.0, 0.0}}, Goal{{6.0, 0.0}}, method);
    REQUIRE(p.size() == 3);
    CHECK(p.nodes[1] == Goal{{3.0, 0.0}});
    CHECK(p.total_cost == 6.0);
  }
  CHECK_THROWS_AS(plan(g, model, State{{0.0, 0.0}}, Goal{{12.0, 0.0}}, PlanMethod::dijkstra), NoPathError);
  Planner planner(g, model, PlanMethod::dijkstra);
  CHECK_FALSE(planner.try_plan(State{{0.0, 0.0}}, Goal{{12.0, 0.0}}));
}

TEST_CASE("hop cost breaks ties between zero-cost chains and the direct edge") {
  // Landmarks at 1, 2, 3 between start 0 and goal 4. Every edge of length <= 1
  // is free and longer ones cost their length, as a critic does when a single
  // step reaches the goal.
  const TableDistance model([](double a, double b) {
    const double gap = std::abs(a - b);
    return gap <= 1.0 ? 0.0 : gap;
  });
  LandmarkGraph g;
  g.clip_threshold = 10.0;
  for (double x : {1.0, 2.0, 3.0}) g.landmarks.push_back(Landmark{State{{x, 0.0}}, Goal{{x, 0.0}}});
  g.weights.assign(9, 0.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      g.weights[i * 3 + j] = model.distances(std::vector<State>{g.landmarks[i].state},
                                             std::vector<Goal>{g.landmarks[j].goal})[0];

  const Path raw = plan(g, model, State{{0.0, 0.0}}, Goal{{4.0, 0.0}}, PlanMethod::dijkstra);
  CHECK(raw.total_cost == 0.0);
  CHECK(raw.size() == 5);

  // With one step per hop the cost is the number of steps: 4 via the chain,
  // 5 directly.
  const Path hops = plan(g, model, State{{0.0, 0.0}}, Goal{{4.0, 0.0}}, PlanMethod::dijkstra, {}, 1.0);
  CHECK(hops.size() == 5);
  CHECK(hops.total_cost == 4.0);
  CHECK(hops.nodes[1] == Goal{{1.0, 0.0}});

  // A goal one step away is reached directly.
  const Path near = plan(g, model, State{{0.0, 0.0}}, Goal{{1.0, 0.0}}, PlanMethod::dijkstra, {}, 1.0);
  CHECK(near.size() == 2);
  CHECK(near.total_cost == 1.0);

  CHECK_THROWS_AS(Planner(g, model, PlanMethod::dijkstra, {}, -1.0), Error);
}

TEST_CASE("dijkstra matches brute force on random clipped digraphs") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> size(2, 8);
  for (int trial = 0; trial < 300; ++trial) {
    const auto g = oracle::random_digraph(rng, size(rng), 4.0);
    const double best = oracle::brute_force_cost(g, 0, g.n - 1);
    const auto p = dijkstra(g, 0, g.n - 1);
    if (!std::isfinite(best)) {
      CHECK_FALSE(p);
      continue;
    }
    REQUIRE(p);
    CHECK(p->cost == best);
    CHECK(oracle::path_cost(g, p->nodes) == best);
  }
}

TEST_CASE("plans on the landmark graph start at the state and end at the goal") {
  const MazeSpec u = preset_maze("u");
  std::mt19937_64 rng(8);
  std::vector<Vec2> visited;
  for (int k = 0; k < 300; ++k) visited.push_back(reset(u, rng).first.position);
  const oracle::GeodesicDistance model(u);
  const LandmarkGraph g = build_graph(model, buffer_of(visited), 60, 300, 4.0, rng);
  Planner planner(g, model, PlanMethod::dijkstra);
  for (int k = 0; k < 100; ++k) {
    const auto [s, goal] = reset(u, rng);
    const auto p = planner.try_plan(s, goal);
    if (!p) continue;
    CHECK(p->front() == goal_map(s));
    CHECK(p->back() == goal);
    CHECK(p->size() >= 2);
    CHECK(p->total_cost >= oracle::geodesic(u, s.position, goal.position) - 1e-12);
  }
}

TEST_CASE("soft value iteration approaches the exact planner") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> size(2, 8);
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = oracle::random_digraph(rng, size(rng), 4.0);
    const auto exact = dijkstra(g, 0, g.n - 1);
    const auto cold = soft_value_iteration(g, 0, g.n - 1, SoftViOptions{20, 1e-3});
    const auto warm = soft_value_iteration(g, 0, g.n - 1, SoftViOptions{20, 0.9});
    if (!exact) {
      CHECK_FALSE(cold);
      CHECK_FALSE(warm);
      continue;
    }
    REQUIRE(cold);
    REQUIRE(warm);
    CHECK(std::abs(cold->cost - exact->cost) <= 1e-6);
    CHECK(std::isfinite(warm->cost));
    CHECK(warm->nodes.front() == 0);
    CHECK(warm->nodes.back() == g.n - 1);
    CHECK(oracle::path_cost(g, warm->nodes) == doctest::Approx(warm->cost));
  }
  CHECK_THROWS_AS(soft_value_iteration(DenseDigraph(2), 0, 1, SoftViOptions{20, 0.0}), ConfigError);
}

TEST_CASE("reached leading subgoals are dropped") {
  Path p;
  for (double x : {0.0, 0.2, 0.4, 1.5, 0.1, 3.0}) p.nodes.push_back(Goal{{x, 0.0}});
  const Path q = drop_reached_subgoals(p, 0.5);
  REQUIRE(q.size() == 4);
  CHECK(q.nodes[0] == p.nodes[0]);
  CHECK(q.nodes[1] == p.nodes[3]);
  CHECK(q.nodes[2] == p.nodes[4]);  // only the leading run is removed
  CHECK(q.back() == p.back());

  Path all_close;
  for (double x : {0.0, 0.1, 0.2}) all_close.nodes.push_back(Goal{{x, 0.0}});
  const Path r = drop_reached_subgoals(all_close, 0.5);
  REQUIRE(r.size() == 2);
  CHECK(r.back() == all_close.back());  // the goal itself is never dropped
  CHECK(drop_reached_subgoals(direct_path(Goal{{0, 0}}, Goal{{0.1, 0}}), 0.5).size() == 2);
  CHECK(drop_reached_subgoals(p, 0.0).size() == p.size());
}
