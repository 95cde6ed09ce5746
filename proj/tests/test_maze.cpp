#include <doctest.h>

#include <set>
#include <sstream>

#include "gcrl/maze.hpp"
#include "oracles.hpp"

using namespace gcrl;

namespace {

MazeSpec single_cell() {
  std::istringstream in("cell_size=1 delta=0.5 horizon=10 max_step=1\n###\n#.#\n###\n");
  return parse_maze(in, "single");
}

}  // namespace

TEST_CASE("reset is reproducible and lands in free cells") {
  const MazeSpec u = preset_maze("u");
  const auto a = reset(u, 7);
  const auto b = reset(u, 7);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(in_free_space(u, a.first.position));
  CHECK(in_free_space(u, a.second.position));
  CHECK(oracle::free_point(u, a.first.position));
}

TEST_CASE("reset on a single free cell returns its centre twice") {
  const MazeSpec m = single_cell();
  for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
    const auto [s, g] = reset(m, seed);
    CHECK(s.position == Vec2{1.5, 1.5});
    CHECK(g.position == Vec2{1.5, 1.5});
  }
}

TEST_CASE("reset covers the free cells") {
  const MazeSpec u = preset_maze("u");
  std::set<std::pair<int, int>> seen;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) seen.insert(oracle::cell_of(u, reset(u, seed).first.position));
  const double coverage = static_cast<double>(seen.size()) / static_cast<double>(u.free_cells().size());
  CHECK(coverage >= 0.95);
}

TEST_CASE("step in open space and with clamping") {
  const MazeSpec m = preset_maze("open5");
  CHECK(step(m, State{{2.0, 2.0}}, {0.5, 0.0}).position == Vec2{2.5, 2.0});
  CHECK(step(m, State{{2.0, 2.0}}, {5.0, 0.0}).position == Vec2{3.0, 2.0});
  CHECK(step(m, State{{2.0, 2.0}}, {-3.0, -0.25}).position == Vec2{1.0, 1.75});
}

TEST_CASE("step stops exactly at a wall face") {
  const MazeSpec m = preset_maze("open5");  // free region is [1, 6] x [1, 6]
  const State s{{5.7, 2.0}};
  const State next = step(m, s, {1.0, 0.0});
  CHECK(next.position.x == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(next.position.y == 2.0);
  const Vec2 o = oracle::step(m, s.position, {1.0, 0.0});
  CHECK(next.position.x == doctest::Approx(o.x).epsilon(1e-15));
  // Resting on the face, pushing further leaves the state unchanged.
  CHECK(step(m, next, {0.4, 0.0}).position.x == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("step matches the exact segment-vs-grid slide on random moves") {
  std::mt19937_64 rng(3);
  for (const char* name : {"u", "l", "s"}) {
    const MazeSpec m = preset_maze(name);
    std::uniform_real_distribution<double> a(-1.6, 1.6);
    State s = reset(m, rng).first;
    for (int k = 0; k < 5000; ++k) {
      const Action act{a(rng), a(rng)};
      const State next = step(m, s, act);
      const Vec2 o = oracle::step(m, s.position, act);
      REQUIRE(std::abs(next.position.x - o.x) < 1e-12);
      REQUIRE(std::abs(next.position.y - o.y) < 1e-12);
      s = next;
    }
  }
}

TEST_CASE("trajectories never tunnel through walls") {
  std::mt19937_64 rng(11);
  for (const char* name : {"u", "s"}) {
    const MazeSpec m = preset_maze(name);
    std::uniform_real_distribution<double> a(-1.0, 1.0);
    State s = reset(m, rng).first;
    for (int k = 0; k < 2000; ++k) {
      const State next = step(m, s, {a(rng), a(rng)});
      // The x leg then the y leg, both densely sub-sampled.
      const Vec2 corner{next.position.x, s.position.y};
      for (int i = 0; i <= 100; ++i) {
        const double t = i / 100.0;
        REQUIRE(oracle::free_point(m, s.position + t * (corner - s.position)));
        REQUIRE(oracle::free_point(m, corner + t * (next.position - corner)));
      }
      s = next;
    }
  }
}

TEST_CASE("step is deterministic without noise and noisy steps stay valid") {
  MazeSpec m = preset_maze("u");
  CHECK(step(m, State{{2.0, 2.0}}, {0.3, 0.7}) == step(m, State{{2.0, 2.0}}, {0.3, 0.7}));
  m.noise_std = 0.3;
  CHECK_THROWS_AS(step(m, State{{2.0, 2.0}}, {0.3, 0.7}), Error);
  std::mt19937_64 rng(5);
  State s{{2.0, 2.0}};
  for (int k = 0; k < 1000; ++k) {
    s = step(m, s, {0.5, 0.5}, &rng);
    REQUIRE(oracle::free_point(m, s.position));
  }
}

TEST_CASE("reward and goal map") {
  CHECK(reward(State{{1.0, 1.0}}, Goal{{1.0, 1.05}}, 0.1) == 0.0);
  CHECK(reward(State{{0.0, 0.0}}, Goal{{5.0, 5.0}}, 0.1) == -1.0);
  CHECK(reward(State{{0.0, 0.0}}, Goal{{0.5, 0.0}}, 0.5) == 0.0);
  CHECK(reward(State{{0.0, 0.0}}, Goal{{0.5000001, 0.0}}, 0.5) == -1.0);
  CHECK(goal_map(State{{3.2, 7.1}}).position == Vec2{3.2, 7.1});
  const MazeSpec u = preset_maze("u");
  std::mt19937_64 rng(2);
  for (int k = 0; k < 100; ++k) {
    const State s = reset(u, rng).first;
    CHECK(in_free_space(u, goal_map(s).position));
    CHECK(reward(s, goal_map(s), 1e-9) == 0.0);
    CHECK(is_success(s, goal_map(s), 0.5));
  }
}

TEST_CASE("maze text format round trip and validation") {
  for (const char* name : {"u", "l", "s", "open5"}) {
    const MazeSpec m = preset_maze(name);
    CHECK(m.width() == m.cols * m.cell_size);
    std::istringstream in(format_maze(m));
    const MazeSpec back = parse_maze(in, name);
    CHECK(back.free == m.free);
    CHECK(back.rows == m.rows);
    CHECK(back.delta == m.delta);
    CHECK(back.horizon == m.horizon);
  }
  const MazeSpec u = preset_maze("u");
  CHECK(u.rows == 15);
  CHECK(u.cols == 15);
  CHECK(u.delta == 0.5);
  CHECK(u.horizon == 50);
  CHECK(u.max_step == 1.0);

  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_maze(in);
  };
  CHECK_THROWS_AS(parse("cell_size=1 delta=0.5 horizon=10 max_step=1\n#####\n#.#.#\n#####\n"), ConfigError);
  CHECK_THROWS_AS(parse("cell_size=1 delta=0.5 horizon=10 max_step=1\n#.#\n#.#\n###\n"), ConfigError);
  CHECK_THROWS_AS(parse("cell_size=1 delta=0 horizon=10 max_step=1\n###\n#.#\n###\n"), ConfigError);
  CHECK_THROWS_AS(parse("cell_size=1 delta=0.5 horizon=0 max_step=1\n###\n#.#\n###\n"), ConfigError);
  CHECK_THROWS_AS(parse("cell_size=1 delta=0.5 horizon=5 max_step=-1\n###\n#.#\n###\n"), ConfigError);
  CHECK_THROWS_AS(parse("cell_size=1 delta=0.5 horizon=5 max_step=1\n###\n###\n###\n"), ConfigError);
  CHECK_THROWS_AS(preset_maze("nope"), ConfigError);
  const MazeSpec scaled = parse("cell_size=2 delta=0.5 horizon=5 max_step=1\n####\n#..#\n####\n");
  CHECK(scaled.width() == 8.0);
  CHECK(step(scaled, State{{3.0, 3.0}}, {1.0, 1.0}).position == Vec2{4.0, 4.0});
}

TEST_CASE("bundled maze files load") {
  const MazeSpec noisy = load_maze_file(GCRL_SOURCE_DIR "/mazes/u_noisy.txt");
  CHECK(noisy.noise_std == 0.05);
  CHECK(noisy.free == preset_maze("u").free);
  const MazeSpec spiral = load_maze_file(GCRL_SOURCE_DIR "/mazes/spiral.txt");
  CHECK(spiral.horizon == 120);
  CHECK(oracle::geodesic(spiral, {1.5, 1.5}, {7.5, 7.5}) > 40);
  std::istringstream again(format_maze(spiral));
  CHECK(parse_maze(again).free == spiral.free);
}
