#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace gcrl {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;

  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

// Agent configuration. For the point mazes this is the position only.
struct State {
  Vec2 position;
  friend bool operator==(const State&, const State&) = default;
};

// A point in goal space (x, y).
struct Goal {
  Vec2 position;
  friend bool operator==(const Goal&, const Goal&) = default;
};

using Action = Vec2;

// Subgoal sequence l^1 .. l^N from phi(current state) to the target goal.
struct Path {
  std::vector<Goal> nodes;
  double total_cost = 0.0;

  std::size_t size() const { return nodes.size(); }
  const Goal& front() const { return nodes.front(); }
  const Goal& back() const { return nodes.back(); }
};

// The trivial path (phi(s), g) used before a graph exists or when planning fails.
inline Path direct_path(Goal from, Goal to) { return Path{{from, to}, 0.0}; }

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct NoPathError : Error {
  using Error::Error;
};

}  // namespace gcrl
