#pragma once

// Continuous 2-D point mazes.
//
// The occupancy grid is stored row-major; row r covers y in [r*cell_size,
// (r+1)*cell_size] and column c covers x in [c*cell_size, (c+1)*cell_size].
// The first line of the text format is row 0. Free space is the union of the
// closed free cells, so a point resting on a wall face is a valid state.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gcrl/types.hpp"

namespace gcrl {

struct MazeSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> free;  // rows*cols, 1 = free
  double cell_size = 1.0;
  int horizon = 50;
  double delta = 0.5;
  double max_step = 1.0;
  double noise_std = 0.0;

  double width() const { return cols * cell_size; }
  double height() const { return rows * cell_size; }
  bool cell_free(int r, int c) const {
    return r >= 0 && r < rows && c >= 0 && c < cols && free[static_cast<std::size_t>(r) * cols + c] != 0;
  }
  std::vector<std::pair<int, int>> free_cells() const;
  Vec2 cell_center(int r, int c) const { return {(c + 0.5) * cell_size, (r + 0.5) * cell_size}; }
};

// Throws ConfigError on an invalid spec: bad dimensions, non-positive delta or
// max_step, horizon < 1, an open outer boundary, no free cell, or a free
// region that is not 4-connected.
void validate(const MazeSpec& spec);

// Parses the text format:
//   cell_size=<float> delta=<float> horizon=<int> max_step=<float> [noise_std=<float>]
//   #####
//   #...#
//   #####
MazeSpec parse_maze(std::istream& in, std::string name = "custom");
MazeSpec load_maze_file(const std::string& path);
std::string format_maze(const MazeSpec& spec);

// Named presets: "u" (15x15 U-shaped, the 2DReach layout), "l", "s", "open5".
MazeSpec preset_maze(const std::string& name);
bool is_preset_maze(const std::string& name);

// True when p lies in the closed free region.
bool in_free_space(const MazeSpec& spec, Vec2 p);

inline Goal goal_map(const State& s) { return Goal{s.position}; }

// Start and goal drawn independently and uniformly over free cells (at the
// cell centre). Consumes exactly two draws of `rng`.
std::pair<State, Goal> reset(const MazeSpec& spec, std::mt19937_64& rng);
std::pair<State, Goal> reset(const MazeSpec& spec, std::uint64_t rng_seed);

// Clamps the action to [-max_step, max_step] per axis and slides against the
// walls one axis at a time (x first, then y). With noise_std > 0, Gaussian
// noise is added to the displacement before collision handling; `rng` must
// then be non-null.
State step(const MazeSpec& spec, const State& s, Action a, std::mt19937_64* rng = nullptr);

// 0 when |goal_map(s_next) - g| <= delta, otherwise -1.
inline double reward(const State& s_next, const Goal& g, double delta) {
  return distance(goal_map(s_next).position, g.position) <= delta ? 0.0 : -1.0;
}

inline bool is_success(const State& s_next, const Goal& g, double delta) {
  return reward(s_next, g, delta) == 0.0;
}

}  // namespace gcrl
