#include "gcrl/maze.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

namespace gcrl {
namespace {

constexpr double kGridTolerance = 1e-9;

// Coordinate in cell units, snapped to the nearest grid line when within
// tolerance so that positions resting on a wall face are classified stably.
double grid_coord(double v, double cell_size) {
  const double q = v / cell_size;
  const double r = std::round(q);
  return std::abs(q - r) < kGridTolerance ? r : q;
}

// Cells of one axis touched by coordinate v (two when v is on a grid line).
std::pair<int, int> touched_cells(double v, double cell_size) {
  const double q = grid_coord(v, cell_size);
  const int lo = static_cast<int>(std::floor(q));
  if (q == static_cast<double>(lo)) return {lo - 1, lo};
  return {lo, lo};
}

const std::vector<std::string>& preset_rows(const std::string& name) {
  static const std::vector<std::string> u = {
      "###############", "#...#######...#", "#...#######...#", "#...#######...#", "#...#######...#",
      "#...#######...#", "#...#######...#", "#...#######...#", "#...#######...#", "#...#######...#",
      "#...#######...#", "#.............#", "#.............#", "#.............#", "###############",
  };
  static const std::vector<std::string> l = {
      "###############", "#...###########", "#...###########", "#...###########", "#...###########",
      "#...###########", "#...###########", "#...###########", "#...###########", "#...###########",
      "#...###########", "#.............#", "#.............#", "#.............#", "###############",
  };
  static const std::vector<std::string> s = {
      "###############", "#.............#", "#.............#", "#.............#", "##########....#",
      "##########....#", "#.............#", "#.............#", "#.............#", "#....##########",
      "#....##########", "#.............#", "#.............#", "#.............#", "###############",
  };
  static const std::vector<std::string> open5 = {
      "#######", "#.....#", "#.....#", "#.....#", "#.....#", "#.....#", "#######",
  };
  if (name == "u") return u;
  if (name == "l") return l;
  if (name == "s") return s;
  if (name == "open5") return open5;
  throw ConfigError("unknown maze preset '" + name + "'");
}

MazeSpec from_rows(const std::string& name, const std::vector<std::string>& rows) {
  MazeSpec spec;
  spec.name = name;
  spec.rows = static_cast<int>(rows.size());
  spec.cols = rows.empty() ? 0 : static_cast<int>(rows.front().size());
  spec.free.reserve(static_cast<std::size_t>(spec.rows) * spec.cols);
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != spec.cols) throw ConfigError("maze rows have unequal length");
    for (char ch : row) {
      if (ch == '#') {
        spec.free.push_back(0);
      } else if (ch == '.') {
        spec.free.push_back(1);
      } else {
        throw ConfigError(std::string("invalid maze character '") + ch + "'");
      }
    }
  }
  return spec;
}

// Moves coordinate `from` by `delta` along one axis, stopping at the first
// blocked cell. `open(c)` reports whether cell index c along the axis is free.
template <typename Open>
double slide_axis(double from, double delta, double cell_size, int cells, Open open) {
  if (delta == 0.0) return from;
  const double target = from + delta;
  const double q = grid_coord(from, cell_size);
  auto blocked = [&](int c) { return c < 0 || c >= cells || !open(c); };
  if (delta > 0.0) {
    for (int c = static_cast<int>(std::floor(q));; ++c) {
      if (blocked(c)) return std::max(from, c * cell_size);
      if ((c + 1) * cell_size >= target) return target;
    }
  }
  for (int c = static_cast<int>(std::ceil(q)) - 1;; --c) {
    if (blocked(c)) return std::min(from, (c + 1) * cell_size);
    if (c * cell_size <= target) return target;
  }
}

}  // namespace

std::vector<std::pair<int, int>> MazeSpec::free_cells() const {
  std::vector<std::pair<int, int>> out;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (cell_free(r, c)) out.emplace_back(r, c);
  return out;
}

void validate(const MazeSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1 ||
      spec.free.size() != static_cast<std::size_t>(spec.rows) * static_cast<std::size_t>(spec.cols)) {
    throw ConfigError("maze grid has invalid dimensions");
  }
  if (!(spec.cell_size > 0.0) || !std::isfinite(spec.cell_size)) throw ConfigError("cell_size must be > 0");
  if (!(spec.delta > 0.0)) throw ConfigError("delta must be > 0");
  if (!(spec.max_step > 0.0)) throw ConfigError("max_step must be > 0");
  if (spec.horizon < 1) throw ConfigError("horizon must be >= 1");
  if (!(spec.noise_std >= 0.0)) throw ConfigError("noise_std must be >= 0");
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const bool border = r == 0 || c == 0 || r == spec.rows - 1 || c == spec.cols - 1;
      if (border && spec.cell_free(r, c)) throw ConfigError("maze outer boundary must be wall");
    }
  }
  const auto cells = spec.free_cells();
  if (cells.empty()) throw ConfigError("maze has no free cell");

  std::vector<std::uint8_t> seen(spec.free.size(), 0);
  std::queue<std::pair<int, int>> frontier;
  frontier.push(cells.front());
  seen[static_cast<std::size_t>(cells.front().first) * spec.cols + cells.front().second] = 1;
  std::size_t reached = 0;
  while (!frontier.empty()) {
    const auto [r, c] = frontier.front();
    frontier.pop();
    ++reached;
    constexpr int dr[] = {1, -1, 0, 0};
    constexpr int dc[] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int nr = r + dr[k];
      const int nc = c + dc[k];
      if (!spec.cell_free(nr, nc)) continue;
      auto& flag = seen[static_cast<std::size_t>(nr) * spec.cols + nc];
      if (flag) continue;
      flag = 1;
      frontier.emplace(nr, nc);
    }
  }
  if (reached != cells.size()) throw ConfigError("maze free space is not connected");
}

MazeSpec parse_maze(std::istream& in, std::string name) {
  std::string header;
  if (!std::getline(in, header)) throw ConfigError("maze file is empty");
  std::vector<std::string> rows;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(line);
  }
  MazeSpec spec = from_rows(name, rows);

  std::istringstream fields(header);
  bool have[4] = {false, false, false, false};
  for (std::string field; fields >> field;) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ConfigError("bad maze header field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    try {
      if (key == "cell_size") {
        spec.cell_size = std::stod(value);
        have[0] = true;
      } else if (key == "delta") {
        spec.delta = std::stod(value);
        have[1] = true;
      } else if (key == "horizon") {
        spec.horizon = std::stoi(value);
        have[2] = true;
      } else if (key == "max_step") {
        spec.max_step = std::stod(value);
        have[3] = true;
      } else if (key == "noise_std") {
        spec.noise_std = std::stod(value);
      } else {
        throw ConfigError("unknown maze header key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw ConfigError("bad maze header value '" + field + "'");
    }
  }
  if (!(have[0] && have[1] && have[2] && have[3])) {
    throw ConfigError("maze header needs cell_size, delta, horizon and max_step");
  }
  validate(spec);
  return spec;
}

MazeSpec load_maze_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open maze file '" + path + "'");
  return parse_maze(in, path);
}

std::string format_maze(const MazeSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  out << "cell_size=" << spec.cell_size << " delta=" << spec.delta << " horizon=" << spec.horizon
      << " max_step=" << spec.max_step;
  if (spec.noise_std > 0.0) out << " noise_std=" << spec.noise_std;
  out << '\n';
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) out << (spec.cell_free(r, c) ? '.' : '#');
    out << '\n';
  }
  return out.str();
}

bool is_preset_maze(const std::string& name) {
  return name == "u" || name == "l" || name == "s" || name == "open5";
}

MazeSpec preset_maze(const std::string& name) {
  MazeSpec spec = from_rows(name, preset_rows(name));
  validate(spec);
  return spec;
}

bool in_free_space(const MazeSpec& spec, Vec2 p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
  const auto [r0, r1] = touched_cells(p.y, spec.cell_size);
  const auto [c0, c1] = touched_cells(p.x, spec.cell_size);
  for (int r : {r0, r1})
    for (int c : {c0, c1})
      if (spec.cell_free(r, c)) return true;
  return false;
}

std::pair<State, Goal> reset(const MazeSpec& spec, std::mt19937_64& rng) {
  const auto cells = spec.free_cells();
  std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
  const auto start = cells[pick(rng)];
  const auto goal = cells[pick(rng)];
  return {State{spec.cell_center(start.first, start.second)}, Goal{spec.cell_center(goal.first, goal.second)}};
}

std::pair<State, Goal> reset(const MazeSpec& spec, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  return reset(spec, rng);
}

State step(const MazeSpec& spec, const State& s, Action a, std::mt19937_64* rng) {
  const double bound = spec.max_step;
  auto clamp = [bound](double v) { return std::isfinite(v) ? std::clamp(v, -bound, bound) : 0.0; };
  Vec2 move{clamp(a.x), clamp(a.y)};
  if (spec.noise_std > 0.0) {
    if (rng == nullptr) throw Error("step: noisy maze requires an rng");
    std::normal_distribution<double> noise(0.0, spec.noise_std);
    move.x += noise(*rng);
    move.y += noise(*rng);
  }

  Vec2 p = s.position;
  {
    const auto [r0, r1] = touched_cells(p.y, spec.cell_size);
    p.x = slide_axis(p.x, move.x, spec.cell_size, spec.cols,
                     [&](int c) { return spec.cell_free(r0, c) || spec.cell_free(r1, c); });
  }
  {
    const auto [c0, c1] = touched_cells(p.x, spec.cell_size);
    p.y = slide_axis(p.y, move.y, spec.cell_size, spec.rows,
                     [&](int r) { return spec.cell_free(r, c0) || spec.cell_free(r, c1); });
  }
  return State{p};
}

}  // namespace gcrl
