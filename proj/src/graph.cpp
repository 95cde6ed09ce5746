#include "gcrl/graph.hpp"

#include <algorithm>
#include <cmath>

#include "gcrl/kernels.hpp"
#include "gcrl/maze.hpp"

namespace gcrl {

std::vector<State> sample_pool(const ReplayBuffer& buf, std::size_t pool_size, std::mt19937_64& rng) {
  if (buf.empty()) throw Error("sample_pool: replay buffer is empty");
  std::uniform_int_distribution<std::size_t> pick(0, buf.size() - 1);
  std::vector<State> pool;
  pool.reserve(pool_size);
  for (std::size_t k = 0; k < pool_size; ++k) pool.push_back(buf.at(pick(rng)).s);
  return pool;
}

std::vector<Landmark> fps_from(std::span<const State> pool, std::size_t budget, std::size_t first) {
  if (pool.empty()) throw Error("fps: empty pool");
  if (first >= pool.size()) throw Error("fps: first index out of range");
  std::vector<Vec2> points;
  points.reserve(pool.size());
  for (const auto& s : pool) points.push_back(goal_map(s).position);

  std::vector<double> dist(pool.size(), kInf);
  std::vector<Landmark> out;
  std::size_t next = first;
  while (out.size() < budget) {
    out.push_back(Landmark{pool[next], goal_map(pool[next])});
    next = kernels::update_min_distances(points, points[next], dist);
    if (!(dist[next] > 0.0)) break;
  }
  return out;
}

std::vector<Landmark> fps(std::span<const State> pool, std::size_t budget, std::mt19937_64& rng) {
  if (pool.empty()) throw Error("fps: empty pool");
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  return fps_from(pool, budget, pick(rng));
}

double covering_radius(std::span<const State> pool, std::span<const Landmark> landmarks) {
  double radius = 0.0;
  for (const auto& s : pool) {
    double best = kInf;
    for (const auto& l : landmarks) best = std::min(best, distance(goal_map(s).position, l.goal.position));
    radius = std::max(radius, best);
  }
  return radius;
}

std::vector<double> ValueDistance::distances(std::span<const State> from, std::span<const Goal> to) const {
  if (from.size() != to.size()) throw DimensionError("distances: size mismatch");
  std::vector<double> out(from.size());
  for (std::size_t start = 0; start < from.size(); start += chunk_) {
    const std::size_t n = std::min(chunk_, from.size() - start);
    const Vector q = ac_.q_of_policy(from.subspan(start, n), to.subspan(start, n));
    for (std::size_t k = 0; k < n; ++k) {
      const double d = -q(static_cast<Eigen::Index>(k));
      out[start + k] = std::isfinite(d) ? std::max(0.0, d) : kInf;
    }
  }
  return out;
}

double estimate_distance(const ActorCritic& ac, const State& from, const Goal& to) {
  return ValueDistance(ac).distances(std::span<const State>(&from, 1), std::span<const Goal>(&to, 1))[0];
}

LandmarkGraph build_graph_from_landmarks(std::vector<Landmark> landmarks, const DistanceModel& model,
                                         double clip_threshold) {
  LandmarkGraph g;
  g.clip_threshold = clip_threshold;
  g.landmarks = std::move(landmarks);
  const std::size_t n = g.landmarks.size();
  std::vector<State> from;
  std::vector<Goal> to;
  from.reserve(n * n);
  to.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      from.push_back(g.landmarks[i].state);
      to.push_back(g.landmarks[j].goal);
    }
  }
  g.weights = model.distances(from, to);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double& w = g.weights[i * n + j];
      if (i == j) {
        w = 0.0;
      } else if (w > clip_threshold) {
        w = kInf;
      }
    }
  }
  return g;
}

LandmarkGraph build_graph(const DistanceModel& model, const ReplayBuffer& buf, std::size_t budget,
                          std::size_t pool_size, double clip_threshold, std::mt19937_64& rng) {
  const auto pool = sample_pool(buf, pool_size, rng);
  return build_graph_from_landmarks(fps(pool, budget, rng), model, clip_threshold);
}

std::optional<NodePath> dijkstra(const DenseDigraph& g, std::size_t source, std::size_t target) {
  if (source >= g.n || target >= g.n) throw Error("dijkstra: node out of range");
  std::vector<double> dist(g.n, kInf);
  std::vector<std::size_t> parent(g.n, g.n);
  std::vector<std::uint8_t> done(g.n, 0);
  dist[source] = 0.0;
  for (std::size_t iter = 0; iter < g.n; ++iter) {
    std::size_t u = g.n;
    for (std::size_t k = 0; k < g.n; ++k)
      if (!done[k] && dist[k] < kInf && (u == g.n || dist[k] < dist[u])) u = k;
    if (u == g.n || u == target) break;
    done[u] = 1;
    for (std::size_t v = 0; v < g.n; ++v) {
      const double w = g.at(u, v);
      if (v == u || done[v] || !(w < kInf)) continue;
      if (dist[u] + w < dist[v]) {
        dist[v] = dist[u] + w;
        parent[v] = u;
      }
    }
  }
  if (!(dist[target] < kInf)) return std::nullopt;
  NodePath out;
  out.cost = dist[target];
  for (std::size_t v = target; v != g.n; v = parent[v]) {
    out.nodes.push_back(v);
    if (v == source) break;
  }
  std::reverse(out.nodes.begin(), out.nodes.end());
  return out;
}

std::optional<NodePath> soft_value_iteration(const DenseDigraph& g, std::size_t source, std::size_t target,
                                             const SoftViOptions& options) {
  if (source >= g.n || target >= g.n) throw Error("soft_value_iteration: node out of range");
  if (!(options.temperature > 0.0)) throw ConfigError("soft value iteration needs temperature > 0");
  const double temp = options.temperature;
  std::vector<double> value(g.n, kInf);
  value[target] = 0.0;
  std::vector<double> next(g.n);
  std::vector<double> terms;
  terms.reserve(g.n);
  for (int it = 0; it < options.iterations; ++it) {
    for (std::size_t u = 0; u < g.n; ++u) {
      if (u == target) {
        next[u] = 0.0;
        continue;
      }
      terms.clear();
      double lowest = kInf;
      for (std::size_t v = 0; v < g.n; ++v) {
        const double x = g.at(u, v) + value[v];
        if (v == u || !(x < kInf)) continue;
        terms.push_back(x);
        lowest = std::min(lowest, x);
      }
      if (terms.empty()) {
        next[u] = kInf;
        continue;
      }
      double sum = 0.0;
      for (double x : terms) sum += std::exp(-(x - lowest) / temp);
      next[u] = lowest - temp * std::log(sum);
    }
    value.swap(next);
  }

  NodePath out;
  std::vector<std::uint8_t> visited(g.n, 0);
  std::size_t u = source;
  out.nodes.push_back(u);
  visited[u] = 1;
  while (u != target) {
    std::size_t best = g.n;
    double best_score = kInf;
    for (std::size_t v = 0; v < g.n; ++v) {
      if (visited[v]) continue;
      const double score = g.at(u, v) + value[v];
      if (score < best_score) {
        best_score = score;
        best = v;
      }
    }
    if (best == g.n) return dijkstra(g, source, target);
    out.cost += g.at(u, best);
    u = best;
    visited[u] = 1;
    out.nodes.push_back(u);
  }
  return out;
}

Planner::Planner(const LandmarkGraph& graph, const DistanceModel& model, PlanMethod method, SoftViOptions options,
                 double hop_cost)
    : graph_(graph), model_(model), method_(method), options_(options), hop_cost_(hop_cost) {
  if (!(hop_cost >= 0.0) || !std::isfinite(hop_cost)) throw Error("planner hop cost must be finite and >= 0");
}

std::optional<Path> Planner::try_plan(const State& s, const Goal& g) {
  const std::size_t n = graph_.size();
  const double clip = graph_.clip_threshold;
  if (!cached_goal_ || !(*cached_goal_ == g)) {
    std::vector<State> from;
    from.reserve(n);
    for (const auto& l : graph_.landmarks) from.push_back(l.state);
    std::vector<Goal> to(n, g);
    into_goal_ = model_.distances(from, to);
    cached_goal_ = g;
  }

  std::vector<State> from(n + 1, s);
  std::vector<Goal> to;
  to.reserve(n + 1);
  for (const auto& l : graph_.landmarks) to.push_back(l.goal);
  to.push_back(g);
  const auto out_of_start = model_.distances(from, to);

  const std::size_t start = n;
  const std::size_t goal = n + 1;
  DenseDigraph expanded(n + 2);
  auto cut = [clip](double w) { return w > clip ? kInf : w; };
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(graph_.weights.begin() + static_cast<std::ptrdiff_t>(i * n), n,
                expanded.w.begin() + static_cast<std::ptrdiff_t>(i * (n + 2)));
    expanded.at(i, goal) = cut(into_goal_[i]);
    expanded.at(start, i) = cut(out_of_start[i]);
  }
  expanded.at(start, goal) = cut(out_of_start[n]);
  if (hop_cost_ > 0.0) {
    for (std::size_t i = 0; i < expanded.n; ++i)
      for (std::size_t j = 0; j < expanded.n; ++j)
        if (i != j) expanded.at(i, j) += hop_cost_;
  }
  expanded.at(start, start) = 0.0;
  expanded.at(goal, goal) = 0.0;

  const auto found = method_ == PlanMethod::dijkstra ? dijkstra(expanded, start, goal)
                                                     : soft_value_iteration(expanded, start, goal, options_);
  if (!found) return std::nullopt;
  Path path;
  path.total_cost = found->cost;
  path.nodes.reserve(found->nodes.size());
  for (std::size_t v : found->nodes) {
    if (v == start) {
      path.nodes.push_back(goal_map(s));
    } else if (v == goal) {
      path.nodes.push_back(g);
    } else {
      path.nodes.push_back(graph_.landmarks[v].goal);
    }
  }
  return path;
}

Path Planner::plan(const State& s, const Goal& g) {
  auto p = try_plan(s, g);
  if (!p) throw NoPathError("no path to goal on the landmark graph");
  return std::move(*p);
}

Path plan(const LandmarkGraph& graph, const DistanceModel& model, const State& s, const Goal& g, PlanMethod method,
          SoftViOptions options, double hop_cost) {
  Planner planner(graph, model, method, options, hop_cost);
  return planner.plan(s, g);
}

Path drop_reached_subgoals(Path path, double radius) {
  if (path.size() <= 2) return path;
  std::size_t k = 1;
  while (k + 1 < path.size() && distance(path.nodes[k].position, path.front().position) <= radius) ++k;
  if (k > 1) path.nodes.erase(path.nodes.begin() + 1, path.nodes.begin() + static_cast<std::ptrdiff_t>(k));
  return path;
}

}  // namespace gcrl
