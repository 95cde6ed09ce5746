#include "gcrl/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace gcrl {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("config key '" + key + "': bad integer '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::logic_error&) {
    throw ConfigError("config key '" + key + "': bad number '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected on/off, got '" + v + "'");
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field integer_field(T RunConfig::*member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) { c.*member = parse_integer<T>(k, v); },
          [member](const RunConfig& c) { return std::to_string(c.*member); }};
}

Field double_field(double RunConfig::*member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) { c.*member = parse_double(k, v); },
          [member](const RunConfig& c) { return format_double(c.*member); }};
}

Field bool_field(bool RunConfig::*member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) { c.*member = parse_bool(k, v); },
          [member](const RunConfig& c) { return std::string(c.*member ? "on" : "off"); }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    t.emplace_back("maze", Field{[](RunConfig& c, const std::string&, const std::string& v) { c.maze = v; },
                                 [](const RunConfig& c) { return c.maze; }});
    t.emplace_back("seed", integer_field(&RunConfig::seed));
    t.emplace_back("total_env_steps", integer_field(&RunConfig::total_env_steps));
    t.emplace_back("env_noise_std", double_field(&RunConfig::env_noise_std));
    t.emplace_back("actor_learning_rate", double_field(&RunConfig::actor_learning_rate));
    t.emplace_back("critic_learning_rate", double_field(&RunConfig::critic_learning_rate));
    t.emplace_back("replay_buffer_size", integer_field(&RunConfig::replay_buffer_size));
    t.emplace_back("number_of_hidden_layers_for_actors", integer_field(&RunConfig::number_of_hidden_layers_for_actors));
    t.emplace_back("number_of_hidden_layers_for_critics", integer_field(&RunConfig::number_of_hidden_layers_for_critics));
    t.emplace_back("number_of_hidden_units_per_layer", integer_field(&RunConfig::number_of_hidden_units_per_layer));
    t.emplace_back("batch_size", integer_field(&RunConfig::batch_size));
    t.emplace_back("polyak_for_target_network", double_field(&RunConfig::polyak_for_target_network));
    t.emplace_back("target_update_frequency_per_episode", integer_field(&RunConfig::target_update_frequency_per_episode));
    t.emplace_back("ratio_between_env_vs_optimization_steps",
                   integer_field(&RunConfig::ratio_between_env_vs_optimization_steps));
    t.emplace_back("gamma", double_field(&RunConfig::gamma));
    t.emplace_back("hindsight_relabelling_ratio", double_field(&RunConfig::hindsight_relabelling_ratio));
    t.emplace_back("initial_random_trajectories", integer_field(&RunConfig::initial_random_trajectories));
    t.emplace_back("hindsight_relabelling_range", integer_field(&RunConfig::hindsight_relabelling_range));
    t.emplace_back("action_l2", double_field(&RunConfig::action_l2));
    t.emplace_back("action_noise", double_field(&RunConfig::action_noise));
    t.emplace_back("q_target_clip", double_field(&RunConfig::q_target_clip));
    t.emplace_back("literal_critic_target", bool_field(&RunConfig::literal_critic_target));
    t.emplace_back("number_of_soft_value_iteration", integer_field(&RunConfig::number_of_soft_value_iteration));
    t.emplace_back("temperature", double_field(&RunConfig::temperature));
    t.emplace_back("number_of_nodes_in_a_graph", integer_field(&RunConfig::number_of_nodes_in_a_graph));
    t.emplace_back("clipping_threshold_for_distances", double_field(&RunConfig::clipping_threshold_for_distances));
    t.emplace_back("pool_size", integer_field(&RunConfig::pool_size));
    t.emplace_back("planner_hop_cost", double_field(&RunConfig::planner_hop_cost));
    t.emplace_back("plan_method",
                   Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                           if (v == "dijkstra") {
                             c.plan_method = PlanMethod::dijkstra;
                           } else if (v == "soft_vi") {
                             c.plan_method = PlanMethod::soft_vi;
                           } else {
                             throw ConfigError("config key '" + k + "': expected dijkstra or soft_vi");
                           }
                         },
                         [](const RunConfig& c) {
                           return std::string(c.plan_method == PlanMethod::dijkstra ? "dijkstra" : "soft_vi");
                         }});
    t.emplace_back("graph_rebuild",
                   Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                           if (v == "episode") {
                             c.graph_rebuild = GraphRebuild::episode;
                           } else if (v == "step") {
                             c.graph_rebuild = GraphRebuild::step;
                           } else {
                             throw ConfigError("config key '" + k + "': expected episode or step");
                           }
                         },
                         [](const RunConfig& c) {
                           return std::string(c.graph_rebuild == GraphRebuild::episode ? "episode" : "step");
                         }});
    t.emplace_back("balancing_coefficient", double_field(&RunConfig::balancing_coefficient));
    t.emplace_back("skipping_temperature", double_field(&RunConfig::skipping_temperature));
    t.emplace_back("pig_loss", bool_field(&RunConfig::pig_loss));
    t.emplace_back("skipping",
                   Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                           if (v == "off") {
                             c.skipping = SkippingSetting::off;
                           } else if (v == "on" || v == "pig") {
                             c.skipping = SkippingSetting::pig;
                           } else if (v == "random") {
                             c.skipping = SkippingSetting::random;
                           } else {
                             throw ConfigError("config key '" + k + "': expected off, on or random");
                           }
                         },
                         [](const RunConfig& c) {
                           switch (c.skipping) {
                             case SkippingSetting::off:
                               return std::string("off");
                             case SkippingSetting::pig:
                               return std::string("on");
                             case SkippingSetting::random:
                               break;
                           }
                           return std::string("random");
                         }});
    t.emplace_back("gcsl_loss", bool_field(&RunConfig::gcsl_loss));
    t.emplace_back("loss_smoothing", double_field(&RunConfig::loss_smoothing));
    t.emplace_back("replan_relabeled", bool_field(&RunConfig::replan_relabeled));
    t.emplace_back("eval_interval_episodes", integer_field(&RunConfig::eval_interval_episodes));
    t.emplace_back("eval_episodes", integer_field(&RunConfig::eval_episodes));
    t.emplace_back("planner_at_test", bool_field(&RunConfig::planner_at_test));
    t.emplace_back("eval_without_planner", bool_field(&RunConfig::eval_without_planner));
    t.emplace_back("track_entropy", bool_field(&RunConfig::track_entropy));
    t.emplace_back("entropy_n", integer_field(&RunConfig::entropy_n));
    t.emplace_back("entropy_k", integer_field(&RunConfig::entropy_k));
    t.emplace_back("checkpoint_every_evals", integer_field(&RunConfig::checkpoint_every_evals));
    return t;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& [name, f] : fields())
    if (name == key) return f;
  throw ConfigError("unknown config key '" + key + "'");
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid config: " + what);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) { field(key).set(*this, key, trim(value)); }

std::string RunConfig::get(const std::string& key) const { return field(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, f] : fields()) out.push_back(name);
    return out;
  }();
  return names;
}

void RunConfig::validate() const {
  require(total_env_steps >= 0, "total_env_steps >= 0");
  require(env_noise_std >= 0.0, "env_noise_std >= 0");
  require(actor_learning_rate > 0.0 && critic_learning_rate > 0.0, "learning rates > 0");
  require(replay_buffer_size >= 1, "replay_buffer_size >= 1");
  require(number_of_hidden_layers_for_actors >= 0 && number_of_hidden_layers_for_critics >= 0, "hidden layers >= 0");
  require(number_of_hidden_units_per_layer >= 1, "number_of_hidden_units_per_layer >= 1");
  require(batch_size >= 1, "batch_size >= 1");
  require(polyak_for_target_network >= 0.0 && polyak_for_target_network <= 1.0, "polyak in [0, 1]");
  require(target_update_frequency_per_episode >= 0, "target_update_frequency_per_episode >= 0");
  require(ratio_between_env_vs_optimization_steps >= 0, "ratio_between_env_vs_optimization_steps >= 0");
  require(gamma >= 0.0 && gamma < 1.0, "gamma in [0, 1)");
  require(hindsight_relabelling_ratio >= 0.0 && hindsight_relabelling_ratio <= 1.0, "relabelling ratio in [0, 1]");
  require(initial_random_trajectories >= 0, "initial_random_trajectories >= 0");
  require(hindsight_relabelling_range >= 1, "hindsight_relabelling_range >= 1");
  require(action_l2 >= 0.0 && action_noise >= 0.0, "action_l2, action_noise >= 0");
  require(q_target_clip >= 0.0, "q_target_clip >= 0");
  require(number_of_soft_value_iteration >= 1, "number_of_soft_value_iteration >= 1");
  require(planner_hop_cost >= 0.0 && std::isfinite(planner_hop_cost), "planner_hop_cost >= 0");
  require(temperature > 0.0, "temperature > 0");
  require(number_of_nodes_in_a_graph >= 1, "number_of_nodes_in_a_graph >= 1");
  require(clipping_threshold_for_distances > 0.0, "clipping_threshold_for_distances > 0");
  require(pool_size >= 1, "pool_size >= 1");
  require(balancing_coefficient >= 0.0, "balancing_coefficient >= 0");
  require(skipping_temperature >= 0.0, "skipping_temperature >= 0");
  require(!(pig_loss && gcsl_loss), "pig_loss and gcsl_loss are exclusive");
  require(loss_smoothing >= 0.0 && loss_smoothing < 1.0, "loss_smoothing in [0, 1)");
  require(eval_interval_episodes >= 1, "eval_interval_episodes >= 1");
  require(eval_episodes >= 0, "eval_episodes >= 0");
  require(entropy_k >= 1 && entropy_n >= entropy_k + 1, "entropy_n >= entropy_k + 1 >= 2");
  require(checkpoint_every_evals >= 0, "checkpoint_every_evals >= 0");
  maze_spec();
}

MazeSpec RunConfig::maze_spec() const {
  MazeSpec spec = is_preset_maze(maze) ? preset_maze(maze) : load_maze_file(maze);
  if (env_noise_std > 0.0) spec.noise_std = env_noise_std;
  gcrl::validate(spec);
  return spec;
}

NetworkShape RunConfig::network_shape() const {
  return NetworkShape{number_of_hidden_layers_for_actors, number_of_hidden_layers_for_critics,
                      number_of_hidden_units_per_layer};
}

std::string RunConfig::echo() const {
  std::ostringstream out;
  for (const auto& [name, f] : fields()) out << name << " = " << f.get(*this) << '\n';
  return out.str();
}

RunConfig parse_config(std::istream& in, RunConfig base) {
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, std::move(base));
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    cfg.set(trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
}

}  // namespace gcrl
