#include "gcrl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace gcrl {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream, std::int64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kEvalStream = 0xE7A1;
constexpr std::uint64_t kEntropyStream = 0xE27;

void check_pig_build(const RunConfig& cfg) {
#ifdef GCRL_DISABLE_PIG
  const bool wants_imitation = cfg.pig_loss && cfg.balancing_coefficient != 0.0;
  const bool wants_skipping = (cfg.skipping == SkippingSetting::pig && cfg.skipping_temperature > 0.0) ||
                              cfg.skipping == SkippingSetting::random;
  if (wants_imitation || wants_skipping || cfg.gcsl_loss)
    throw ConfigError("this build has no self-imitation module; set balancing_coefficient = 0, "
                      "skipping_temperature = 0 and gcsl_loss = off");
#else
  (void)cfg;
#endif
}

std::vector<double> flatten_landmarks(const LandmarkGraph& g, bool goals) {
  std::vector<double> out;
  out.reserve(2 * g.size());
  for (const auto& l : g.landmarks) {
    const Vec2 p = goals ? l.goal.position : l.state.position;
    out.push_back(p.x);
    out.push_back(p.y);
  }
  return out;
}

std::string rng_text(const std::mt19937_64& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

}  // namespace

bool pig_enabled() {
#ifdef GCRL_DISABLE_PIG
  return false;
#else
  return true;
#endif
}

std::uint64_t eval_seed(std::uint64_t run_seed, std::int64_t tick) { return derived_rng(run_seed, kEvalStream, tick)(); }

Agent make_agent(const RunConfig& cfg) {
  cfg.validate();
  check_pig_build(cfg);
  Agent agent;
  agent.config = cfg;
  agent.spec = cfg.maze_spec();
  agent.rng.seed(cfg.seed);
  const InputEncoder enc = InputEncoder::for_extent(agent.spec.width(), agent.spec.height(), agent.spec.max_step);
  agent.ac = ActorCritic::create(cfg.network_shape(), enc, agent.spec.max_step, cfg.gamma, agent.rng);
  agent.actor_opt = AdamState::for_parameters(agent.ac.actor.parameter_count(), cfg.actor_learning_rate);
  agent.critic_opt = AdamState::for_parameters(agent.ac.critic.parameter_count(), cfg.critic_learning_rate);
  return agent;
}

Container to_checkpoint(const Agent& a) {
  Container c;
  c.put_text("config", a.config.echo());
  c.put_text("maze", format_maze(a.spec));
  put_mlp(c, "actor", a.ac.actor);
  put_mlp(c, "critic", a.ac.critic);
  put_mlp(c, "actor_target", a.ac.actor_target);
  put_mlp(c, "critic_target", a.ac.critic_target);
  const auto& e = a.ac.encoder;
  c.put_f64("encoder", {e.center.x, e.center.y, e.half_extent.x, e.half_extent.y, e.action_scale});
  c.put_f64("gamma", {a.ac.gamma});
  c.put_f64("action_bound", {a.ac.action_bound});
  put_adam(c, "actor_opt", a.actor_opt);
  put_adam(c, "critic_opt", a.critic_opt);
  c.put_f64("pig.latest", {a.latest_pig_loss});
  c.put_i64("pig.updates", {a.pig_updates});
  c.put_i64("counters", {a.env_step, a.episode, a.eval_ticks});
  c.put_text("rng", rng_text(a.rng));
  c.put_i64("graph.present", {a.graph ? 1 : 0});
  if (a.graph) {
    const auto n = static_cast<std::uint64_t>(a.graph->size());
    c.put_f64("graph.states", flatten_landmarks(*a.graph, false), {n, 2});
    c.put_f64("graph.goals", flatten_landmarks(*a.graph, true), {n, 2});
    c.put_f64("graph.weights", a.graph->weights, {n, n});
    c.put_f64("graph.clip", {a.graph->clip_threshold});
  }
  return c;
}

Agent from_checkpoint(const Container& c) {
  Agent a;
  {
    std::istringstream in(c.text("config"));
    a.config = parse_config(in);
  }
  {
    std::istringstream in(c.text("maze"));
    a.spec = parse_maze(in, a.config.maze);
  }
  a.ac.actor = get_mlp(c, "actor");
  a.ac.critic = get_mlp(c, "critic");
  a.ac.actor_target = get_mlp(c, "actor_target");
  a.ac.critic_target = get_mlp(c, "critic_target");
  const auto& e = c.f64("encoder");
  if (e.size() != 5) throw Error("checkpoint: bad encoder record");
  a.ac.encoder = InputEncoder{{e[0], e[1]}, {e[2], e[3]}, e[4]};
  a.ac.gamma = c.scalar_f64("gamma");
  a.ac.action_bound = c.scalar_f64("action_bound");
  a.actor_opt = get_adam(c, "actor_opt");
  a.critic_opt = get_adam(c, "critic_opt");
  a.latest_pig_loss = c.scalar_f64("pig.latest");
  a.pig_updates = c.scalar_i64("pig.updates");
  const auto& counters = c.i64("counters");
  if (counters.size() != 3) throw Error("checkpoint: bad counters record");
  a.env_step = counters[0];
  a.episode = counters[1];
  a.eval_ticks = counters[2];
  {
    std::istringstream in(c.text("rng"));
    in >> a.rng;
    if (!in) throw Error("checkpoint: bad rng record");
  }
  if (c.scalar_i64("graph.present") != 0) {
    LandmarkGraph g;
    const auto& st = c.f64("graph.states");
    const auto& gl = c.f64("graph.goals");
    if (st.size() != gl.size() || st.size() % 2 != 0) throw Error("checkpoint: bad graph landmarks");
    for (std::size_t i = 0; i < st.size() / 2; ++i)
      g.landmarks.push_back(Landmark{State{{st[2 * i], st[2 * i + 1]}}, Goal{{gl[2 * i], gl[2 * i + 1]}}});
    g.weights = c.f64("graph.weights");
    if (g.weights.size() != g.size() * g.size()) throw Error("checkpoint: bad graph weights");
    g.clip_threshold = c.scalar_f64("graph.clip");
    a.graph = std::move(g);
  }

  // The stored networks must be the ones the stored config describes.
  std::mt19937_64 scratch(0);
  const NetworkShape shape = a.config.network_shape();
  const ActorCritic expected = ActorCritic::create(shape, a.ac.encoder, a.ac.action_bound, a.ac.gamma, scratch);
  if (!expected.actor.same_architecture(a.ac.actor) || !expected.critic.same_architecture(a.ac.critic) ||
      !expected.actor.same_architecture(a.ac.actor_target) || !expected.critic.same_architecture(a.ac.critic_target))
    throw Error("checkpoint: networks do not match the stored config");
  if (a.actor_opt.m.size() != a.ac.actor.parameter_count() || a.critic_opt.m.size() != a.ac.critic.parameter_count())
    throw Error("checkpoint: optimiser state does not match the networks");
  return a;
}

void save_checkpoint(const Agent& agent, const std::string& path) { to_checkpoint(agent).save(path); }

Agent load_checkpoint(const std::string& path) { return from_checkpoint(Container::load(path)); }

AgentController::AgentController(const Agent& agent, bool use_planner) : agent_(agent), model_(agent.ac) {
  if (use_planner && agent.graph && agent.graph->size() > 0) {
    const SoftViOptions vi{agent.config.number_of_soft_value_iteration, agent.config.temperature};
    planner_.emplace(*agent.graph, model_, agent.config.plan_method, vi, agent.config.planner_hop_cost);
  }
}

void AgentController::begin_episode(const State&, const Goal&) {}

Action AgentController::act(const State& s, const Goal& g) {
  Goal target = g;
  if (planner_) {
    const auto path = planner_->try_plan(s, g);
    if (path && path->size() >= 2) target = drop_reached_subgoals(*path, agent_.spec.delta).nodes[1];
  }
  return agent_.ac.act(s, target);
}

double evaluate(const MazeSpec& spec, Controller& controller, const EvalOptions& options) {
  if (options.episodes <= 0) throw Error("evaluate: episodes must be positive");
  std::mt19937_64 rng(options.seed);
  int successes = 0;
  for (int ep = 0; ep < options.episodes; ++ep) {
    auto [s, g] = options.fixed_task ? *options.fixed_task : reset(spec, rng);
    controller.begin_episode(s, g);
    for (int t = 0; t < spec.horizon; ++t) {
      const Action a = controller.act(s, g);
      s = step(spec, s, a, spec.noise_std > 0.0 ? &rng : nullptr);
      if (is_success(s, g, spec.delta)) {
        ++successes;
        break;
      }
    }
  }
  return static_cast<double>(successes) / static_cast<double>(options.episodes);
}

double evaluate(const Agent& agent, const EvalOptions& options) {
  AgentController controller(agent, options.use_planner);
  return evaluate(agent.spec, controller, options);
}

namespace {

class Run {
 public:
  Run(const RunConfig& cfg, const TrainOptions& options)
      : options_(options),
        agent_(make_agent(cfg)),
        cfg_(agent_.config),
        buffer_(static_cast<std::size_t>(cfg.replay_buffer_size)),
        entropy_rng_(derived_rng(cfg.seed, kEntropyStream, 0)),
        start_(std::chrono::steady_clock::now()) {
#ifndef GCRL_DISABLE_PIG
    tracker_.smoothing = cfg.loss_smoothing;
    skip_.alpha = cfg.skipping_temperature;
    skip_.mode = cfg.skipping == SkippingSetting::off      ? SkipMode::off
                 : cfg.skipping == SkippingSetting::random ? SkipMode::random
                                                           : SkipMode::pig;
    need_pig_loss_ = cfg.pig_loss && (cfg.balancing_coefficient > 0.0 ||
                                      (skip_.mode == SkipMode::pig && cfg.skipping_temperature > 0.0));
#endif
    critic_opts_.q_target_clip = cfg.q_target_clip;
    critic_opts_.literal_target = cfg.literal_critic_target;
  }

  TrainResult execute() {
    open_outputs();
    while (agent_.env_step < cfg_.total_env_steps) run_episode();
    TrainResult result;
    result.rows = std::move(rows_);
    if (!options_.out_dir.empty()) {
      namespace fs = std::filesystem;
      const fs::path path = fs::path(options_.out_dir) / "checkpoints" / ("step_" + std::to_string(agent_.env_step));
      save_checkpoint(agent_, path.string());
      result.checkpoint_path = path.string();
    }
    sync_tracker();
    result.agent = std::move(agent_);
    return result;
  }

 private:
  void open_outputs() {
    if (options_.out_dir.empty()) return;
    namespace fs = std::filesystem;
    const fs::path dir(options_.out_dir);
    std::error_code ec;
    fs::create_directories(dir / "checkpoints", ec);
    fs::create_directories(dir / "plots", ec);
    if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
    std::ofstream echo(dir / "config.echo");
    echo << cfg_.echo();
    if (!echo) throw Error("cannot write config.echo in '" + dir.string() + "'");
    metrics_.open(dir / "metrics.csv");
    if (!metrics_) throw Error("cannot write metrics.csv in '" + dir.string() + "'");
    write_metrics_header(metrics_);
    metrics_.flush();
  }

  bool warm() const { return agent_.env_step >= cfg_.initial_random_trajectories; }

  void rebuild_graph() {
    const ValueDistance model(agent_.ac);
    agent_.graph = build_graph(model, buffer_, static_cast<std::size_t>(cfg_.number_of_nodes_in_a_graph),
                               static_cast<std::size_t>(cfg_.pool_size), cfg_.clipping_threshold_for_distances,
                               agent_.rng);
  }

  Path plan_path(std::optional<Planner>& planner, const State& s, const Goal& g) {
    if (planner) {
      if (auto p = planner->try_plan(s, g)) {
        if (p->size() >= 2) return drop_reached_subgoals(std::move(*p), agent_.spec.delta);
      }
    }
    return direct_path(goal_map(s), g);
  }

  Goal choose_subgoal(const Path& path) {
#ifndef GCRL_DISABLE_PIG
    sync_tracker();
    const SkipResult r = skip_subgoal(path, skip_, tracker_, agent_.rng);
    jumps_ += r.jumps;
    ++jump_samples_;
    return r.subgoal;
#else
    ++jump_samples_;
    return path.nodes[1];
#endif
  }

  void sync_tracker() {
#ifndef GCRL_DISABLE_PIG
    agent_.latest_pig_loss = tracker_.latest_pig_loss;
    agent_.pig_updates = tracker_.update_count;
#endif
  }

#ifndef GCRL_DISABLE_PIG
  // Relabelled samples get a fresh plan towards their hindsight goal on the
  // current graph; the others keep the stored path for the original goal.
  std::vector<ImitationSample> replanned_samples(const RelabeledBatch& batch, std::vector<Path>& storage) {
    storage.reserve(batch.size());
    std::vector<ImitationSample> out;
    out.reserve(batch.size());
    for (const auto& smp : batch) {
      if (smp.relabeled) {
        storage.push_back(plan_path(*planner_, smp.s, smp.g_used));
        out.push_back(ImitationSample{smp.s, &storage.back(), smp.g_used});
      } else {
        out.push_back(ImitationSample{smp.s, &smp.source->path, smp.source->g});
      }
    }
    return out;
  }
#endif

  void optimise() {
    const RelabeledBatch batch = her_sample(buffer_, static_cast<std::size_t>(cfg_.batch_size),
                                            cfg_.hindsight_relabelling_ratio, cfg_.hindsight_relabelling_range,
                                            agent_.spec.delta, agent_.rng);
    const double lc = critic_update(agent_.ac, batch, agent_.critic_opt, critic_opts_);

    const AuxiliaryTerm* aux = nullptr;
    double weight = 0.0;
    AuxiliaryTerm term;
#ifndef GCRL_DISABLE_PIG
    if (cfg_.gcsl_loss) {
      term = gcsl_loss(agent_.ac.actor, agent_.ac.encoder, batch);
      aux = &term;
      weight = cfg_.balancing_coefficient;
    } else if (need_pig_loss_) {
      std::vector<Path> replanned;
      const auto samples = cfg_.replan_relabeled ? replanned_samples(batch, replanned) : imitation_samples(batch);
      term = pig_loss(agent_.ac.actor, agent_.ac.encoder, samples);
      tracker_.record(term.loss);
      if (cfg_.balancing_coefficient > 0.0) {
        aux = &term;
        weight = cfg_.balancing_coefficient;
      }
    }
#endif
    const ActorStep la = actor_update(agent_.ac, batch, aux, weight, cfg_.action_l2, agent_.actor_opt);
    critic_sum_ += lc;
    actor_sum_ += la.total;
    ++updates_;
    any_update_ = true;
  }

  void target_update() {
    if (any_update_) update_targets(agent_.ac, cfg_.polyak_for_target_network);
  }

  void run_episode() {
    auto [s, g] = reset(agent_.spec, agent_.rng);
    const bool rebuild_each_step = cfg_.graph_rebuild == GraphRebuild::step;
    if (warm() && !buffer_.empty()) rebuild_graph();
    const ValueDistance model(agent_.ac);
    const SoftViOptions vi{cfg_.number_of_soft_value_iteration, cfg_.temperature};
    std::optional<Planner> planner;
    if (agent_.graph) planner.emplace(*agent_.graph, model, cfg_.plan_method, vi, cfg_.planner_hop_cost);
    planner_ = &planner;

    const int horizon = agent_.spec.horizon;
    const int freq = cfg_.target_update_frequency_per_episode;
    const int spacing = freq > 0 ? std::max(1, horizon / freq) : 0;
    int target_updates = 0;
    const double bound = agent_.spec.max_step;
    std::uniform_real_distribution<double> uniform_action(-bound, bound);

    for (int t = 0; t < horizon && agent_.env_step < cfg_.total_env_steps; ++t) {
      if (rebuild_each_step && t > 0 && warm()) {
        planner.reset();
        rebuild_graph();
        planner.emplace(*agent_.graph, model, cfg_.plan_method, vi, cfg_.planner_hop_cost);
      }
      Path path = plan_path(planner, s, g);
      const Goal subgoal = choose_subgoal(path);
      Action a;
      if (!warm()) {
        a.x = uniform_action(agent_.rng);
        a.y = uniform_action(agent_.rng);
      } else {
        a = select_action(agent_.ac, s, subgoal, cfg_.action_noise, agent_.rng);
      }
      const State next = step(agent_.spec, s, a, agent_.spec.noise_std > 0.0 ? &agent_.rng : nullptr);
      const double r = reward(next, g, agent_.spec.delta);
      const bool done = r == 0.0;
      buffer_.push(Transition{s, a, r, next, g, std::move(path), done, agent_.episode, t});
      collected_.push_back(goal_map(next));
      ++agent_.env_step;

      if (warm() && buffer_.size() >= static_cast<std::size_t>(cfg_.batch_size)) {
        for (int k = 0; k < cfg_.ratio_between_env_vs_optimization_steps; ++k) optimise();
      }
      if (spacing > 0 && target_updates < freq && (t + 1) % spacing == 0) {
        target_update();
        ++target_updates;
      }
      s = next;
      if (done) break;
    }
    for (; target_updates < freq; ++target_updates) target_update();
    planner_ = nullptr;

    ++agent_.episode;
    if (agent_.episode % cfg_.eval_interval_episodes == 0) eval_tick();
  }

  void eval_tick() {
    sync_tracker();
    MetricsRow row;
    row.env_step = agent_.env_step;
    row.episode = agent_.episode;
    const std::uint64_t seed = eval_seed(cfg_.seed, agent_.eval_ticks);
    if (cfg_.eval_episodes > 0) {
      row.eval_success_rate = evaluate(agent_, EvalOptions{cfg_.eval_episodes, cfg_.planner_at_test, seed, {}});
      row.eval_success_rate_no_planner =
          cfg_.eval_without_planner ? evaluate(agent_, EvalOptions{cfg_.eval_episodes, false, seed, {}}) : kNan;
    } else {
      row.eval_success_rate = kNan;
      row.eval_success_rate_no_planner = kNan;
    }
    row.l_critic = updates_ > 0 ? critic_sum_ / static_cast<double>(updates_) : kNan;
    row.l_actor = updates_ > 0 ? actor_sum_ / static_cast<double>(updates_) : kNan;
    row.l_pig_latest = agent_.pig_updates > 0 ? agent_.latest_pig_loss : kNan;
    row.mean_jump_count = jump_samples_ > 0 ? static_cast<double>(jumps_) / static_cast<double>(jump_samples_) : 0.0;
    row.state_entropy = kNan;
    if (cfg_.track_entropy && collected_.size() >= static_cast<std::size_t>(cfg_.entropy_n))
      row.state_entropy = knn_entropy(collected_, cfg_.entropy_n, cfg_.entropy_k, entropy_rng_);
    row.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();

    ++agent_.eval_ticks;
    critic_sum_ = actor_sum_ = 0.0;
    updates_ = 0;
    jumps_ = 0;
    jump_samples_ = 0;
    collected_.clear();

    rows_.push_back(row);
    if (metrics_.is_open()) {
      write_metrics_row(metrics_, row);
      metrics_.flush();
      if (!metrics_) throw Error("failed writing metrics.csv");
    }
    if (options_.verbose) {
      std::fprintf(stderr, "step %lld episode %lld success %.2f (no planner %.2f) l_critic %.4g l_pig %.4g\n",
                   static_cast<long long>(row.env_step), static_cast<long long>(row.episode), row.eval_success_rate,
                   row.eval_success_rate_no_planner, row.l_critic, row.l_pig_latest);
    }
    if (options_.on_eval) options_.on_eval(row);
    if (!options_.out_dir.empty() && cfg_.checkpoint_every_evals > 0 &&
        agent_.eval_ticks % cfg_.checkpoint_every_evals == 0) {
      const auto path = std::filesystem::path(options_.out_dir) / "checkpoints" /
                        ("step_" + std::to_string(agent_.env_step));
      save_checkpoint(agent_, path.string());
    }
  }

  TrainOptions options_;
  Agent agent_;
  const RunConfig& cfg_;
  ReplayBuffer buffer_;
  std::mt19937_64 entropy_rng_;
  std::chrono::steady_clock::time_point start_;
  CriticOptions critic_opts_;
#ifndef GCRL_DISABLE_PIG
  LossTracker tracker_;
  SkipConfig skip_;
  bool need_pig_loss_ = false;
#endif
  std::optional<Planner>* planner_ = nullptr;  // planner of the running episode
  std::ofstream metrics_;
  std::vector<MetricsRow> rows_;
  std::vector<Goal> collected_;
  double critic_sum_ = 0.0;
  double actor_sum_ = 0.0;
  std::int64_t updates_ = 0;
  std::int64_t jumps_ = 0;
  std::int64_t jump_samples_ = 0;
  bool any_update_ = false;
};

}  // namespace

TrainResult train(const RunConfig& cfg, const TrainOptions& options) {
  Run run(cfg, options);
  return run.execute();
}

}  // namespace gcrl
