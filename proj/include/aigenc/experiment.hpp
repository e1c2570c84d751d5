#pragma once

// Training runs, run directories, ablations and episode replay.
//
// Run directory layout (one per config and seed):
//
//   <root>/<config-hash>-s<seed>/
//     config.resolved.json   resolved config with "seeds": [seed]
//     metrics.jsonl          one line per episode
//     episodes.jsonl         per-episode action logs (input to `replay`)
//     ltm.json               long-term memory snapshot
//     params.json            policy weights

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "aigenc/agent.hpp"
#include "aigenc/config.hpp"

namespace aigenc {

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<EpisodeOutcome> episodes;
  MemoryStore ltm;
  PolicyParams params;

  std::vector<const EpisodeOutcome*> phase(Phase p) const {
    std::vector<const EpisodeOutcome*> out;
    for (const auto& e : episodes)
      if (e.phase == p) out.push_back(&e);
    return out;
  }

  std::string metrics_text() const {
    std::string out;
    for (const auto& e : episodes) out += metrics_line(e).dump() + "\n";
    return out;
  }
};

/// init episodes, optional pretraining, then N episodes of the configured task.
/// Pretraining always runs the full agent so ablations stay paired.
inline SeedRun train(const RunConfig& cfg, std::uint64_t seed) {
  Agent agent(cfg, seed);
  SeedRun run;
  run.seed = seed;
  for (Phase p : {Phase::init, Phase::pretrain, Phase::train}) {
    const std::int64_t n = p == Phase::init ? cfg.init_episodes : p == Phase::pretrain ? cfg.pretrain_episodes : cfg.episodes;
    auto eps = agent.run_phase(p, n);
    std::move(eps.begin(), eps.end(), std::back_inserter(run.episodes));
  }
  run.ltm = agent.state().ltm;
  run.params = agent.state().params;
  return run;
}

/// Calls fn(i) for i in [0, n) on up to `workers` threads (0 = one per core).
/// The first exception is rethrown after all workers stop.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  pool.clear();
  if (error) std::rethrow_exception(error);
}

inline std::filesystem::path output_root(const RunConfig& cfg) {
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("AIGENC_OUT"); env && *env) return env;
  return "runs";
}

inline std::filesystem::path run_directory(const RunConfig& cfg, std::uint64_t seed) {
  return output_root(cfg) / (config_hash(cfg) + "-s" + std::to_string(seed));
}

inline void write_run(const RunConfig& cfg, const SeedRun& run, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create run directory '" + dir.string() + "': " + ec.message());
  RunConfig resolved = cfg;
  resolved.seeds = {run.seed};
  write_text_file((dir / "config.resolved.json").string(), to_json(resolved).dump(2) + "\n");
  write_text_file((dir / "metrics.jsonl").string(), run.metrics_text());
  std::string logs;
  for (const auto& e : run.episodes) logs += action_log(e).dump() + "\n";
  write_text_file((dir / "episodes.jsonl").string(), logs);
  snapshot_save(run.ltm, (dir / "ltm.json").string());
  write_text_file((dir / "params.json").string(), to_json(run.params).dump() + "\n");
}

/// Trains every seed of the config and writes one run directory per seed.
inline std::vector<std::filesystem::path> train_all(const RunConfig& cfg) {
  validate(cfg);
  std::vector<std::filesystem::path> dirs(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), static_cast<std::size_t>(cfg.workers), [&](std::size_t i) {
    const SeedRun run = train(cfg, cfg.seeds[i]);
    dirs[i] = run_directory(cfg, cfg.seeds[i]);
    write_run(cfg, run, dirs[i]);
  });
  return dirs;
}

// ---------------------------------------------------------------------------
// Ablation

enum class Component { reasoning, blending };

inline Component component_from_string(std::string_view s) {
  if (s == "reasoning") return Component::reasoning;
  if (s == "blending") return Component::blending;
  throw std::invalid_argument("unknown component '" + std::string(s) + "' (expected reasoning or blending)");
}

struct AblationRow {
  std::uint64_t seed = 0;
  bool component_on = true;
  std::int64_t first_success = 0;  // 1-based episode of the training phase; N+1 when never solved
  bool solved = false;
  double final_success_rate = 0.0;  // over the last min(50, N) training episodes
  std::size_t successes = 0;
  std::size_t component_calls = 0;
};

inline AblationRow summarize(const SeedRun& run, bool on, Component c) {
  AblationRow row;
  row.seed = run.seed;
  row.component_on = on;
  const auto eps = run.phase(Phase::train);
  row.first_success = static_cast<std::int64_t>(eps.size()) + 1;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (eps[i]->success) {
      ++row.successes;
      if (!row.solved) {
        row.solved = true;
        row.first_success = static_cast<std::int64_t>(i) + 1;
      }
    }
    row.component_calls += c == Component::reasoning ? eps[i]->calls.reasoning : eps[i]->calls.blending;
  }
  const std::size_t tail = std::min<std::size_t>(50, eps.size());
  std::size_t wins = 0;
  for (std::size_t i = eps.size() - tail; i < eps.size(); ++i) wins += eps[i]->success;
  row.final_success_rate = tail ? static_cast<double>(wins) / static_cast<double>(tail) : 0.0;
  return row;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct AblationReport {
  Component component = Component::reasoning;
  std::vector<AblationRow> rows;  // per seed: on, then off

  std::vector<const AblationRow*> variant(bool on) const {
    std::vector<const AblationRow*> out;
    for (const auto& r : rows)
      if (r.component_on == on) out.push_back(&r);
    return out;
  }

  double median_first_success(bool on) const {
    std::vector<double> v;
    for (const auto* r : variant(on)) v.push_back(static_cast<double>(r->first_success));
    return median(v);
  }

  double median_final_success(bool on) const {
    std::vector<double> v;
    for (const auto* r : variant(on)) v.push_back(r->final_success_rate);
    return median(v);
  }

  /// Fraction of seeds where the component-on run solved the task no later than the off run.
  double on_wins_or_ties() const {
    const auto on = variant(true);
    const auto off = variant(false);
    std::size_t wins = 0;
    for (std::size_t i = 0; i < on.size(); ++i) wins += on[i]->first_success <= off[i]->first_success;
    return on.empty() ? 0.0 : static_cast<double>(wins) / static_cast<double>(on.size());
  }
};

inline json to_json(const AblationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"seed", row.seed},
                    {"variant", row.component_on ? "on" : "off"},
                    {"first_success", row.first_success},
                    {"solved", row.solved},
                    {"successes", row.successes},
                    {"final_success_rate", row.final_success_rate},
                    {"component_calls", row.component_calls}});
  return json{{"component", r.component == Component::reasoning ? "reasoning" : "blending"},
              {"rows", std::move(rows)},
              {"median_first_success", {{"on", r.median_first_success(true)}, {"off", r.median_first_success(false)}}},
              {"median_final_success", {{"on", r.median_final_success(true)}, {"off", r.median_final_success(false)}}},
              {"on_wins_or_ties", r.on_wins_or_ties()}};
}

/// Paired runs over the same seeds with the component on and off. The
/// pretrained agent is shared, so the two variants differ only from the
/// first training episode on.
inline AblationReport ablate(const RunConfig& cfg, Component c,
                             const std::function<void(const RunConfig&, const SeedRun&)>& on_run = {}) {
  validate(cfg);
  RunConfig on = cfg;
  RunConfig off = cfg;
  (c == Component::reasoning ? on.reasoning : on.blending) = true;
  (c == Component::reasoning ? off.reasoning : off.blending) = false;

  AblationReport report;
  report.component = c;
  report.rows.resize(2 * cfg.seeds.size());
  std::mutex callback_mutex;
  parallel_for(cfg.seeds.size(), static_cast<std::size_t>(cfg.workers), [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    Agent base(on, seed);
    std::vector<EpisodeOutcome> prefix = base.run_phase(Phase::init, cfg.init_episodes);
    auto pre = base.run_phase(Phase::pretrain, cfg.pretrain_episodes);
    std::move(pre.begin(), pre.end(), std::back_inserter(prefix));

    for (bool variant_on : {true, false}) {
      Agent agent(variant_on ? on : off, seed);
      agent.state() = base.state();
      SeedRun run;
      run.seed = seed;
      run.episodes = prefix;
      auto eps = agent.run_phase(Phase::train, cfg.episodes);
      std::move(eps.begin(), eps.end(), std::back_inserter(run.episodes));
      run.ltm = agent.state().ltm;
      run.params = agent.state().params;
      report.rows[2 * i + (variant_on ? 0 : 1)] = summarize(run, variant_on, c);
      if (on_run) {
        std::lock_guard lock(callback_mutex);
        on_run(variant_on ? on : off, run);
      }
    }
  });
  return report;
}

// ---------------------------------------------------------------------------
// Replay

struct ReplayFrame {
  std::int64_t t = 0;
  std::string action;
  double reward = 0.0;
  std::string frame;
};

struct Replay {
  std::vector<ReplayFrame> frames;
  double total_reward = 0.0;
  bool success = false;
  bool matches_log = true;  // re-simulated rewards agree with the logged ones
};

/// Re-simulates one logged episode against the environment.
inline Replay replay_episode(const RunConfig& cfg, const json& log) {
  EnvConfig env = cfg.env();
  env.key_prototype = SymbolicEncoder(cfg.encoder()).key_prototype();
  const Task task = task_from_string(log.at("task").get<std::string>());
  WorldState s = task == Task::Custom ? parse_layout(read_text_file(cfg.layout), static_cast<int>(cfg.max_steps))
                                      : reset(task, log.at("env_seed").get<std::uint64_t>(), env);
  Replay out;
  out.frames.push_back(ReplayFrame{0, "", 0.0, render(s)});
  std::int64_t t = 0;
  for (const auto& a : log.at("actions")) {
    if (s.done()) {
      out.matches_log = false;
      break;
    }
    EnvAction action{action_kind_from_string(a.at("action").get<std::string>()), std::nullopt, {}};
    if (a.contains("target")) action.target = a.at("target").get<int>();
    if (a.contains("tokens"))
      for (const auto& tok : a.at("tokens")) action.tokens.push_back(feature_vector_from_json(tok));
    StepResult r = step(s, action, env);
    s = std::move(r.state);
    out.total_reward += r.reward;
    if (r.reward != a.at("reward").get<double>()) out.matches_log = false;
    out.frames.push_back(ReplayFrame{++t, a.at("action").get<std::string>(), r.reward, render(s)});
  }
  out.success = s.goal_reached;
  if (out.success != log.at("success").get<bool>()) out.matches_log = false;
  return out;
}

}  // namespace aigenc
