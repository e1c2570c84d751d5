#pragma once

// The learning loop: linear Q over pooled graph features, episode scheduling
// (init, reasoning, blending on impasse) and memory consolidation.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "aigenc/blending.hpp"
#include "aigenc/config.hpp"
#include "aigenc/encoder.hpp"
#include "aigenc/env.hpp"
#include "aigenc/memory.hpp"
#include "aigenc/reasoning.hpp"

namespace aigenc {

// ---------------------------------------------------------------------------
// Seed streams

enum class Stream : std::uint64_t { env = 1, policy = 2, table = 3, clustering = 4 };

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent seed for one stream of one run, optionally per episode.
inline std::uint64_t stream_seed(std::uint64_t run_seed, Stream s, std::uint64_t episode = 0) {
  return mix64(mix64(run_seed ^ mix64(static_cast<std::uint64_t>(s))) + episode);
}

// ---------------------------------------------------------------------------
// Policy

struct PolicyParams {
  std::vector<std::vector<double>> theta;  // one row per ActionKind
  double eta = 0.1;
  double gamma = 0.95;
  double epsilon = 0.1;

  static PolicyParams zeros(std::size_t dim, double eta = 0.1, double gamma = 0.95, double epsilon = 0.1) {
    PolicyParams p;
    p.theta.assign(kActionKinds, std::vector<double>(dim, 0.0));
    p.eta = eta;
    p.gamma = gamma;
    p.epsilon = epsilon;
    return p;
  }

  std::size_t dim() const { return theta.empty() ? 0 : theta.front().size(); }

  double q(std::size_t action, std::span<const double> phi) const { return dot(theta.at(action), phi); }

  bool all_finite() const {
    for (const auto& row : theta)
      for (double v : row)
        if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

/// graph_embed with the node and edge counts divided by K so every entry stays O(1).
inline FeatureVector policy_features(const ConceptGraph& g, std::size_t slots) {
  FeatureVector phi = graph_embed(g);
  std::vector<double> v = phi.values();
  const std::size_t at = 2 * g.dims().object + g.dims().action;
  v[at] /= static_cast<double>(slots);
  v[at + 1] /= static_cast<double>(slots);
  return FeatureVector(std::move(v));
}

/// Policy input: the observed state graph's features followed by the enhanced
/// graph's. Retrieved nodes can outnumber observed ones many times over, and
/// pooling them alone would wash out where the agent is.
inline FeatureVector policy_features(const ConceptGraph& observed, const ConceptGraph& enhanced, std::size_t slots) {
  std::vector<double> v = policy_features(observed, slots).values();
  const std::vector<double> e = policy_features(enhanced, slots).values();
  v.insert(v.end(), e.begin(), e.end());
  return FeatureVector(std::move(v));
}

inline std::size_t policy_dim(const Dims& d) { return 2 * d.embed(); }

/// Moves, wait and pickup are always legal; use_on needs an object to aim at.
inline std::vector<ActionKind> legal_actions(const WorldState& s) {
  std::vector<ActionKind> out{ActionKind::north, ActionKind::south, ActionKind::east,
                              ActionKind::west,  ActionKind::wait,  ActionKind::pickup};
  if (std::any_of(s.objects.begin(), s.objects.end(), [](const WorldObject& o) { return !o.held; }))
    out.push_back(ActionKind::use_on);
  return out;
}

inline std::vector<ActionKind> all_actions() { return ActionEncodingTable::all_kinds(); }

/// Epsilon-greedy over `legal`; greedy ties go to the lowest action index.
inline ActionKind act(std::span<const double> phi, const PolicyParams& params, std::mt19937_64& rng,
                      const std::vector<ActionKind>& legal = all_actions()) {
  if (legal.empty()) throw std::invalid_argument("act: no legal actions");
  if (params.theta.size() < kActionKinds) throw std::invalid_argument("act: params do not cover every action");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (params.epsilon > 0.0 && coin(rng) < params.epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, legal.size() - 1);
    return legal[pick(rng)];
  }
  ActionKind best = legal.front();
  double best_q = -std::numeric_limits<double>::infinity();
  for (ActionKind a : legal) {
    const double q = params.q(static_cast<std::size_t>(a), phi);
    if (q > best_q || (q == best_q && a < best)) {
      best = a;
      best_q = q;
    }
  }
  return best;
}

inline ActionKind act(const ConceptGraph& observed, const ConceptGraph& g_enhanced, const PolicyParams& params,
                      std::mt19937_64& rng, std::size_t slots, const std::vector<ActionKind>& legal = all_actions()) {
  const FeatureVector phi = policy_features(observed, g_enhanced, slots);
  return act(phi.view(), params, rng, legal);
}

/// One Q-learning step on theta_a. Returns the TD error.
inline double td_update(PolicyParams& params, std::span<const double> phi, ActionKind a, double reward,
                        std::span<const double> phi_next, bool done) {
  double next = 0.0;
  if (!done) {
    next = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < params.theta.size(); ++b) next = std::max(next, params.q(b, phi_next));
  }
  const double target = reward + params.gamma * next;
  auto& row = params.theta.at(static_cast<std::size_t>(a));
  const double err = target - dot(row, phi);
  if (!std::isfinite(target) || !std::isfinite(err))
    throw std::runtime_error("td_update: non-finite TD target for action '" + std::string(to_string(a)) +
                             "' (the value estimates diverged)");
  for (std::size_t i = 0; i < row.size(); ++i) row[i] += params.eta * err * phi[i];
  return err;
}

inline json to_json(const PolicyParams& p) {
  json theta = json::object();
  for (std::size_t a = 0; a < p.theta.size(); ++a) theta[std::string(to_string(static_cast<ActionKind>(a)))] = p.theta[a];
  return json{{"eta", p.eta}, {"gamma", p.gamma}, {"epsilon", p.epsilon}, {"theta", std::move(theta)}};
}

inline PolicyParams policy_from_json(const json& j) {
  PolicyParams p;
  p.eta = j.at("eta").get<double>();
  p.gamma = j.at("gamma").get<double>();
  p.epsilon = j.at("epsilon").get<double>();
  p.theta.assign(kActionKinds, {});
  for (std::size_t a = 0; a < kActionKinds; ++a)
    p.theta[a] = j.at("theta").at(std::string(to_string(static_cast<ActionKind>(a)))).get<std::vector<double>>();
  return p;
}

// ---------------------------------------------------------------------------
// Episodes

enum class Phase { init, pretrain, train };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::init: return "init";
    case Phase::pretrain: return "pretrain";
    case Phase::train: return "train";
  }
  return "?";
}

struct StepRecord {
  ActionKind action = ActionKind::wait;
  std::optional<int> target;
  std::vector<FeatureVector> tokens;
  double reward = 0.0;
};

struct CallCounts {
  std::size_t reasoning = 0;
  std::size_t blending = 0;
  std::size_t td_updates = 0;
};

struct EpisodeOutcome {
  std::int64_t episode = 0;
  Phase phase = Phase::train;
  std::string task;
  std::uint64_t env_seed = 0;
  double total_reward = 0.0;
  std::int64_t steps = 0;
  bool success = false;
  double epsilon = 0.0;
  std::size_t ltm_size = 0;         // after consolidation
  std::size_t matches_used = 0;     // steps whose state was completed from LTM
  std::size_t blends_injected = 0;  // accepted blended concepts
  std::size_t failures_before = 0;  // consecutive failed episodes when this one started
  bool impasse = false;
  CallCounts calls;
  std::vector<StepRecord> log;
};

inline json metrics_line(const EpisodeOutcome& o) {
  return json{{"episode", o.episode},
              {"phase", std::string(to_string(o.phase))},
              {"task", o.task},
              {"steps", o.steps},
              {"reward", o.total_reward},
              {"success", o.success},
              {"ltm_size", o.ltm_size},
              {"matches_used", o.matches_used},
              {"blends_injected", o.blends_injected},
              {"epsilon", o.epsilon}};
}

inline json action_log(const EpisodeOutcome& o) {
  json actions = json::array();
  for (const auto& r : o.log) {
    json a{{"action", std::string(to_string(r.action))}, {"reward", r.reward}};
    if (r.target) a["target"] = *r.target;
    if (!r.tokens.empty()) {
      json tokens = json::array();
      for (const auto& t : r.tokens) tokens.push_back(to_json(t));
      a["tokens"] = std::move(tokens);
    }
    actions.push_back(std::move(a));
  }
  return json{{"episode", o.episode}, {"task", o.task},       {"env_seed", o.env_seed},
              {"steps", o.steps},     {"reward", o.total_reward}, {"success", o.success},
              {"actions", std::move(actions)}};
}

struct EpisodeSettings {
  Phase phase = Phase::train;
  Task task = Task::BaseKeyDoor;
  bool reasoning = true;
  bool blending = true;
};

/// Everything an agent carries from one episode to the next.
struct AgentState {
  MemoryStore ltm{MemoryKind::long_term};
  PolicyParams params;
  ImpasseTracker tracker{5};
  std::int64_t next_episode = 0;
  std::int64_t explore_episodes = 0;  // non-init episodes so far, drives epsilon decay
};

/// One agent for one run seed.
class Agent {
 public:
  Agent(RunConfig cfg, std::uint64_t seed)
      : cfg_(std::move(cfg)),
        seed_(seed),
        encoder_(cfg_.encoder()),
        table_(ActionEncodingTable::generate(cfg_.dims().action, stream_seed(seed, Stream::table))),
        env_(cfg_.env()),
        wm_(MemoryKind::working, cfg_.dims()) {
    validate(cfg_);
    env_.key_prototype = encoder_.key_prototype();
    state_.ltm = MemoryStore(MemoryKind::long_term, cfg_.dims());
    state_.params = PolicyParams::zeros(policy_dim(cfg_.dims()), cfg_.eta, cfg_.gamma, cfg_.epsilon);
    state_.tracker = ImpasseTracker(static_cast<std::size_t>(cfg_.F));
    if (!cfg_.layout.empty()) layout_ = parse_layout(read_text_file(cfg_.layout), static_cast<int>(cfg_.max_steps));
  }

  const RunConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  const AgentState& state() const { return state_; }
  AgentState& state() { return state_; }
  const MemoryStore& working_memory() const { return wm_; }
  const ActionEncodingTable& action_table() const { return table_; }
  const EnvConfig& env_config() const { return env_; }

  WorldState initial_state(Task task, std::uint64_t env_seed) const {
    if (task == Task::Custom) {
      if (!layout_) throw std::invalid_argument("task Custom needs a layout");
      return *layout_;
    }
    return reset(task, env_seed, env_);
  }

  EpisodeOutcome run_episode(const EpisodeSettings& s);

  /// Runs `count` episodes of one phase.
  std::vector<EpisodeOutcome> run_phase(Phase phase, std::int64_t count) {
    std::vector<EpisodeOutcome> out;
    EpisodeSettings s;
    s.phase = phase;
    if (phase == Phase::train) {
      s.task = task_from_string(cfg_.task);
      s.reasoning = cfg_.reasoning;
      s.blending = cfg_.blending;
    } else {
      s.task = task_from_string(cfg_.pretrain_episodes > 0 ? cfg_.pretrain_task : cfg_.task);
    }
    for (std::int64_t i = 0; i < count; ++i) out.push_back(run_episode(s));
    return out;
  }

 private:
  struct ProvEdge {
    int src = 0;  // provenance ids
    int dst = 0;
    Affordance affordance;
  };

  struct Blended {
    FeatureVector features;
    BlendParent current;
    BlendParent remembered;
  };

  struct Perception {
    ConceptGraph graph{Dims{}};
    FeatureVector phi;
  };

  ConceptGraph build_graph(const SlotSet& slots, const std::vector<ProvEdge>& edges) const {
    ConceptGraph g = create_state_graph(slots, table_, cfg_.dims());
    for (const auto& e : edges) {
      const auto i = slots.index_of(e.src);
      const auto j = slots.index_of(e.dst);
      if (i && j) g.add_edge(static_cast<NodeId>(*i), static_cast<NodeId>(*j), e.affordance);
    }
    return g;
  }

  const ConceptGraph& enhanced(const ConceptGraph& g, bool& matched, CallCounts& calls) {
    if (cache_ltm_size_ != state_.ltm.size() || cache_.size() > 4096) {
      cache_.clear();
      cache_ltm_size_ = state_.ltm.size();
    }
    const std::string key = to_json(g).dump();
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      ++calls.reasoning;
      MatchSet ms;
      ConceptGraph out = enhance(g, state_.ltm, cfg_.Z, cfg_.reasoning_params(), &ms);
      it = cache_.emplace(key, CachedEnhance{std::move(out), !ms.empty()}).first;
    }
    matched = it->second.matched;
    return it->second.graph;
  }

  Perception perceive(const ConceptGraph& g, const EpisodeSettings& s, bool init, EpisodeOutcome& out,
                      const std::vector<Blended>& blends) {
    Perception p;
    bool matched = false;
    if (!init && s.reasoning && !state_.ltm.empty()) {
      p.graph = enhanced(g, matched, out.calls);
    } else {
      p.graph = g;
    }
    if (matched) ++out.matches_used;
    for (const auto& b : blends) p.graph = inject(p.graph, b.features, b.current, b.remembered, &state_.ltm);
    p.phi = policy_features(g, p.graph, static_cast<std::size_t>(cfg_.K));
    return p;
  }

  void try_blending(const ConceptGraph& g, EpisodeOutcome& out, std::vector<Blended>& blends) {
    ++out.calls.blending;
    const BlendingReport report =
        run_blending(g, state_.ltm, cfg_.blending_params(),
                     stream_seed(seed_, Stream::clustering, static_cast<std::uint64_t>(out.episode)));
    for (const auto& d : report.decisions) {
      if (!d.accepted) continue;
      const bool known = std::any_of(blends.begin(), blends.end(),
                                     [&](const Blended& b) { return b.features == d.concept_features; });
      if (known) continue;
      blends.push_back(Blended{d.concept_features, d.candidate.current, d.candidate.remembered});
      ++out.blends_injected;
    }
  }

  static std::optional<int> use_on_target(const WorldState& s) {
    std::optional<int> best;
    int best_d = std::numeric_limits<int>::max();
    for (const auto& o : s.objects) {
      if (o.held) continue;
      const int d = chebyshev(o.pos, s.agent);
      if (d < best_d) {
        best = o.id;
        best_d = d;
      }
    }
    return best;
  }

  struct CachedEnhance {
    ConceptGraph graph;
    bool matched = false;
  };

  RunConfig cfg_;
  std::uint64_t seed_;
  SymbolicEncoder encoder_;
  ActionEncodingTable table_;
  EnvConfig env_;
  std::optional<WorldState> layout_;
  AgentState state_;
  MemoryStore wm_;
  std::map<std::string, CachedEnhance> cache_;
  std::size_t cache_ltm_size_ = 0;
};

inline EpisodeOutcome Agent::run_episode(const EpisodeSettings& s) {
  EpisodeOutcome out;
  out.episode = state_.next_episode;
  out.phase = s.phase;
  out.task = std::string(to_string(s.task));
  out.env_seed = stream_seed(seed_, Stream::env, static_cast<std::uint64_t>(out.episode));
  const bool init = s.phase == Phase::init;
  out.failures_before = state_.tracker.consecutive_failures();
  out.impasse = out.failures_before >= state_.tracker.threshold();
  const bool blending_active = !init && s.blending && out.impasse;

  PolicyParams& params = state_.params;
  params.epsilon = init ? 1.0 : cfg_.epsilon * std::pow(cfg_.epsilon_decay, static_cast<double>(state_.explore_episodes));
  out.epsilon = params.epsilon;
  std::mt19937_64 rng(stream_seed(seed_, Stream::policy, static_cast<std::uint64_t>(out.episode)));
  const MemoryParams mem = cfg_.memory();

  std::int64_t t = 0;
  try {
    WorldState state = initial_state(s.task, out.env_seed);
    SlotSet slots = encoder_.object_discovery(state);
    std::vector<ProvEdge> edges;
    std::vector<Blended> blends;
    ConceptGraph g = build_graph(slots, edges);
    wm_insert(wm_, g, 0.0, 0, mem, out.episode);
    if (blending_active) try_blending(g, out, blends);
    Perception p = perceive(g, s, init, out, blends);

    while (!state.done()) {
      const ActionKind a = act(p.phi.view(), params, rng, legal_actions(state));
      EnvAction action{a, std::nullopt, {}};
      if (a == ActionKind::pickup) action.target = nearest_reachable(state, true);
      if (a == ActionKind::use_on) action.target = use_on_target(state);
      for (const auto& n : p.graph.nodes())
        if (n.origin == Origin::blended) action.tokens.push_back(n.features);

      const WorldObject* held_before = state.held_object();
      const int actor = held_before ? held_before->id : -1;
      StepResult r = step(state, action, env_);
      ++t;
      out.total_reward += r.reward;
      out.log.push_back(StepRecord{a, action.target, action.tokens, r.reward});

      const SlotSet next_slots = encoder_.object_discovery(r.state);
      bool effective = false;
      if ((a == ActionKind::pickup || a == ActionKind::use_on) && action.target) {
        const Slot* before = slots.find(*action.target);
        const Slot* after = next_slots.find(*action.target);
        if (before && after) {
          FeatureVector effect = compute_effect(before->features, after->features);
          if (norm(effect.view()) > 1e-12) {
            effective = true;
            const int src = a == ActionKind::use_on && actor >= 0 ? actor : *action.target;
            const bool known = std::any_of(edges.begin(), edges.end(), [&](const ProvEdge& e) {
              return e.src == src && e.dst == *action.target && e.affordance.action == table_.at(a);
            });
            if (!known) edges.push_back(ProvEdge{src, *action.target, Affordance{table_.at(a), std::move(effect), r.reward}});
          }
        }
      }

      const ConceptGraph g_next = build_graph(next_slots, edges);
      wm_insert(wm_, g_next, r.reward, t, mem, out.episode);
      if (blending_active && a == ActionKind::use_on && !effective) try_blending(g_next, out, blends);
      Perception p_next = perceive(g_next, s, init, out, blends);

      td_update(params, p.phi.view(), a, r.reward, p_next.phi.view(), r.done);
      ++out.calls.td_updates;

      state = std::move(r.state);
      slots = next_slots;
      p = std::move(p_next);
    }
    out.steps = t;
    out.success = state.goal_reached;

    const auto centroids = extract_centroids(wm_, mem.k, stream_seed(seed_, Stream::clustering, static_cast<std::uint64_t>(out.episode)), mem);
    ltm_update(state_.ltm, centroids, EpisodeMeta{out.episode, out.success}, mem);
    wm_.clear();
  } catch (const std::exception& e) {
    wm_.clear();
    throw std::runtime_error("episode " + std::to_string(out.episode) + ", step " + std::to_string(t) + ": " + e.what());
  }

  out.ltm_size = state_.ltm.size();
  state_.tracker.record(out.success);
  ++state_.next_episode;
  if (!init) ++state_.explore_episodes;
  return out;
}

}  // namespace aigenc
