#pragma once

// ToolWorld: a small symbolic gridworld with key/door/goal tasks.
//
// Layout of the generated tasks (one row shown, x grows to the right):
//
//     A . K . # D G .        A agent, K key (or card, or stick), D door in a wall column,
//                            G goal cell behind the door
//
// The agent must pick up the key, use it on the door, and walk onto the goal.
// TransferKeyDoor swaps the key for a card with a different kind, color and size.
// ImpasseTool has no key at all; only a stick and a hook. There the door opens when
// the use_on action carries a concept token close enough to the key prototype.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "aigenc/concept.hpp"

namespace aigenc {

enum class Task { BaseKeyDoor, TransferKeyDoor, ImpasseTool, Custom };

inline std::string_view to_string(Task t) {
  switch (t) {
    case Task::BaseKeyDoor: return "BaseKeyDoor";
    case Task::TransferKeyDoor: return "TransferKeyDoor";
    case Task::ImpasseTool: return "ImpasseTool";
    case Task::Custom: return "Custom";
  }
  return "Custom";
}

inline Task task_from_string(std::string_view s) {
  if (s == "BaseKeyDoor") return Task::BaseKeyDoor;
  if (s == "TransferKeyDoor") return Task::TransferKeyDoor;
  if (s == "ImpasseTool") return Task::ImpasseTool;
  if (s == "Custom") return Task::Custom;
  throw std::invalid_argument("unknown task '" + std::string(s) + "'");
}

enum class ObjectKind { key = 0, card, door, stick, hook };
inline constexpr std::size_t kObjectKinds = 5;
inline constexpr std::size_t kColors = 2;

inline std::string_view to_string(ObjectKind k) {
  switch (k) {
    case ObjectKind::key: return "key";
    case ObjectKind::card: return "card";
    case ObjectKind::door: return "door";
    case ObjectKind::stick: return "stick";
    case ObjectKind::hook: return "hook";
  }
  return "?";
}

/// Kinds that unlock doors when held.
inline bool opens_doors(ObjectKind k) { return k == ObjectKind::key || k == ObjectKind::card; }

struct Position {
  int x = 0;
  int y = 0;
  friend bool operator==(const Position&, const Position&) = default;
};

inline int chebyshev(Position a, Position b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)); }

struct WorldObject {
  int id = 0;
  ObjectKind kind = ObjectKind::key;
  int color = 0;
  double size = 0.0;
  Position pos;
  bool portable = false;
  bool held = false;
  bool open = false;  // doors only

  friend bool operator==(const WorldObject&, const WorldObject&) = default;
};

struct WorldState {
  Task task = Task::BaseKeyDoor;
  int width = 8;
  int height = 8;
  std::vector<std::uint8_t> walls;  // row-major, 1 = wall
  Position agent;
  Position goal;
  std::vector<WorldObject> objects;
  int step = 0;
  int max_steps = 200;
  bool goal_reached = false;

  bool in_bounds(Position p) const { return p.x >= 0 && p.y >= 0 && p.x < width && p.y < height; }
  bool wall_at(Position p) const { return walls[static_cast<std::size_t>(p.y * width + p.x)] != 0; }

  const WorldObject* object(int id) const {
    for (const auto& o : objects)
      if (o.id == id) return &o;
    return nullptr;
  }

  const WorldObject* held_object() const {
    for (const auto& o : objects)
      if (o.held) return &o;
    return nullptr;
  }

  bool done() const { return goal_reached || step >= max_steps; }

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

enum class ActionKind { north = 0, south, east, west, wait, pickup, use_on };
inline constexpr std::size_t kActionKinds = 7;

inline std::string_view to_string(ActionKind a) {
  switch (a) {
    case ActionKind::north: return "north";
    case ActionKind::south: return "south";
    case ActionKind::east: return "east";
    case ActionKind::west: return "west";
    case ActionKind::wait: return "wait";
    case ActionKind::pickup: return "pickup";
    case ActionKind::use_on: return "use_on";
  }
  return "?";
}

inline ActionKind action_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kActionKinds; ++i)
    if (to_string(static_cast<ActionKind>(i)) == s) return static_cast<ActionKind>(i);
  throw std::invalid_argument("unknown action '" + std::string(s) + "'");
}

struct EnvAction {
  ActionKind kind = ActionKind::wait;
  std::optional<int> target;          // object id for pickup / use_on
  std::vector<FeatureVector> tokens;  // blended concepts carried by the agent

  friend bool operator==(const EnvAction&, const EnvAction&) = default;
};

struct EnvConfig {
  int width = 8;
  int height = 8;
  int max_steps = 200;
  double step_reward = -0.01;
  double goal_reward = 1.0;
  /// Key prototype in object-feature space; empty disables token unlocking.
  FeatureVector key_prototype;
  double delta_env = 1.25;
};

struct StepResult {
  WorldState state;
  double reward = 0.0;
  bool done = false;
};

namespace detail {

inline WorldObject make_object(int id, ObjectKind kind, Position pos) {
  WorldObject o;
  o.id = id;
  o.kind = kind;
  o.pos = pos;
  switch (kind) {
    case ObjectKind::key: o.color = 0; o.size = 0.3; o.portable = true; break;
    case ObjectKind::card: o.color = 1; o.size = 0.6; o.portable = true; break;
    case ObjectKind::door: o.color = 1; o.size = 1.0; o.portable = false; break;
    case ObjectKind::stick: o.color = 1; o.size = 0.9; o.portable = true; break;
    case ObjectKind::hook: o.color = 1; o.size = 0.7; o.portable = true; break;
  }
  return o;
}

inline int draw(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

}  // namespace detail

/// Deterministic initial layout for (task, seed).
inline WorldState reset(Task task, std::uint64_t seed, const EnvConfig& cfg = {}) {
  if (task == Task::Custom) throw std::invalid_argument("reset: Custom tasks are loaded with load_layout");
  if (cfg.width < 6 || cfg.height < 1) throw std::invalid_argument("reset: grid must be at least 6 wide");
  WorldState s;
  s.task = task;
  s.width = cfg.width;
  s.height = cfg.height;
  s.max_steps = cfg.max_steps;
  s.walls.assign(static_cast<std::size_t>(cfg.width * cfg.height), 0);

  // A one-row corridor: every cell off the corridor row is wall, and the
  // corridor is closed by a door. All draws happen regardless of task so
  // Base, Transfer and Impasse share the topology.
  std::mt19937_64 rng(seed);
  const int wall_x = detail::draw(rng, cfg.width - 4, cfg.width - 3);
  const int row = detail::draw(rng, 0, cfg.height - 1);
  const int agent_x = detail::draw(rng, 0, 1);
  const int key_x = agent_x + 1;
  const int hook_x = wall_x + 2;

  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x)
      if (y != row || x == wall_x) s.walls[static_cast<std::size_t>(y * cfg.width + x)] = 1;
  s.walls[static_cast<std::size_t>(row * cfg.width + wall_x)] = 0;
  s.agent = {agent_x, row};
  s.goal = {wall_x + 1, row};

  switch (task) {
    case Task::BaseKeyDoor:
      s.objects.push_back(detail::make_object(0, ObjectKind::key, {key_x, row}));
      break;
    case Task::TransferKeyDoor:
      s.objects.push_back(detail::make_object(0, ObjectKind::card, {key_x, row}));
      break;
    case Task::ImpasseTool:
      s.objects.push_back(detail::make_object(0, ObjectKind::stick, {key_x, row}));
      break;
    case Task::Custom: break;
  }
  s.objects.push_back(detail::make_object(1, ObjectKind::door, {wall_x, row}));
  if (task == Task::ImpasseTool) s.objects.push_back(detail::make_object(2, ObjectKind::hook, {hook_x, row}));
  return s;
}

/// Parses a text layout, one grid row per line:
///   '#' wall   '.' floor   'A' agent   'G' goal
///   'K' key    'C' card    'D' door    'S' stick   'H' hook
/// Lines starting with ';' are comments. Object ids follow reading order.
inline WorldState parse_layout(std::string_view text, int max_steps = 200) {
  std::vector<std::string> rows;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == ';') continue;
    rows.push_back(line);
  }
  if (rows.empty()) throw std::invalid_argument("layout: no grid rows");
  const auto width = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != width) throw std::invalid_argument("layout: rows have different lengths");

  WorldState s;
  s.task = Task::Custom;
  s.width = static_cast<int>(width);
  s.height = static_cast<int>(rows.size());
  s.max_steps = max_steps;
  s.walls.assign(width * rows.size(), 0);
  bool agent = false;
  bool goal = false;
  int next_id = 0;
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      const char c = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)];
      const Position p{x, y};
      switch (c) {
        case '.': break;
        case '#': s.walls[static_cast<std::size_t>(y * s.width + x)] = 1; break;
        case 'A': s.agent = p; agent = true; break;
        case 'G': s.goal = p; goal = true; break;
        case 'K': s.objects.push_back(detail::make_object(next_id++, ObjectKind::key, p)); break;
        case 'C': s.objects.push_back(detail::make_object(next_id++, ObjectKind::card, p)); break;
        case 'D': s.objects.push_back(detail::make_object(next_id++, ObjectKind::door, p)); break;
        case 'S': s.objects.push_back(detail::make_object(next_id++, ObjectKind::stick, p)); break;
        case 'H': s.objects.push_back(detail::make_object(next_id++, ObjectKind::hook, p)); break;
        default: throw std::invalid_argument(std::string("layout: unknown cell character '") + c + "'");
      }
    }
  }
  if (!agent || !goal) throw std::invalid_argument("layout: needs exactly one 'A' and one 'G'");
  return s;
}

namespace detail {

inline bool blocked(const WorldState& s, Position p) {
  if (!s.in_bounds(p) || s.wall_at(p)) return true;
  return std::any_of(s.objects.begin(), s.objects.end(),
                     [&](const WorldObject& o) { return o.kind == ObjectKind::door && !o.open && o.pos == p; });
}

inline bool token_unlocks(const EnvAction& a, const EnvConfig& cfg) {
  if (cfg.key_prototype.empty()) return false;
  return std::any_of(a.tokens.begin(), a.tokens.end(), [&](const FeatureVector& t) {
    return t.size() == cfg.key_prototype.size() && distance(t.view(), cfg.key_prototype.view()) <= cfg.delta_env;
  });
}

}  // namespace detail

/// Nearest object within reach (Chebyshev distance <= 1), ties to the lowest id.
inline std::optional<int> nearest_reachable(const WorldState& s, bool portable_only) {
  std::optional<int> best;
  int best_d = 2;
  for (const auto& o : s.objects) {
    if (o.held || (portable_only && !o.portable)) continue;
    const int d = chebyshev(o.pos, s.agent);
    if (d < best_d || (d == best_d && best && o.id < *best)) {
      best = o.id;
      best_d = d;
    }
  }
  return best;
}

/// Deterministic transition. Invalid interactions are no-ops that still cost a step.
inline StepResult step(const WorldState& state, const EnvAction& action, const EnvConfig& cfg = {}) {
  if (state.done()) throw std::logic_error("step: episode already finished");
  WorldState s = state;
  ++s.step;

  auto move = [&](int dx, int dy) {
    const Position p{s.agent.x + dx, s.agent.y + dy};
    if (detail::blocked(s, p)) return;
    s.agent = p;
    for (auto& o : s.objects)
      if (o.held) o.pos = p;
  };

  switch (action.kind) {
    case ActionKind::north: move(0, -1); break;
    case ActionKind::south: move(0, 1); break;
    case ActionKind::east: move(1, 0); break;
    case ActionKind::west: move(-1, 0); break;
    case ActionKind::wait: break;
    case ActionKind::pickup: {
      if (s.held_object()) break;
      const auto id = action.target ? action.target : nearest_reachable(s, true);
      if (!id) break;
      for (auto& o : s.objects)
        if (o.id == *id && o.portable && !o.held && chebyshev(o.pos, s.agent) <= 1) {
          o.held = true;
          o.pos = s.agent;
        }
      break;
    }
    case ActionKind::use_on: {
      if (!action.target) break;
      const WorldObject* held = s.held_object();
      const bool has_key = held && opens_doors(held->kind);
      for (auto& o : s.objects)
        if (o.id == *action.target && !o.held && chebyshev(o.pos, s.agent) <= 1 && o.kind == ObjectKind::door &&
            !o.open && (has_key || detail::token_unlocks(action, cfg)))
          o.open = true;
      break;
    }
  }

  if (s.agent == s.goal) s.goal_reached = true;
  const double reward = s.goal_reached ? cfg.goal_reward : cfg.step_reward;
  return StepResult{s, reward, s.done()};
}

/// ASCII frame: '@' agent, lowercase = held object is drawn at the agent.
inline std::string render(const WorldState& s) {
  std::string out;
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      const Position p{x, y};
      char c = s.wall_at(p) ? '#' : '.';
      if (p == s.goal) c = 'G';
      for (const auto& o : s.objects) {
        if (o.held || !(o.pos == p)) continue;
        switch (o.kind) {
          case ObjectKind::key: c = 'K'; break;
          case ObjectKind::card: c = 'C'; break;
          case ObjectKind::door: c = o.open ? '/' : 'D'; break;
          case ObjectKind::stick: c = 'S'; break;
          case ObjectKind::hook: c = 'H'; break;
        }
      }
      if (p == s.agent) c = '@';
      out += c;
    }
    out += '\n';
  }
  return out;
}

}  // namespace aigenc
