#pragma once

// Concept processing: world state -> object slots -> state graph.
//
// The encoder is symbolic and deterministic. Object features are laid out as
//
//   [ kind one-hot (5) | color one-hot (2) | size | dx | dy | held | open ]  (+ zero padding to M)
//
// with dx, dy the object position relative to the agent divided by the grid extent.
// Saliency is 1 / (1 + Chebyshev distance to the agent).

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "aigenc/concept.hpp"
#include "aigenc/env.hpp"

namespace aigenc {

inline constexpr std::size_t kRawObjectDims = kObjectKinds + kColors + 5;

namespace feature_index {
inline constexpr std::size_t kind = 0;
inline constexpr std::size_t color = kObjectKinds;
inline constexpr std::size_t size = kObjectKinds + kColors;
inline constexpr std::size_t dx = size + 1;
inline constexpr std::size_t dy = size + 2;
inline constexpr std::size_t held = size + 3;
inline constexpr std::size_t open = size + 4;
}  // namespace feature_index

struct Slot {
  FeatureVector features;
  double saliency = 0.0;
  int provenance = 0;  // world object id

  friend bool operator==(const Slot&, const Slot&) = default;
};

/// At most K slots, ordered by provenance id.
struct SlotSet {
  std::vector<Slot> slots;

  std::size_t size() const { return slots.size(); }
  bool empty() const { return slots.empty(); }

  const Slot* find(int provenance) const {
    for (const auto& s : slots)
      if (s.provenance == provenance) return &s;
    return nullptr;
  }

  std::optional<std::size_t> index_of(int provenance) const {
    for (std::size_t i = 0; i < slots.size(); ++i)
      if (slots[i].provenance == provenance) return i;
    return std::nullopt;
  }

  friend bool operator==(const SlotSet&, const SlotSet&) = default;
};

/// Top-K by saliency; equal saliency goes to the lower provenance id.
inline SlotSet select_slots(std::vector<Slot> candidates, std::size_t k) {
  if (k == 0) throw std::invalid_argument("select_slots: K must be >= 1");
  std::stable_sort(candidates.begin(), candidates.end(), [](const Slot& a, const Slot& b) {
    if (a.saliency != b.saliency) return a.saliency > b.saliency;
    return a.provenance < b.provenance;
  });
  if (candidates.size() > k) candidates.resize(k);
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Slot& a, const Slot& b) { return a.provenance < b.provenance; });
  return SlotSet{std::move(candidates)};
}

/// Fixed unit-norm encodings per action kind, drawn from a seeded Gaussian.
class ActionEncodingTable {
 public:
  ActionEncodingTable() = default;

  static ActionEncodingTable generate(std::size_t dim, std::uint64_t seed,
                                      const std::vector<ActionKind>& kinds = all_kinds()) {
    if (dim == 0) throw std::invalid_argument("action encoding dimension must be >= 1");
    ActionEncodingTable table;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (ActionKind kind : kinds) {
      for (;;) {
        std::vector<double> v(dim);
        for (auto& x : v) x = normal(rng);
        const double n = norm(v);
        if (n < 1e-9) continue;
        for (auto& x : v) x /= n;
        bool distinct = true;
        for (const auto& [other, u] : table.codes_)
          if (dot(u.view(), v) > 1.0 - 1e-6) distinct = false;
        if (!distinct) continue;
        table.codes_.emplace(kind, FeatureVector(std::move(v)));
        break;
      }
    }
    return table;
  }

  static std::vector<ActionKind> all_kinds() {
    std::vector<ActionKind> out;
    for (std::size_t i = 0; i < kActionKinds; ++i) out.push_back(static_cast<ActionKind>(i));
    return out;
  }

  bool contains(ActionKind kind) const { return codes_.count(kind) != 0; }

  const FeatureVector& at(ActionKind kind) const {
    auto it = codes_.find(kind);
    if (it == codes_.end()) throw std::invalid_argument("no encoding registered for action '" + std::string(to_string(kind)) + "'");
    return it->second;
  }

  const std::map<ActionKind, FeatureVector>& codes() const { return codes_; }

 private:
  std::map<ActionKind, FeatureVector> codes_;
};

inline const FeatureVector& encode_action(const EnvAction& action, const ActionEncodingTable& table) {
  return table.at(action.kind);
}

/// after - before, element-wise.
inline FeatureVector compute_effect(const FeatureVector& before, const FeatureVector& after) {
  if (before.size() != after.size()) throw std::invalid_argument("compute_effect: dimension mismatch");
  std::vector<double> out(before.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = after[i] - before[i];
  return FeatureVector(std::move(out));
}

struct EncoderConfig {
  Dims dims{};
  std::size_t slots = 6;  // K
  std::string saliency_rule = "chebyshev";
};

class SymbolicEncoder {
 public:
  explicit SymbolicEncoder(EncoderConfig cfg = {}) : cfg_(std::move(cfg)) {
    if (cfg_.dims.object < kRawObjectDims)
      throw std::invalid_argument("encoder: object vocabulary needs " + std::to_string(kRawObjectDims) +
                                  " feature dims but M = " + std::to_string(cfg_.dims.object));
    if (cfg_.slots == 0) throw std::invalid_argument("encoder: K must be >= 1");
    if (cfg_.saliency_rule != "chebyshev")
      throw std::invalid_argument("encoder: unknown saliency rule '" + cfg_.saliency_rule + "'");
  }

  const EncoderConfig& config() const { return cfg_; }
  const Dims& dims() const { return cfg_.dims; }

  FeatureVector object_features(const WorldObject& o, const WorldState& s) const {
    std::vector<double> f(cfg_.dims.object, 0.0);
    f[feature_index::kind + static_cast<std::size_t>(o.kind)] = 1.0;
    f[feature_index::color + static_cast<std::size_t>(o.color)] = 1.0;
    f[feature_index::size] = o.size;
    f[feature_index::dx] = static_cast<double>(o.pos.x - s.agent.x) / std::max(1, s.width - 1);
    f[feature_index::dy] = static_cast<double>(o.pos.y - s.agent.y) / std::max(1, s.height - 1);
    f[feature_index::held] = o.held ? 1.0 : 0.0;
    f[feature_index::open] = o.open ? 1.0 : 0.0;
    return FeatureVector(std::move(f));
  }

  static double saliency(const WorldObject& o, const WorldState& s) {
    return 1.0 / (1.0 + static_cast<double>(chebyshev(o.pos, s.agent)));
  }

  /// One candidate per visible object, filtered to the K most salient.
  SlotSet object_discovery(const WorldState& s) const {
    std::vector<Slot> candidates;
    candidates.reserve(s.objects.size());
    for (const auto& o : s.objects) candidates.push_back(Slot{object_features(o, s), saliency(o, s), o.id});
    return select_slots(std::move(candidates), cfg_.slots);
  }

  /// Features of the base key while held: the prototype the environment
  /// compares blended concept tokens against.
  FeatureVector key_prototype() const {
    WorldState s;
    s.width = 8;
    s.height = 8;
    WorldObject key = detail::make_object(0, ObjectKind::key, s.agent);
    key.held = true;
    return object_features(key, s);
  }

 private:
  EncoderConfig cfg_;
};

/// Slot in `after` corresponding to `before`: same provenance if present,
/// otherwise the nearest slot in feature space.
inline const Slot* match_slot(const Slot& before, const SlotSet& after) {
  if (const Slot* s = after.find(before.provenance)) return s;
  const Slot* best = nullptr;
  double best_d = 0.0;
  for (const auto& s : after.slots) {
    const double d = squared_distance(before.features.view(), s.features.view());
    if (!best || d < best_d) {
      best = &s;
      best_d = d;
    }
  }
  return best;
}

/// One observed node per slot, in slot order (node id == slot index). No edges.
inline ConceptGraph create_state_graph(const SlotSet& slots, const ActionEncodingTable& /*table*/, const Dims& dims) {
  ConceptGraph g(dims);
  for (const auto& s : slots.slots) g.add_node(s.features, s.saliency, Origin::observed);
  return g;
}

}  // namespace aigenc
