#pragma once

// JSON encoding of concept graphs and episode graphs.
//
//   graph   {"nodes":[{"id","features","saliency","origin"}],
//            "edges":[{"src","dst","action","effect","reward","origin"}]}
//           (edge "origin" is optional on input and defaults to "observed")
//   episode {"state_nodes":[{"graph_id","reward","label","episode","t"}],
//            "temporal_edges":[{"from","to","t"}]}
//
// Doubles are written in shortest round-trip form, so decode(encode(x)) == x bit for bit.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "aigenc/concept.hpp"

namespace aigenc {

using json = nlohmann::json;

/// Malformed input. `byte` is the offset into the document where parsing failed
/// (0 when the failure is structural rather than syntactic).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t byte)
      : std::runtime_error(what + " (at byte " + std::to_string(byte) + ")"), byte_(byte) {}
  std::size_t byte() const { return byte_; }

 private:
  std::size_t byte_;
};

inline json to_json(const FeatureVector& v) { return json(v.values()); }

inline FeatureVector feature_vector_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("feature vector must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw std::invalid_argument("feature vector entries must be numbers");
    out.push_back(x.get<double>());
  }
  return FeatureVector(std::move(out));
}

inline json to_json(const ConceptGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes())
    nodes.push_back({{"id", n.id},
                     {"features", to_json(n.features)},
                     {"saliency", n.saliency},
                     {"origin", std::string(to_string(n.origin))}});
  json edges = json::array();
  for (const auto& e : g.edges())
    edges.push_back({{"src", e.src},
                     {"dst", e.dst},
                     {"action", to_json(e.affordance.action)},
                     {"effect", to_json(e.affordance.effect)},
                     {"reward", e.affordance.reward},
                     {"origin", std::string(to_string(e.origin))}});
  return json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

/// Decodes a graph. Dimensions are taken from the payload; `fallback` is only
/// used for graphs with no nodes and no edges.
inline ConceptGraph graph_from_json(const json& j, Dims fallback = {}) {
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges"))
    throw std::invalid_argument("graph must be an object with 'nodes' and 'edges'");
  const json& nodes = j.at("nodes");
  const json& edges = j.at("edges");
  if (!nodes.is_array() || !edges.is_array()) throw std::invalid_argument("'nodes' and 'edges' must be arrays");

  Dims dims = fallback;
  if (!nodes.empty()) dims.object = nodes.front().at("features").size();
  if (!edges.empty()) {
    dims.action = edges.front().at("action").size();
    dims.object = edges.front().at("effect").size();
  }

  ConceptGraph g(dims);
  for (const auto& n : nodes)
    g.add_node_with_id(n.at("id").get<NodeId>(), feature_vector_from_json(n.at("features")),
                       n.at("saliency").get<double>(), origin_from_string(n.at("origin").get<std::string>()));
  for (const auto& e : edges)
    g.add_edge(e.at("src").get<NodeId>(), e.at("dst").get<NodeId>(),
               Affordance{feature_vector_from_json(e.at("action")), feature_vector_from_json(e.at("effect")),
                          e.at("reward").get<double>()},
               e.contains("origin") ? origin_from_string(e.at("origin").get<std::string>()) : Origin::observed);
  return g;
}

inline json to_json(const EpisodeGraph& eg) {
  json nodes = json::array();
  for (const auto& n : eg.state_nodes)
    nodes.push_back({{"graph_id", n.graph_id},
                     {"reward", n.reward},
                     {"label", std::string(to_string(n.label))},
                     {"episode", n.episode},
                     {"t", n.t}});
  json edges = json::array();
  for (const auto& e : eg.temporal_edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"t", e.t}});
  return json{{"state_nodes", std::move(nodes)}, {"temporal_edges", std::move(edges)}};
}

inline EpisodeGraph episode_graph_from_json(const json& j) {
  EpisodeGraph eg;
  for (const auto& n : j.at("state_nodes"))
    eg.state_nodes.push_back(StateNode{n.at("graph_id").get<GraphId>(), n.at("reward").get<double>(),
                                       label_from_string(n.at("label").get<std::string>()),
                                       n.at("episode").get<std::int64_t>(), n.at("t").get<std::int64_t>()});
  for (const auto& e : j.at("temporal_edges"))
    eg.temporal_edges.push_back(
        TemporalEdge{e.at("from").get<GraphId>(), e.at("to").get<GraphId>(), e.at("t").get<std::int64_t>()});
  return eg;
}

/// Parses text into JSON, converting syntax errors to ParseError with the byte offset.
inline json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

/// One JSON document per non-empty line. Byte offsets in errors are file offsets.
inline std::vector<json> parse_json_lines(const std::string& path) {
  const std::string text = read_text_file(path);
  std::vector<json> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    if (end > start) {
      try {
        out.push_back(json::parse(text.begin() + static_cast<std::ptrdiff_t>(start),
                                  text.begin() + static_cast<std::ptrdiff_t>(end)));
      } catch (const json::parse_error& e) {
        throw ParseError(e.what(), start + e.byte);
      }
    }
    start = end + 1;
  }
  return out;
}

inline ConceptGraph load_graph(const std::string& path) {
  const json j = parse_json_text(read_text_file(path));
  try {
    return graph_from_json(j);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed graph: ") + e.what(), 0);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("malformed graph: ") + e.what(), 0);
  }
}

inline void save_graph(const std::string& path, const ConceptGraph& g) { write_text_file(path, to_json(g).dump(2) + "\n"); }

}  // namespace aigenc
