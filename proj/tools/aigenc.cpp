// Command-line runner: training, ablations, memory inspection and the
// matching, completion and blending inspectors.
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage, config or parse error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "aigenc/experiment.hpp"

namespace fs = std::filesystem;
using namespace aigenc;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::string task;
  std::vector<std::uint64_t> seeds;
  std::int64_t max_steps = -1;
  std::int64_t episodes = -1;
  std::int64_t workers = -1;
  std::string out;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("config", o.config_path, "JSON config file (defaults apply when omitted)");
  cmd->add_option("--set,--override", o.sets, "Override a config key, key=value (repeatable)");
  cmd->add_option("--task", o.task, "BaseKeyDoor, TransferKeyDoor, ImpasseTool or Custom");
  cmd->add_option("--seed", o.seeds, "Run seed (repeatable, replaces the config's list)");
  cmd->add_option("--max-steps", o.max_steps, "Episode step limit");
  cmd->add_option("--episodes", o.episodes, "Training episodes N");
  cmd->add_option("--workers", o.workers, "Seeds run in parallel (0 = one per core)");
  cmd->add_option("--out", o.out, "Output root (default $AIGENC_OUT or ./runs)");
}

RunConfig resolve(const RunOptions& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  if (!o.task.empty()) set_field(cfg, "task", o.task);
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (o.max_steps >= 0) cfg.max_steps = o.max_steps;
  if (o.episodes >= 0) cfg.episodes = o.episodes;
  if (o.workers >= 0) cfg.workers = o.workers;
  if (!o.out.empty()) cfg.output_dir = o.out;
  for (const auto& s : o.sets) apply_override(cfg, s);
  validate(cfg);
  return cfg;
}

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("no such file '" + path + "'");
}

ConceptGraph read_graph(const std::string& path) {
  require_file(path);
  return load_graph(path);
}

MemoryStore read_memory(const std::string& path) {
  require_file(path);
  try {
    return snapshot_load(path);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed memory snapshot: ") + e.what(), 0);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("malformed memory snapshot: ") + e.what(), 0);
  }
}

void check_dims(const ConceptGraph& g, const MemoryStore& ltm) {
  if (!ltm.empty() && g.dims() != ltm.dims())
    throw UsageError("state graph dimensions (M=" + std::to_string(g.dims().object) + ", P=" +
                     std::to_string(g.dims().action) + ") do not match the memory's (M=" +
                     std::to_string(ltm.dims().object) + ", P=" + std::to_string(ltm.dims().action) + ")");
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream ss;
  ss << std::setprecision(precision) << v;
  return ss.str();
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

void print_matrix(std::ostream& os, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << " ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << " " << std::setw(10) << fmt(m(i, j), 4);
    os << "\n";
  }
}

void print_graph(std::ostream& os, const ConceptGraph& g) {
  os << "graph: " << g.node_count() << " nodes, " << g.edge_count() << " edges\n";
  for (const auto& n : g.nodes()) {
    os << "  node " << n.id << " [" << to_string(n.origin) << "] saliency " << fmt(n.saliency, 4) << " features";
    for (double v : n.features.values()) os << " " << fmt(v, 3);
    os << "\n";
  }
  for (const auto& e : g.edges())
    os << "  edge " << e.src << " -> " << e.dst << " [" << to_string(e.origin) << "] reward " << fmt(e.affordance.reward, 4)
       << "\n";
}

// ---------------------------------------------------------------------------

int cmd_train(const RunOptions& o, bool as_json) {
  const RunConfig cfg = resolve(o);
  const auto dirs = train_all(cfg);
  json out = json::array();
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const auto lines = parse_json_lines((dirs[i] / "metrics.jsonl").string());
    std::size_t successes = 0;
    for (const auto& l : lines) successes += l.at("success").get<bool>();
    out.push_back({{"seed", cfg.seeds[i]}, {"run_dir", dirs[i].string()}, {"episodes", lines.size()}, {"successes", successes}});
  }
  if (as_json) {
    std::cout << json{{"config_hash", config_hash(cfg)}, {"runs", out}}.dump(2) << "\n";
  } else {
    for (const auto& r : out)
      std::cout << "seed " << r["seed"] << ": " << r["episodes"] << " episodes, " << r["successes"] << " successes -> "
                << r["run_dir"].get<std::string>() << "\n";
  }
  return 0;
}

int cmd_ablate(const RunOptions& o, const std::string& component, const std::string& report_path, bool as_json) {
  const RunConfig cfg = resolve(o);
  const AblationReport report = ablate(cfg, component_from_string(component));
  const json j = to_json(report);
  if (!report_path.empty()) write_text_file(report_path, j.dump(2) + "\n");
  if (as_json) {
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::cout << "ablation of " << component << " on " << cfg.task << ", " << cfg.seeds.size() << " seeds, N=" << cfg.episodes
            << "\n";
  std::cout << "  seed  variant  first_success  successes  final_rate  calls\n";
  for (const auto& r : report.rows)
    std::cout << "  " << std::setw(4) << r.seed << "  " << std::setw(7) << (r.component_on ? "on" : "off") << "  "
              << std::setw(13) << r.first_success << "  " << std::setw(9) << r.successes << "  " << std::setw(10)
              << fmt(r.final_success_rate, 3) << "  " << r.component_calls << "\n";
  std::cout << "median first success: on " << report.median_first_success(true) << ", off "
            << report.median_first_success(false) << "\n";
  std::cout << "median final success: on " << report.median_final_success(true) << ", off "
            << report.median_final_success(false) << "\n";
  std::cout << "on wins or ties: " << fmt(report.on_wins_or_ties(), 3) << "\n";
  return 0;
}

int cmd_inspect(const std::string& path, const OtParams& ot, bool as_json) {
  const MemoryStore store = read_memory(path);
  std::size_t nodes = 0, edges = 0;
  for (const auto& s : store.graphs()) {
    nodes += s.graph.node_count();
    edges += s.graph.edge_count();
  }
  std::size_t labels[3] = {0, 0, 0};
  for (const auto& n : store.episode_graph().state_nodes) ++labels[static_cast<int>(n.label)];

  constexpr int bins = 10;
  std::vector<std::size_t> hist(bins, 0);
  double max_sim = 0.0;
  const auto& gs = store.graphs();
  for (std::size_t i = 0; i < gs.size(); ++i)
    for (std::size_t j = i + 1; j < gs.size(); ++j) {
      const double s = fgw_distance(gs[i].graph, gs[j].graph, ot).similarity;
      max_sim = std::max(max_sim, s);
      ++hist[std::min(bins - 1, static_cast<int>(s * bins))];
    }

  if (as_json) {
    json h = json::array();
    for (int b = 0; b < bins; ++b)
      h.push_back({{"lo", static_cast<double>(b) / bins}, {"hi", static_cast<double>(b + 1) / bins}, {"count", hist[b]}});
    std::cout << json{{"kind", std::string(to_string(store.kind()))},
                      {"graphs", gs.size()},
                      {"nodes", nodes},
                      {"edges", edges},
                      {"state_nodes", store.episode_graph().state_nodes.size()},
                      {"temporal_edges", store.episode_graph().temporal_edges.size()},
                      {"labels", {{"1", labels[1]}, {"0", labels[0]}, {"unlabeled", labels[2]}}},
                      {"max_pairwise_similarity", max_sim},
                      {"similarity_histogram", h}}
                     .dump(2)
              << "\n";
    return 0;
  }
  std::cout << to_string(store.kind()) << " snapshot " << path << "\n";
  std::cout << "graphs " << gs.size() << ", nodes " << nodes << ", edges " << edges << "\n";
  std::cout << "state nodes " << store.episode_graph().state_nodes.size() << ", temporal edges "
            << store.episode_graph().temporal_edges.size() << "\n";
  std::cout << "labels: success " << labels[1] << ", failure " << labels[0] << ", unlabeled " << labels[2] << "\n";
  std::cout << "pairwise similarity histogram (max " << fmt(max_sim, 4) << "):\n";
  for (int b = 0; b < bins; ++b)
    std::cout << "  [" << fmt(static_cast<double>(b) / bins, 2) << ", " << fmt(static_cast<double>(b + 1) / bins, 2)
              << ") " << hist[b] << "\n";
  return 0;
}

int cmd_match(const std::string& a, const std::string& b, const OtParams& ot, bool as_json) {
  const ConceptGraph g1 = read_graph(a);
  const ConceptGraph g2 = read_graph(b);
  if (g1.dims().object != g2.dims().object) throw UsageError("graphs have different feature dimensions");
  const MatchResult r = fgw_distance(g1, g2, ot);
  if (as_json) {
    std::cout << json{{"distance", r.distance},
                      {"similarity", r.similarity},
                      {"converged", r.converged},
                      {"coupling", matrix_json(r.coupling.plan)}}
                     .dump(2)
              << "\n";
    return 0;
  }
  std::cout << "distance " << fmt(r.distance) << "\nsimilarity " << fmt(r.similarity) << "\n";
  if (!r.converged) std::cout << "warning: solver hit its iteration limit\n";
  std::cout << "coupling (" << r.coupling.rows() << " x " << r.coupling.cols() << "):\n";
  print_matrix(std::cout, r.coupling.plan);
  return 0;
}

int cmd_enhance(const std::string& state_path, const std::string& ltm_path, ReasoningParams p, bool as_json) {
  const ConceptGraph g = read_graph(state_path);
  const MemoryStore ltm = read_memory(ltm_path);
  check_dims(g, ltm);
  MatchSet ms;
  const ConceptGraph out = enhance(g, ltm, p.z, p, &ms);
  if (as_json) {
    json entries = json::array();
    for (const auto& e : ms.entries)
      entries.push_back({{"graph_id", e.graph_id},
                         {"nodes", e.candidate.node_count()},
                         {"distance", e.match.distance},
                         {"similarity", e.match.similarity}});
    std::cout << json{{"z", p.z}, {"matches", entries}, {"enhanced", to_json(out)}}.dump(2) << "\n";
    return 0;
  }
  std::cout << "match set at Z=" << p.z << ": " << ms.size() << " entries\n";
  std::cout << "  graph  nodes  distance    similarity\n";
  for (const auto& e : ms.entries)
    std::cout << "  " << std::setw(5) << e.graph_id << "  " << std::setw(5) << e.candidate.node_count() << "  "
              << std::setw(10) << fmt(e.match.distance, 5) << "  " << fmt(e.match.similarity, 5) << "\n";
  print_graph(std::cout, out);
  return 0;
}

int cmd_blend(const std::string& state_path, const std::string& ltm_path, const BlendingParams& p, std::uint64_t seed,
              bool as_json) {
  const ConceptGraph g = read_graph(state_path);
  const MemoryStore ltm = read_memory(ltm_path);
  check_dims(g, ltm);
  const BlendingReport r = run_blending(g, ltm, p, seed);
  if (as_json) {
    json decisions = json::array();
    for (const auto& d : r.decisions) {
      json rem = {{"node", d.candidate.remembered.node}};
      if (d.candidate.remembered.ltm_graph) rem["graph_id"] = *d.candidate.remembered.ltm_graph;
      decisions.push_back({{"current_node", d.candidate.current.node},
                           {"remembered", rem},
                           {"similarity", d.candidate.similarity},
                           {"concept", to_json(d.concept_features)},
                           {"centroid_distance", d.centroid_distance},
                           {"accepted", d.accepted}});
    }
    std::cout << json{{"weights", r.weights},
                      {"delta", detail::number_or_inf(r.delta)},
                      {"decisions", decisions},
                      {"injected", r.injected()},
                      {"result", to_json(r.result)}}
                     .dump(2)
              << "\n";
    return 0;
  }
  if (r.decisions.empty()) {
    std::cout << "no blend candidates with similarity in [" << p.x << ", " << p.z << ")\n";
    print_graph(std::cout, r.result);
    return 0;
  }
  std::cout << "feature weights:";
  for (double w : r.weights) std::cout << " " << fmt(w, 3);
  std::cout << "\nacceptance radius " << fmt(r.delta, 5) << "\n";
  std::cout << r.decisions.size() << " candidates:\n";
  for (const auto& d : r.decisions) {
    std::cout << "  current " << d.candidate.current.node << " x memory ";
    if (d.candidate.remembered.ltm_graph) std::cout << *d.candidate.remembered.ltm_graph << ":";
    std::cout << d.candidate.remembered.node << "  similarity " << fmt(d.candidate.similarity, 4) << "  centroid distance "
              << fmt(d.centroid_distance, 4) << "  " << (d.accepted ? "accepted" : "rejected") << "\n";
  }
  print_graph(std::cout, r.result);
  return 0;
}

int cmd_replay(const std::string& path, std::int64_t episode, std::string config_path, bool as_json) {
  const fs::path input(path);
  const fs::path logs = fs::is_directory(input) ? input / "episodes.jsonl" : input;
  if (config_path.empty()) {
    const fs::path sibling = logs.parent_path() / "config.resolved.json";
    if (fs::exists(sibling)) config_path = sibling.string();
  }
  const RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
  require_file(logs.string());
  const auto lines = parse_json_lines(logs.string());
  const json* log = nullptr;
  for (const auto& l : lines)
    if (l.at("episode").get<std::int64_t>() == episode) log = &l;
  if (!log) throw UsageError("episode " + std::to_string(episode) + " not found in '" + logs.string() + "'");
  const Replay r = replay_episode(cfg, *log);
  if (as_json) {
    json frames = json::array();
    for (const auto& f : r.frames) frames.push_back({{"t", f.t}, {"action", f.action}, {"reward", f.reward}, {"frame", f.frame}});
    std::cout << json{{"episode", episode},
                      {"total_reward", r.total_reward},
                      {"success", r.success},
                      {"matches_log", r.matches_log},
                      {"frames", frames}}
                     .dump(2)
              << "\n";
    return r.matches_log ? 0 : 1;
  }
  for (const auto& f : r.frames) {
    std::cout << "t=" << f.t;
    if (!f.action.empty()) std::cout << " " << f.action << " reward " << fmt(f.reward, 4);
    std::cout << "\n" << f.frame << "\n";
  }
  std::cout << "total reward " << fmt(r.total_reward, 6) << ", " << (r.success ? "success" : "failure") << "\n";
  if (!r.matches_log) {
    std::cout << "replay diverged from the log\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aigenc: concept-graph agent with memory, reflective reasoning and blending"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "Machine-readable output")->group("Global");

  RunOptions train_opts;
  auto* train = app.add_subcommand("train", "Train one agent per seed and write run directories");
  add_run_options(train, train_opts);

  RunOptions ablate_opts;
  std::string component = "reasoning";
  std::string report_path;
  auto* abl = app.add_subcommand("ablate", "Paired runs with a component on and off");
  add_run_options(abl, ablate_opts);
  abl->add_option("--component", component, "reasoning or blending")->check(CLI::IsMember({"reasoning", "blending"}));
  abl->add_option("--report", report_path, "Also write the JSON report to this file");

  OtParams ot;
  std::string mem_path;
  auto* inspect = app.add_subcommand("inspect-memory", "Counts, labels and similarity histogram of a snapshot");
  inspect->add_option("file", mem_path, "Memory snapshot")->required();
  inspect->add_option("--alpha", ot.alpha, "Structure weight");
  inspect->add_option("--epsilon", ot.epsilon, "Entropic regularisation");
  inspect->add_option("--tau", ot.tau, "Similarity temperature");

  std::string graph_a, graph_b;
  auto* match = app.add_subcommand("match", "Distance, similarity and coupling of two graphs");
  match->add_option("graph_a", graph_a)->required();
  match->add_option("graph_b", graph_b)->required();
  match->add_option("--alpha", ot.alpha, "Structure weight");
  match->add_option("--epsilon", ot.epsilon, "Entropic regularisation");
  match->add_option("--tau", ot.tau, "Similarity temperature");

  std::string state_path, ltm_path;
  ReasoningParams rp;
  auto* enh = app.add_subcommand("enhance", "Complete a state graph from long-term memory");
  enh->add_option("state", state_path)->required();
  enh->add_option("ltm", ltm_path)->required();
  enh->add_option("--z", rp.z, "Match threshold Z");
  enh->add_option("--alpha", rp.ot.alpha, "Structure weight");
  enh->add_option("--epsilon", rp.ot.epsilon, "Entropic regularisation");
  enh->add_option("--tau", rp.ot.tau, "Similarity temperature");

  BlendingParams bp;
  std::uint64_t blend_seed = 0;
  auto* bl = app.add_subcommand("blend", "Blend candidates, weights, acceptance and the resulting graph");
  bl->add_option("state", state_path)->required();
  bl->add_option("ltm", ltm_path)->required();
  bl->add_option("--x", bp.x, "Lower similarity bound X");
  bl->add_option("--z", bp.z, "Upper similarity bound Z");
  bl->add_option("--limit", bp.limit, "Maximum candidates");
  bl->add_option("--delta", bp.delta, "Acceptance radius (<= 0 automatic)");
  bl->add_option("--k", bp.k, "Clusters");
  bl->add_option("--tau", bp.tau, "Node similarity temperature");
  bl->add_option("--seed", blend_seed, "Seed for saliency and clustering");

  std::string replay_path, replay_config;
  std::int64_t replay_ep = 0;
  auto* rep = app.add_subcommand("replay", "Re-simulate and render a logged episode");
  rep->add_option("log", replay_path, "Run directory or episodes.jsonl")->required();
  rep->add_option("--episode", replay_ep, "Episode index")->required();
  rep->add_option("--config", replay_config, "Config (default: config.resolved.json beside the log)");

  for (auto* sub : app.get_subcommands({})) sub->add_flag("--json", as_json, "Machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) return cmd_train(train_opts, as_json);
    if (*abl) return cmd_ablate(ablate_opts, component, report_path, as_json);
    if (*inspect) return cmd_inspect(mem_path, ot, as_json);
    if (*match) return cmd_match(graph_a, graph_b, ot, as_json);
    if (*enh) return cmd_enhance(state_path, ltm_path, rp, as_json);
    if (*bl) return cmd_blend(state_path, ltm_path, bp, blend_seed, as_json);
    if (*rep) return cmd_replay(replay_path, replay_ep, replay_config, as_json);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
