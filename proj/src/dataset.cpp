// Copyright 2026 The PPGM Workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ppgm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "ppgm/rng.hpp"

namespace ppgm {

using nlohmann::json;

namespace {

constexpr double kErEdgeProb = 0.15;
constexpr int kPaAttach = 2;
constexpr int kDegreeBuckets = 8;
constexpr int kTargetVariantsPerBase = 6;

std::string graph_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "g%04d", index);
  return buf;
}

Graph gen_erdos_renyi(int n, Rng& rng) {
  Graph g;
  g.num_nodes = n;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.uniform() < kErEdgeProb) g.edges.emplace_back(u, v);
  return g;
}

Graph gen_preferential_attachment(int n, Rng& rng) {
  Graph g;
  g.num_nodes = n;
  g.edges = {{0, 1}, {0, 2}, {1, 2}};
  std::vector<int> endpoints = {0, 1, 0, 2, 1, 2};
  for (int v = 3; v < n; ++v) {
    std::set<int> targets;
    while (static_cast<int>(targets.size()) < kPaAttach)
      targets.insert(endpoints[static_cast<size_t>(rng.uniform_int(static_cast<int>(endpoints.size())))]);
    for (int t : targets) {
      g.edges.emplace_back(t, v);
      endpoints.push_back(t);
      endpoints.push_back(v);
    }
  }
  for (auto& [u, v] : g.edges)
    if (u > v) std::swap(u, v);
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

/// Independent rho-edge-rewiring: each edge is removed with probability rho
/// and replaced by a uniformly random non-edge; node count is preserved.
Graph rewire(const Graph& base, double rho, Rng& rng) {
  Graph out;
  out.num_nodes = base.num_nodes;
  std::set<std::pair<int, int>> kept;
  int removed = 0;
  for (const auto& e : base.edges) {
    if (rng.uniform() < rho)
      ++removed;
    else
      kept.insert(e);
  }
  const int n = base.num_nodes;
  for (int r = 0; r < removed; ++r) {
    for (int attempt = 0; attempt < 4 * n * n; ++attempt) {
      int u = rng.uniform_int(n), v = rng.uniform_int(n);
      if (u == v) continue;
      if (u > v) std::swap(u, v);
      if (kept.insert({u, v}).second) break;
    }
  }
  out.edges.assign(kept.begin(), kept.end());
  return out;
}

void set_degree_features(Graph& g) {
  g.feature_dim = kDegreeBuckets;
  g.features.assign(static_cast<size_t>(g.num_nodes) * kDegreeBuckets, 0.0);
  const std::vector<int> deg = degrees(g);
  for (int i = 0; i < g.num_nodes; ++i) {
    const int bucket = std::min(deg[i], kDegreeBuckets - 1);
    g.features[static_cast<size_t>(i) * kDegreeBuckets + bucket] = 1.0;
  }
}

struct BaseInfo {
  Graph graph;
  std::string family;
  Split split = Split::train;
  int variants = 0;
};

/// Stratified split counts for one family's base graphs: train/val/test
/// roughly 60/20/20 with at least one base per split where the count allows.
std::array<int, 3> split_counts(int f) {
  if (f <= 1) return {f, 0, 0};
  if (f == 2) return {1, 0, 1};
  const int va = std::max(1, f / 5);
  const int te = std::max(1, f / 5);
  return {f - va - te, va, te};
}

json config_to_json(const GenConfig& c) {
  return json{{"graphs", c.graphs},       {"pairs", c.pairs},
              {"min_nodes", c.min_nodes}, {"max_nodes", c.max_nodes},
              {"perturb", c.perturb},     {"task", task_name(c.task)}};
}

GenConfig config_from_json(const json& j) {
  GenConfig c;
  c.graphs = j.at("graphs").get<int>();
  auto p = j.at("pairs");
  for (size_t i = 0; i < 3; ++i) c.pairs[i] = p.at(i).get<int>();
  c.min_nodes = j.at("min_nodes").get<int>();
  c.max_nodes = j.at("max_nodes").get<int>();
  c.perturb = j.at("perturb").get<double>();
  c.task = task_from_name(j.at("task").get<std::string>());
  return c;
}

}  // namespace

const char* task_name(Task t) { return t == Task::classification ? "cls" : "reg"; }

Task task_from_name(const std::string& name) {
  if (name == "cls") return Task::classification;
  if (name == "reg") return Task::regression;
  throw std::invalid_argument("unknown task kind '" + name + "' (expected cls|reg)");
}

void Dataset::rebuild_index() {
  index_of.clear();
  for (size_t i = 0; i < graphs.size(); ++i) index_of[graphs[i].id] = static_cast<int>(i);
}

const Graph& Dataset::graph(const std::string& id) const {
  auto it = index_of.find(id);
  if (it == index_of.end()) throw std::invalid_argument("dataset: unknown graph id '" + id + "'");
  return graphs[static_cast<size_t>(it->second)];
}

bool Dataset::has_graph(const std::string& id) const { return index_of.count(id) > 0; }

std::vector<std::string> Dataset::split_graph_ids(Split s) const {
  std::set<std::string> ids;
  for (const auto& p : split(s)) {
    ids.insert(p.g1);
    ids.insert(p.g2);
  }
  return {ids.begin(), ids.end()};
}

Dataset generate_synthetic_dataset(const GenConfig& config, uint64_t seed) {
  if (config.min_nodes < 3)
    throw std::invalid_argument("generate_synthetic_dataset: min_nodes must be >= 3, got " +
                                std::to_string(config.min_nodes));
  if (config.perturb < 0.0 || config.perturb > 0.5)
    throw std::invalid_argument("generate_synthetic_dataset: perturb must be in [0,0.5], got " +
                                std::to_string(config.perturb));
  if (config.max_nodes < config.min_nodes)
    throw std::invalid_argument("generate_synthetic_dataset: max_nodes < min_nodes");
  if (config.graphs < 4 || config.graphs % 2 != 0)
    throw std::invalid_argument("generate_synthetic_dataset: graphs must be even and >= 4");
  for (int p : config.pairs)
    if (p < 0) throw std::invalid_argument("generate_synthetic_dataset: negative pair count");
  if (config.task == Task::regression && config.max_nodes > kGedMaxNodes)
    throw std::invalid_argument(
        "generate_synthetic_dataset: regression labels need exact GED, max_nodes must be <= " +
        std::to_string(kGedMaxNodes));

  Dataset ds;
  ds.task = config.task;
  ds.feature_dim = kDegreeBuckets;
  ds.seed = seed;
  ds.config = config;

  Rng rng(mix_seed(seed, 0xD5));

  // Latent bases, half per family, each spawning several stored variants.
  // At least 3 bases per family whenever the budget allows, so the
  // stratified partition can populate every split.
  int nb = static_cast<int>(std::lround(config.graphs / static_cast<double>(kTargetVariantsPerBase)));
  nb = std::clamp(nb, std::min(6, config.graphs / 2), config.graphs / 2);
  if (nb % 2 != 0) --nb;
  const int per_family_bases = nb / 2;
  const int per_family_graphs = config.graphs / 2;

  std::vector<BaseInfo> bases;
  for (const std::string family : {"er", "pa"}) {
    std::vector<int> variant_counts(per_family_bases, per_family_graphs / per_family_bases);
    for (int i = 0; i < per_family_graphs % per_family_bases; ++i) ++variant_counts[i];

    const auto counts = split_counts(per_family_bases);
    std::vector<Split> split_slots;
    for (int s = 0; s < 3; ++s)
      split_slots.insert(split_slots.end(), counts[s], static_cast<Split>(s));
    rng.shuffle(split_slots);

    for (int i = 0; i < per_family_bases; ++i) {
      BaseInfo b;
      const int n = config.min_nodes + rng.uniform_int(config.max_nodes - config.min_nodes + 1);
      b.graph = family == "er" ? gen_erdos_renyi(n, rng) : gen_preferential_attachment(n, rng);
      b.family = family;
      b.split = split_slots[i];
      b.variants = variant_counts[i];
      bases.push_back(std::move(b));
    }
  }

  // Stored graphs: independent rewirings of their base.
  std::array<std::vector<std::vector<std::string>>, 3> split_variant_ids;  // [split][base slot]
  std::array<std::vector<int>, 3> split_base_index;
  int counter = 0;
  for (size_t bi = 0; bi < bases.size(); ++bi) {
    const BaseInfo& b = bases[bi];
    const auto s = static_cast<size_t>(b.split);
    split_base_index[s].push_back(static_cast<int>(bi));
    split_variant_ids[s].emplace_back();
    for (int k = 0; k < b.variants; ++k) {
      Graph v = rewire(b.graph, config.perturb, rng);
      v.id = graph_id(counter++);
      set_degree_features(v);
      v.properties[kFamilyProperty] = b.family;
      validate_graph(v);
      ds.base_of[v.id] = static_cast<int>(bi);
      split_variant_ids[s].back().push_back(v.id);
      ds.graphs.push_back(std::move(v));
    }
  }
  ds.rebuild_index();

  // Pairing, inside each split.
  for (int s = 0; s < 3; ++s) {
    const int want = config.pairs[s];
    if (want == 0) continue;
    const auto& slots = split_variant_ids[s];
    std::vector<int> pos_slots, all_slots;
    for (size_t i = 0; i < slots.size(); ++i) {
      all_slots.push_back(static_cast<int>(i));
      if (slots[i].size() >= 2) pos_slots.push_back(static_cast<int>(i));
    }
    auto sample_positive = [&](Rng& r) {
      const auto& ids = slots[static_cast<size_t>(pos_slots[r.uniform_int(static_cast<int>(pos_slots.size()))])];
      int a = r.uniform_int(static_cast<int>(ids.size()));
      int b = r.uniform_int(static_cast<int>(ids.size() - 1));
      if (b >= a) ++b;
      return GraphPair{ids[static_cast<size_t>(a)], ids[static_cast<size_t>(b)], 1.0};
    };
    auto sample_negative = [&](Rng& r) {
      int a = r.uniform_int(static_cast<int>(all_slots.size()));
      int b = r.uniform_int(static_cast<int>(all_slots.size() - 1));
      if (b >= a) ++b;
      const auto& ia = slots[static_cast<size_t>(all_slots[a])];
      const auto& ib = slots[static_cast<size_t>(all_slots[b])];
      return GraphPair{ia[static_cast<size_t>(r.uniform_int(static_cast<int>(ia.size())))],
                       ib[static_cast<size_t>(r.uniform_int(static_cast<int>(ib.size())))], 0.0};
    };

    std::vector<GraphPair>& out = ds.pairs[s];
    if (config.task == Task::classification) {
      const int n_pos = want / 2;
      if (n_pos > 0 && pos_slots.empty())
        throw std::invalid_argument(std::string("generate_synthetic_dataset: split '") +
                                    kSplitNames[s] + "' has no base with two variants");
      if (want - n_pos > 0 && all_slots.size() < 2)
        throw std::invalid_argument(std::string("generate_synthetic_dataset: split '") +
                                    kSplitNames[s] + "' has fewer than two bases");
      for (int i = 0; i < n_pos; ++i) out.push_back(sample_positive(rng));
      for (int i = n_pos; i < want; ++i) out.push_back(sample_negative(rng));
      rng.shuffle(out);
    } else {
      if (pos_slots.empty() || all_slots.size() < 2)
        throw std::invalid_argument(std::string("generate_synthetic_dataset: split '") +
                                    kSplitNames[s] + "' cannot form both pair kinds");
      for (int i = 0; i < want; ++i) {
        GraphPair p = rng.uniform() < 0.5 ? sample_positive(rng) : sample_negative(rng);
        p.y = ged_similarity(ds.graph(p.g1), ds.graph(p.g2));
        out.push_back(p);
      }
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// File I/O
// ---------------------------------------------------------------------------

namespace {

json graph_to_json(const Graph& g) {
  json features = json::array();
  for (int i = 0; i < g.num_nodes; ++i) {
    json row = json::array();
    for (int j = 0; j < g.feature_dim; ++j)
      row.push_back(g.features[static_cast<size_t>(i) * g.feature_dim + j]);
    features.push_back(std::move(row));
  }
  json edges = json::array();
  for (const auto& [u, v] : g.edges) edges.push_back(json::array({u, v}));
  json props = json::object();
  for (const auto& [k, v] : g.properties) props[k] = v;
  return json{{"id", g.id}, {"n", g.num_nodes}, {"features", std::move(features)},
              {"edges", std::move(edges)}, {"props", std::move(props)}};
}

Graph graph_from_json(const json& j) {
  Graph g;
  g.id = j.at("id").get<std::string>();
  g.num_nodes = j.at("n").get<int>();
  if (g.num_nodes < 1) throw std::invalid_argument("graph must have at least one node");
  const auto& features = j.at("features");
  if (features.size() != static_cast<size_t>(g.num_nodes))
    throw std::invalid_argument("feature row count does not match n");
  g.feature_dim = features.empty() ? 0 : static_cast<int>(features.at(0).size());
  for (const auto& row : features) {
    if (static_cast<int>(row.size()) != g.feature_dim)
      throw std::invalid_argument("ragged feature rows");
    for (const auto& v : row) g.features.push_back(v.get<double>());
  }
  for (const auto& e : j.at("edges")) {
    if (e.size() != 2) throw std::invalid_argument("edge must have two endpoints");
    g.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  }
  if (j.contains("props"))
    for (const auto& [k, v] : j.at("props").items()) g.properties[k] = v.get<std::string>();
  validate_graph(g);
  return g;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& l : lines) out << l << '\n';
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

}  // namespace

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> glines;
  for (const Graph& g : ds.graphs) glines.push_back(graph_to_json(g).dump());
  write_lines(dir / "graphs.jsonl", glines);

  std::vector<std::string> plines;
  for (int s = 0; s < 3; ++s)
    for (const GraphPair& p : ds.pairs[s])
      plines.push_back(json{{"split", kSplitNames[s]}, {"g1", p.g1}, {"g2", p.g2}, {"y", p.y}}.dump());
  write_lines(dir / "pairs.jsonl", plines);

  const json meta{{"task", task_name(ds.task)},
                  {"f", ds.feature_dim},
                  {"seed", ds.seed},
                  {"config", config_to_json(ds.config)}};
  std::ofstream out(dir / "meta.json", std::ios::binary);
  out << meta.dump(2) << '\n';
}

Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  json meta;
  {
    std::ifstream in(dir / "meta.json", std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + (dir / "meta.json").string());
    in >> meta;
  }
  ds.task = task_from_name(meta.at("task").get<std::string>());
  ds.feature_dim = meta.at("f").get<int>();
  ds.seed = meta.at("seed").get<uint64_t>();
  ds.config = config_from_json(meta.at("config"));

  const auto glines = read_lines(dir / "graphs.jsonl");
  for (size_t i = 0; i < glines.size(); ++i) {
    try {
      Graph g = graph_from_json(json::parse(glines[i]));
      if (g.feature_dim != ds.feature_dim)
        throw std::invalid_argument("feature dim does not match meta.json");
      ds.graphs.push_back(std::move(g));
    } catch (const std::exception& e) {
      throw std::runtime_error("graphs.jsonl line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  ds.rebuild_index();

  const auto plines = read_lines(dir / "pairs.jsonl");
  for (size_t i = 0; i < plines.size(); ++i) {
    try {
      const json j = json::parse(plines[i]);
      const std::string split = j.at("split").get<std::string>();
      auto it = std::find(kSplitNames.begin(), kSplitNames.end(), split);
      if (it == kSplitNames.end()) throw std::invalid_argument("unknown split '" + split + "'");
      GraphPair p{j.at("g1").get<std::string>(), j.at("g2").get<std::string>(),
                  j.at("y").get<double>()};
      if (!ds.has_graph(p.g1) || !ds.has_graph(p.g2))
        throw std::invalid_argument("pair references unknown graph id");
      if (ds.task == Task::classification && p.y != 0.0 && p.y != 1.0)
        throw std::invalid_argument("classification label must be 0 or 1");
      if (ds.task == Task::regression && (p.y < 0.0 || p.y > 1.0))
        throw std::invalid_argument("regression label must be in [0,1]");
      ds.pairs[static_cast<size_t>(it - kSplitNames.begin())].push_back(std::move(p));
    } catch (const std::exception& e) {
      throw std::runtime_error("pairs.jsonl line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  for (int s = 0; s < 3; ++s)
    if (ds.pairs[s].empty())
      std::cerr << "[ppgm] dataset " << dir.string() << ": split '" << kSplitNames[s]
                << "' has no pairs\n";
  return ds;
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
  if (a.task != b.task || a.feature_dim != b.feature_dim || a.seed != b.seed) return false;
  if (config_to_json(a.config) != config_to_json(b.config)) return false;
  if (a.graphs.size() != b.graphs.size()) return false;
  for (size_t i = 0; i < a.graphs.size(); ++i) {
    const Graph &x = a.graphs[i], &y = b.graphs[i];
    if (x.id != y.id || x.num_nodes != y.num_nodes || x.feature_dim != y.feature_dim ||
        x.features != y.features || x.edges != y.edges || x.properties != y.properties)
      return false;
  }
  for (int s = 0; s < 3; ++s) {
    if (a.pairs[s].size() != b.pairs[s].size()) return false;
    for (size_t i = 0; i < a.pairs[s].size(); ++i) {
      const GraphPair &x = a.pairs[s][i], &y = b.pairs[s][i];
      if (x.g1 != y.g1 || x.g2 != y.g2 || x.y != y.y) return false;
    }
  }
  return true;
}

}  // namespace ppgm
