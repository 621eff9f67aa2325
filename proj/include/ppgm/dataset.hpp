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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ppgm/graph.hpp"

namespace ppgm {

enum class Task { classification, regression };
enum class Split { train = 0, val = 1, test = 2 };

inline constexpr std::array<const char*, 3> kSplitNames{"train", "val", "test"};
const char* task_name(Task t);
Task task_from_name(const std::string& name);

/// Two graph references plus a similarity label: a class in {0,1} for
/// classification, a score in [0,1] for regression.
struct GraphPair {
  std::string g1;
  std::string g2;
  double y = 0.0;
};

struct GenConfig {
  int graphs = 60;
  std::array<int, 3> pairs{500, 100, 100};
  int min_nodes = 20;
  int max_nodes = 40;
  double perturb = 0.10;
  Task task = Task::classification;
};

/// The private property attacked throughout: which generator family a
/// graph's base was drawn from.
inline constexpr const char* kFamilyProperty = "family";

struct Dataset {
  Task task = Task::classification;
  int feature_dim = 8;
  uint64_t seed = 0;
  GenConfig config;
  std::vector<Graph> graphs;  // ordered by id
  std::array<std::vector<GraphPair>, 3> pairs;

  /// Generation bookkeeping (graph id -> latent base index); not persisted.
  std::map<std::string, int> base_of;
  /// Derived lookup (graph id -> position in graphs); rebuilt on load.
  std::map<std::string, int> index_of;

  void rebuild_index();
  const Graph& graph(const std::string& id) const;
  bool has_graph(const std::string& id) const;
  const std::vector<GraphPair>& split(Split s) const { return pairs[static_cast<size_t>(s)]; }
  std::vector<std::string> split_graph_ids(Split s) const;
};

/// Synthetic benchmark: latent base graphs drawn 50/50 from
/// Erdos-Renyi(p=0.15) and preferential attachment(k=2); every stored graph
/// is an independent edge-rewiring of its base; a positive pair joins two
/// variants of one base, a negative pair two different bases. Node features
/// are one-hot degree buckets (f=8). Bases are partitioned across splits
/// (stratified by family) before pairing.
Dataset generate_synthetic_dataset(const GenConfig& config, uint64_t seed);

/// graphs.jsonl + pairs.jsonl + meta.json under dir; reals round-trip
/// 64-bit exactly.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

/// Field-for-field equality of the persisted representation.
bool datasets_equal(const Dataset& a, const Dataset& b);

}  // namespace ppgm
