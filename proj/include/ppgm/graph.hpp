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

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ppgm/tensor.hpp"

namespace ppgm {

/// An undirected graph with dense node features and private property labels;
/// the unit of privacy in this workbench. Edges are stored normalized
/// (u < v, sorted, unique, no self-loops); self-loops enter only through
/// adjacency normalization.
struct Graph {
  std::string id;
  int num_nodes = 0;
  int feature_dim = 0;
  std::vector<double> features;  // num_nodes x feature_dim, row-major
  std::vector<std::pair<int, int>> edges;
  std::map<std::string, std::string> properties;
};

/// Throws std::invalid_argument on malformed graphs (endpoint out of range,
/// self-loop, duplicate edge, feature row count mismatch).
void validate_graph(const Graph& g);

std::vector<int> degrees(const Graph& g);

/// Node features as a |V| x f constant tensor.
num::Tensor feature_tensor(const Graph& g);

/// GCN-style renormalized adjacency D~^{-1/2} (A + I) D~^{-1/2} as a dense
/// |V| x |V| constant tensor. Symmetric; an isolated node's row is e_i.
num::Tensor normalized_adjacency(const Graph& g);

/// Relabels nodes: node i of the result is node perm[i] of the input.
Graph permute_graph(const Graph& g, const std::vector<int>& perm);

/// Minimum unit-cost edit distance (node/edge insert/delete, unlabeled
/// nodes) over all injective node mappings. Exhaustive search; rejects
/// graphs with more than kGedMaxNodes nodes.
inline constexpr int kGedMaxNodes = 8;
int exact_ged(const Graph& g1, const Graph& g2);

/// exp(-2 GED / (|V1| + |V2|)), the regression similarity label in (0, 1].
double ged_similarity(const Graph& g1, const Graph& g2);

}  // namespace ppgm
