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

#include "ppgm/graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <stdexcept>

namespace ppgm {

void validate_graph(const Graph& g) {
  if (g.num_nodes < 0) throw std::invalid_argument("graph " + g.id + ": negative node count");
  if (g.feature_dim < 0) throw std::invalid_argument("graph " + g.id + ": negative feature dim");
  if (g.features.size() != static_cast<size_t>(g.num_nodes) * g.feature_dim)
    throw std::invalid_argument("graph " + g.id + ": feature rows do not match node count");
  std::set<std::pair<int, int>> seen;
  for (const auto& [u, v] : g.edges) {
    if (u < 0 || v < 0 || u >= g.num_nodes || v >= g.num_nodes)
      throw std::invalid_argument("graph " + g.id + ": edge endpoint out of range [0," +
                                  std::to_string(g.num_nodes) + ")");
    if (u == v) throw std::invalid_argument("graph " + g.id + ": self-loop at node " + std::to_string(u));
    auto e = std::minmax(u, v);
    if (!seen.insert({e.first, e.second}).second)
      throw std::invalid_argument("graph " + g.id + ": duplicate edge " + std::to_string(u) + "-" +
                                  std::to_string(v));
  }
}

std::vector<int> degrees(const Graph& g) {
  std::vector<int> deg(g.num_nodes, 0);
  for (const auto& [u, v] : g.edges) {
    ++deg[u];
    ++deg[v];
  }
  return deg;
}

num::Tensor feature_tensor(const Graph& g) {
  return num::Tensor::from_data({g.num_nodes, g.feature_dim}, g.features);
}

num::Tensor normalized_adjacency(const Graph& g) {
  const int n = g.num_nodes;
  std::vector<double> a(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) a[static_cast<size_t>(i) * n + i] = 1.0;
  for (const auto& [u, v] : g.edges) {
    a[static_cast<size_t>(u) * n + v] = 1.0;
    a[static_cast<size_t>(v) * n + u] = 1.0;
  }
  std::vector<double> inv_sqrt_deg(n);
  for (int i = 0; i < n; ++i) {
    double d = 0.0;
    for (int j = 0; j < n; ++j) d += a[static_cast<size_t>(i) * n + j];
    inv_sqrt_deg[i] = 1.0 / std::sqrt(d);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      a[static_cast<size_t>(i) * n + j] *= inv_sqrt_deg[i] * inv_sqrt_deg[j];
  return num::Tensor::from_data({n, n}, std::move(a));
}

Graph permute_graph(const Graph& g, const std::vector<int>& perm) {
  if (perm.size() != static_cast<size_t>(g.num_nodes))
    throw std::invalid_argument("permute_graph: permutation size mismatch");
  std::vector<int> inverse(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) inverse[perm[i]] = static_cast<int>(i);
  Graph out = g;
  for (int i = 0; i < g.num_nodes; ++i)
    std::copy_n(g.features.begin() + static_cast<size_t>(perm[i]) * g.feature_dim, g.feature_dim,
                out.features.begin() + static_cast<size_t>(i) * g.feature_dim);
  for (auto& [u, v] : out.edges) {
    u = inverse[u];
    v = inverse[v];
    if (u > v) std::swap(u, v);
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

namespace {

/// Bit-mask adjacency for the exhaustive search (node count <= 8).
struct SmallGraph {
  int n = 0;
  std::array<uint16_t, kGedMaxNodes> adj{};
};

SmallGraph to_small(const Graph& g) {
  SmallGraph s;
  s.n = g.num_nodes;
  for (const auto& [u, v] : g.edges) {
    s.adj[u] |= static_cast<uint16_t>(1u << v);
    s.adj[v] |= static_cast<uint16_t>(1u << u);
  }
  return s;
}

/// Branch-and-bound over injective mappings small -> big. `cost` carries
/// edge mismatches among already-mapped nodes; insertions of big-only edges
/// are added at the leaves.
void ged_search(const SmallGraph& a, const SmallGraph& b, std::vector<int>& image, int next,
                uint16_t used, int cost, int& best) {
  if (cost >= best) return;
  if (next == a.n) {
    int total = cost + (b.n - a.n);
    for (int v = 0; v < b.n; ++v) {
      const bool v_used = (used >> v) & 1;
      for (int w = v + 1; w < b.n; ++w) {
        if ((b.adj[v] >> w) & 1) {
          const bool w_used = (used >> w) & 1;
          if (!v_used || !w_used) ++total;  // edge incident to an inserted node
        }
      }
    }
    best = std::min(best, total);
    return;
  }
  for (int v = 0; v < b.n; ++v) {
    if ((used >> v) & 1) continue;
    int add = 0;
    for (int j = 0; j < next; ++j) {
      const bool e1 = (a.adj[next] >> j) & 1;
      const bool e2 = (b.adj[v] >> image[j]) & 1;
      if (e1 != e2) ++add;
    }
    image[next] = v;
    ged_search(a, b, image, next + 1, static_cast<uint16_t>(used | (1u << v)), cost + add, best);
  }
}

}  // namespace

int exact_ged(const Graph& g1, const Graph& g2) {
  if (g1.num_nodes > kGedMaxNodes || g2.num_nodes > kGedMaxNodes)
    throw std::invalid_argument("exact_ged: exhaustive search is bounded to " +
                                std::to_string(kGedMaxNodes) + " nodes, got " +
                                std::to_string(g1.num_nodes) + " and " +
                                std::to_string(g2.num_nodes));
  const Graph& small = g1.num_nodes <= g2.num_nodes ? g1 : g2;
  const Graph& big = g1.num_nodes <= g2.num_nodes ? g2 : g1;
  SmallGraph a = to_small(small), b = to_small(big);
  if (a.n == 0) {
    int total = b.n;
    for (int v = 0; v < b.n; ++v)
      for (int w = v + 1; w < b.n; ++w) total += (b.adj[v] >> w) & 1;
    return total;
  }
  int best = std::numeric_limits<int>::max();
  std::vector<int> image(a.n, -1);
  ged_search(a, b, image, 0, 0, 0, best);
  return best;
}

double ged_similarity(const Graph& g1, const Graph& g2) {
  const int ged = exact_ged(g1, g2);
  return std::exp(-2.0 * ged / static_cast<double>(g1.num_nodes + g2.num_nodes));
}

}  // namespace ppgm
