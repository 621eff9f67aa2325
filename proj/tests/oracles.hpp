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
//
// Test-side oracles, deliberately naive and independent of the library
// implementations they check.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ppgm/graph.hpp"
#include "ppgm/tensor.hpp"

namespace oracles {

/// Plain triple-loop matrix product.
inline std::vector<double> naive_matmul(const std::vector<double>& a,
                                        const std::vector<double>& b, int n,
                                        int k, int m) {
  std::vector<double> c(static_cast<size_t>(n) * m, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p)
        acc += a[static_cast<size_t>(i) * k + p] * b[static_cast<size_t>(p) * m + j];
      c[static_cast<size_t>(i) * m + j] = acc;
    }
  return c;
}

/// Rank/pair-counting AUC with ties worth 1/2, O(n^2) by construction.
inline double pair_count_auc(const std::vector<double>& scores,
                             const std::vector<int>& labels) {
  double wins = 0.0;
  size_t pairs = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

/// Unit-cost GED by brute force: pad the smaller graph with isolated nodes
/// and enumerate every permutation of the larger node set.
inline int permutation_ged(const ppgm::Graph& g1, const ppgm::Graph& g2) {
  const ppgm::Graph& small = g1.num_nodes <= g2.num_nodes ? g1 : g2;
  const ppgm::Graph& big = g1.num_nodes <= g2.num_nodes ? g2 : g1;
  const int n = big.num_nodes;
  std::set<std::pair<int, int>> big_edges(big.edges.begin(), big.edges.end());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  int best = std::numeric_limits<int>::max();
  do {
    int cost = big.num_nodes - small.num_nodes;
    std::set<std::pair<int, int>> mapped;
    for (const auto& [u, v] : small.edges) {
      int a = perm[u], b = perm[v];
      if (a > b) std::swap(a, b);
      mapped.insert({a, b});
    }
    for (const auto& e : mapped)
      if (!big_edges.count(e)) ++cost;
    for (const auto& e : big_edges)
      if (!mapped.count(e)) ++cost;
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Central finite-difference check of d(loss)/d(leaf) for every coordinate
/// of every leaf. `build` must re-evaluate the forward pass from the leaves'
/// current data. Returns the worst violation margin (<= 0 means pass).
struct FdResult {
  double worst_margin = -1.0;  // |analytic - fd| - (tol_abs + tol_rel*scale)
  std::string worst_at;
};

inline FdResult fd_gradient_check(const std::function<ppgm::num::Tensor()>& build,
                                  std::vector<ppgm::num::Tensor> leaves,
                                  double h = 1e-6, double tol_rel = 1e-5,
                                  double tol_abs = 1e-8) {
  using ppgm::num::backward;
  FdResult res;
  ppgm::num::GradMap grads = backward(build());
  for (auto& leaf : leaves) {
    auto data = leaf.mutable_data();
    const auto git = grads.find(leaf.name());
    for (size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double up = build().scalar_value();
      data[i] = saved - h;
      const double down = build().scalar_value();
      data[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double an = git == grads.end() ? 0.0 : git->second.data()[i];
      const double margin =
          std::abs(an - fd) - (tol_abs + tol_rel * std::max(std::abs(an), std::abs(fd)));
      if (margin > res.worst_margin) {
        res.worst_margin = margin;
        res.worst_at = leaf.name() + "[" + std::to_string(i) + "] analytic=" +
                       std::to_string(an) + " fd=" + std::to_string(fd);
      }
    }
  }
  return res;
}

}  // namespace oracles
