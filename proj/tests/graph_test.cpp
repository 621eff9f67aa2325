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

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "ppgm/graph.hpp"
#include "ppgm/rng.hpp"

using namespace ppgm;

namespace {

Graph make_graph(int n, std::vector<std::pair<int, int>> edges) {
  Graph g;
  g.id = "t";
  g.num_nodes = n;
  g.feature_dim = 0;
  g.edges = std::move(edges);
  return g;
}

Graph random_gnp(int n, double p, Rng& rng) {
  Graph g = make_graph(n, {});
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.uniform() < p) g.edges.emplace_back(u, v);
  return g;
}

}  // namespace

TEST_CASE("normalized_adjacency: closed-form small cases") {
  // Single isolated node.
  auto a1 = normalized_adjacency(make_graph(1, {}));
  CHECK(a1.scalar_value() == 1.0);

  // Two nodes, one edge: degrees with self-loop are 2, every entry 1/2.
  auto a2 = normalized_adjacency(make_graph(2, {{0, 1}}));
  for (double v : a2.data()) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));

  // Triangle: degrees 3, every entry 1/3.
  auto a3 = normalized_adjacency(make_graph(3, {{0, 1}, {0, 2}, {1, 2}}));
  for (double v : a3.data()) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));

  // Isolated node inside a larger graph keeps a lone unit diagonal entry.
  auto a4 = normalized_adjacency(make_graph(3, {{0, 1}}));
  CHECK(a4.at(2, 2) == 1.0);
  CHECK(a4.at(2, 0) == 0.0);
  CHECK(a4.at(2, 1) == 0.0);
}

TEST_CASE("normalized_adjacency: symmetric and permutation-equivariant") {
  Rng rng(31337);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + rng.uniform_int(7);
    Graph g = random_gnp(n, 0.4, rng);
    auto a = normalized_adjacency(g);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) CHECK(a.at(i, j) == a.at(j, i));

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    auto ap = normalized_adjacency(permute_graph(g, perm));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) CHECK(ap.at(i, j) == a.at(perm[i], perm[j]));
  }
}

TEST_CASE("exact_ged: identity, insertion, and the triangle/path case") {
  Graph tri = make_graph(3, {{0, 1}, {0, 2}, {1, 2}});
  Graph path3 = make_graph(3, {{0, 1}, {1, 2}});
  CHECK(exact_ged(tri, tri) == 0);
  CHECK(exact_ged(make_graph(0, {}), make_graph(1, {})) == 1);
  CHECK(exact_ged(tri, path3) == 1);

  Graph big = make_graph(9, {});
  CHECK_THROWS_WITH_AS((void)exact_ged(big, tri),
                       doctest::Contains("bounded to 8"), std::invalid_argument);
}

TEST_CASE("exact_ged: agrees with exhaustive permutation search") {
  Rng rng(777);
  for (int trial = 0; trial < 200; ++trial) {
    const int n1 = 1 + rng.uniform_int(6), n2 = 1 + rng.uniform_int(6);
    Graph g1 = random_gnp(n1, 0.5, rng), g2 = random_gnp(n2, 0.5, rng);
    CHECK(exact_ged(g1, g2) == oracles::permutation_ged(g1, g2));
  }
}

TEST_CASE("exact_ged: metric behaviour on random triples") {
  Rng rng(4242);
  for (int trial = 0; trial < 200; ++trial) {
    const int na = 1 + rng.uniform_int(6), nb = 1 + rng.uniform_int(6), nc = 1 + rng.uniform_int(6);
    Graph a = random_gnp(na, 0.4, rng), b = random_gnp(nb, 0.4, rng), c = random_gnp(nc, 0.4, rng);
    const int ab = exact_ged(a, b), ba = exact_ged(b, a);
    const int bc = exact_ged(b, c), ac = exact_ged(a, c);
    CHECK(ab == ba);
    CHECK(ac <= ab + bc);
  }
}

TEST_CASE("ged_similarity: normalization and monotonicity") {
  Graph tri = make_graph(3, {{0, 1}, {0, 2}, {1, 2}});
  Graph path3 = make_graph(3, {{0, 1}, {1, 2}});
  Graph empty3 = make_graph(3, {});
  CHECK(ged_similarity(tri, tri) == 1.0);
  CHECK(ged_similarity(tri, path3) == doctest::Approx(std::exp(-2.0 / 6)).epsilon(1e-15));
  // Larger edit distance at fixed sizes gives a strictly smaller score.
  CHECK(ged_similarity(tri, path3) > ged_similarity(tri, empty3));
}

TEST_CASE("validate_graph rejects malformed graphs") {
  Graph bad = make_graph(3, {{0, 3}});
  CHECK_THROWS_AS(validate_graph(bad), std::invalid_argument);
  Graph loop = make_graph(3, {{1, 1}});
  CHECK_THROWS_AS(validate_graph(loop), std::invalid_argument);
  Graph dup = make_graph(3, {{0, 1}, {1, 0}});
  CHECK_THROWS_AS(validate_graph(dup), std::invalid_argument);
}
