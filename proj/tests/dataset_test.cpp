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

#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "ppgm/dataset.hpp"
#include "test_util.hpp"

using namespace ppgm;

TEST_CASE("generator: default config counts are exact") {
  GenConfig cfg;  // 60 graphs, 500/100/100 pairs
  Dataset ds = generate_synthetic_dataset(cfg, 7);

  CHECK(ds.graphs.size() == 60);
  CHECK(ds.split(Split::train).size() == 500);
  CHECK(ds.split(Split::val).size() == 100);
  CHECK(ds.split(Split::test).size() == 100);

  int positives = 0;
  std::map<std::string, int> family_counts;
  for (int s = 0; s < 3; ++s)
    for (const auto& p : ds.pairs[s]) positives += p.y == 1.0 ? 1 : 0;
  for (const auto& g : ds.graphs) family_counts[g.properties.at(kFamilyProperty)]++;

  CHECK(positives == 350);
  CHECK(family_counts.at("er") == 30);
  CHECK(family_counts.at("pa") == 30);
  for (const auto& g : ds.graphs) {
    CHECK(g.num_nodes >= 20);
    CHECK(g.num_nodes <= 40);
    CHECK(g.feature_dim == 8);
  }
}

TEST_CASE("generator: same config and seed give byte-identical files") {
  GenConfig cfg;
  cfg.graphs = 24;
  cfg.pairs = {60, 20, 20};
  testutil::TempDir d1("gen_a"), d2("gen_b");
  write_dataset(generate_synthetic_dataset(cfg, 99), d1.path);
  write_dataset(generate_synthetic_dataset(cfg, 99), d2.path);
  for (const char* name : {"graphs.jsonl", "pairs.jsonl", "meta.json"})
    CHECK(testutil::slurp(d1.path / name) == testutil::slurp(d2.path / name));
  // A different seed actually changes the contents.
  testutil::TempDir d3("gen_c");
  write_dataset(generate_synthetic_dataset(cfg, 100), d3.path);
  CHECK(testutil::slurp(d1.path / "graphs.jsonl") != testutil::slurp(d3.path / "graphs.jsonl"));
}

TEST_CASE("generator: splits share no graph ids and no latent bases") {
  Dataset ds = generate_synthetic_dataset(GenConfig{}, 11);
  std::set<std::string> seen_ids;
  std::set<int> bases_by_split[3];
  for (int s = 0; s < 3; ++s) {
    for (const std::string& id : ds.split_graph_ids(static_cast<Split>(s))) {
      CHECK(seen_ids.insert(id).second);
      bases_by_split[s].insert(ds.base_of.at(id));
    }
  }
  for (int s1 = 0; s1 < 3; ++s1)
    for (int s2 = s1 + 1; s2 < 3; ++s2)
      for (int b : bases_by_split[s1]) CHECK(bases_by_split[s2].count(b) == 0);
}

TEST_CASE("generator: invalid configs are rejected") {
  GenConfig bad_nodes;
  bad_nodes.min_nodes = 2;
  CHECK_THROWS_AS((void)generate_synthetic_dataset(bad_nodes, 1), std::invalid_argument);

  GenConfig bad_perturb;
  bad_perturb.perturb = 0.6;
  CHECK_THROWS_AS((void)generate_synthetic_dataset(bad_perturb, 1), std::invalid_argument);

  GenConfig reg_too_big;
  reg_too_big.task = Task::regression;
  CHECK_THROWS_AS((void)generate_synthetic_dataset(reg_too_big, 1), std::invalid_argument);
}

TEST_CASE("generator: regression labels come from exact GED and separate pair kinds") {
  GenConfig cfg;
  cfg.graphs = 24;
  cfg.pairs = {80, 20, 20};
  cfg.min_nodes = 5;
  cfg.max_nodes = 8;
  cfg.task = Task::regression;
  Dataset ds = generate_synthetic_dataset(cfg, 3);

  double same_sum = 0.0, cross_sum = 0.0;
  int same_n = 0, cross_n = 0;
  for (int s = 0; s < 3; ++s)
    for (const auto& p : ds.pairs[s]) {
      CHECK(p.y > 0.0);
      CHECK(p.y <= 1.0);
      CHECK(p.y == ged_similarity(ds.graph(p.g1), ds.graph(p.g2)));
      if (ds.base_of.at(p.g1) == ds.base_of.at(p.g2)) {
        same_sum += p.y;
        ++same_n;
      } else {
        cross_sum += p.y;
        ++cross_n;
      }
    }
  REQUIRE(same_n > 0);
  REQUIRE(cross_n > 0);
  CHECK(same_sum / same_n > cross_sum / cross_n);
}

TEST_CASE("dataset io: write/read round-trip is field-for-field equal") {
  GenConfig cfg;
  cfg.graphs = 24;
  cfg.pairs = {60, 20, 0};  // empty test split is legal, only flagged
  Dataset ds = generate_synthetic_dataset(cfg, 5);
  testutil::TempDir dir("roundtrip");
  write_dataset(ds, dir.path);
  Dataset back = read_dataset(dir.path);
  CHECK(datasets_equal(ds, back));
  CHECK(back.split(Split::test).empty());
}

TEST_CASE("dataset io: malformed records are rejected with their line number") {
  GenConfig cfg;
  cfg.graphs = 12;
  cfg.pairs = {8, 2, 2};
  Dataset ds = generate_synthetic_dataset(cfg, 5);
  testutil::TempDir dir("badline");
  write_dataset(ds, dir.path);

  SUBCASE("edge endpoint equal to |V|") {
    std::ofstream out(dir.path / "graphs.jsonl", std::ios::binary);
    out << R"({"id":"g0000","n":2,"features":[[1],[1]],"edges":[[0,2]],"props":{"family":"er"}})"
        << "\n";
    out.close();
    try {
      (void)read_dataset(dir.path);
      FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("graphs.jsonl line 1") != std::string::npos);
      CHECK(msg.find("out of range") != std::string::npos);
    }
  }

  SUBCASE("unknown task kind") {
    std::ofstream out(dir.path / "meta.json", std::ios::binary);
    out << R"({"task":"ranking","f":8,"seed":5,"config":{"graphs":8,"pairs":[8,2,2],)"
        << R"("min_nodes":20,"max_nodes":40,"perturb":0.1,"task":"cls"}})" << "\n";
    out.close();
    CHECK_THROWS_WITH_AS((void)read_dataset(dir.path), doctest::Contains("unknown task"),
                         std::invalid_argument);
  }

  SUBCASE("pair referencing a missing graph") {
    std::ofstream out(dir.path / "pairs.jsonl", std::ios::app | std::ios::binary);
    out << R"({"split":"train","g1":"g9999","g2":"g0000","y":1.0})" << "\n";
    out.close();
    try {
      (void)read_dataset(dir.path);
      FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("pairs.jsonl line") != std::string::npos);
    }
  }
}
