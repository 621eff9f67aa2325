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
#include "ppgm/model.hpp"
#include "ppgm/rng.hpp"

using namespace ppgm;
using num::Tensor;

namespace {

ModelConfig tiny_config(Family family = Family::ppgm) {
  ModelConfig cfg;
  cfg.family = family;
  cfg.feature_dim = 4;
  cfg.hyper.d = 16;
  cfg.hyper.layers = 3;
  cfg.hyper.m = 2;
  cfg.hyper.heads = 2;
  return cfg;
}

Graph random_graph(int n, double p, int f, Rng& rng, const std::string& id = "t") {
  Graph g;
  g.id = id;
  g.num_nodes = n;
  g.feature_dim = f;
  g.features.resize(static_cast<size_t>(n) * f);
  for (double& v : g.features) v = rng.uniform(-1.0, 1.0);
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.uniform() < p) g.edges.emplace_back(u, v);
  return g;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (size_t i = 0; i < a.numel(); ++i)
    if (a.data()[i] != b.data()[i]) return false;
  return true;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

std::vector<int> random_perm(int n, Rng& rng) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  rng.shuffle(p);
  return p;
}

}  // namespace

TEST_CASE("mha_pool: single key forces weight 1 and query independence") {
  ModelConfig cfg = tiny_config();
  num::ParamStore ps = init_params(cfg, 1);
  AttnBlock block = attn_block(ps, "ctx_attn");
  Rng rng(5);
  Tensor keys = Tensor::from_data({1, 16}, [&] {
    std::vector<double> v(16);
    for (double& x : v) x = rng.uniform(-1, 1);
    return v;
  }());
  Tensor q1 = ps.at("ctx.code.0"), q2 = ps.at("ctx.code.1");
  std::vector<Tensor> weights;
  Tensor out1 = mha_pool(q1, keys, keys, block, cfg.hyper.heads, &weights);
  Tensor out2 = mha_pool(q2, keys, keys, block, cfg.hyper.heads);
  for (const Tensor& w : weights) {
    REQUIRE(w.numel() == 1);
    CHECK(w.data()[0] == 1.0);
  }
  CHECK(bitwise_equal(out1, out2));
}

TEST_CASE("mha_pool: per-head weights sum to 1; row permutations are inert") {
  ModelConfig cfg = tiny_config();
  num::ParamStore ps = init_params(cfg, 2);
  AttnBlock block = attn_block(ps, "msg_attn");
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + rng.uniform_int(6);
    std::vector<double> data(static_cast<size_t>(n) * 16);
    for (double& v : data) v = rng.uniform(-1, 1);
    Tensor keys = Tensor::from_data({n, 16}, data);
    Tensor query = ps.at("ctx.code.0");

    std::vector<Tensor> weights;
    Tensor out = mha_pool(query, keys, keys, block, cfg.hyper.heads, &weights);
    for (const Tensor& w : weights) {
      double sum = 0.0;
      for (double v : w.data()) sum += v;
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }

    // Permute rows of keys/values together.
    const auto perm = random_perm(n, rng);
    std::vector<double> pdata(data.size());
    for (int i = 0; i < n; ++i)
      std::copy_n(data.begin() + static_cast<size_t>(perm[i]) * 16, 16,
                  pdata.begin() + static_cast<size_t>(i) * 16);
    Tensor pkeys = Tensor::from_data({n, 16}, pdata);
    Tensor pout = mha_pool(query, pkeys, pkeys, block, cfg.hyper.heads);
    CHECK(max_abs_diff(out, pout) <= 1e-12);
  }
}

TEST_CASE("gcn_encode: zero features give zero output, single node is ReLU(xW0)") {
  ModelConfig cfg = tiny_config();
  num::ParamStore ps = init_params(cfg, 3);
  Rng rng(11);

  Graph g = random_graph(6, 0.5, 4, rng);
  std::fill(g.features.begin(), g.features.end(), 0.0);
  Tensor h = gcn_encode(g, ps, cfg);
  for (double v : h.data()) CHECK(v == 0.0);

  ModelConfig one_layer = cfg;
  one_layer.hyper.layers = 1;
  num::ParamStore ps1 = init_params(one_layer, 3);
  Graph single = random_graph(1, 0.0, 4, rng);
  Tensor out = gcn_encode(single, ps1, one_layer);
  Tensor expect = num::relu(num::matmul(feature_tensor(single), ps1.at("gcn.w0")));
  CHECK(bitwise_equal(out, expect));

  Graph wrong = random_graph(3, 0.5, 7, rng);
  CHECK_THROWS_AS((void)gcn_encode(wrong, ps, cfg), std::invalid_argument);
}

TEST_CASE("gcn_encode: node relabeling permutes output rows") {
  ModelConfig cfg = tiny_config();
  num::ParamStore ps = init_params(cfg, 4);
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    Graph g = random_graph(3 + rng.uniform_int(6), 0.4, 4, rng);
    const auto perm = random_perm(g.num_nodes, rng);
    Tensor h = gcn_encode(g, ps, cfg);
    Tensor hp = gcn_encode(permute_graph(g, perm), ps, cfg);
    for (int i = 0; i < g.num_nodes; ++i)
      for (int j = 0; j < 16; ++j)
        CHECK(std::abs(hp.at(i, j) - h.at(perm[i], j)) <= 1e-12);
  }
}

TEST_CASE("extract_messages / message_pool: shapes, single-node case, ablations") {
  ModelConfig cfg = tiny_config();
  num::ParamStore ps = init_params(cfg, 5);
  Rng rng(17);

  Graph single = random_graph(1, 0.0, 4, rng);
  Tensor h1 = gcn_encode(single, ps, cfg);
  auto msgs = extract_messages(h1, ps, cfg);
  REQUIRE(msgs.size() == 2);
  CHECK(bitwise_equal(msgs[0], msgs[1]));  // query-independent with one key
  auto pools = message_pool(h1, msgs, ps, cfg);
  CHECK(bitwise_equal(pools[0], pools[1]));

  Graph g = random_graph(7, 0.4, 4, rng);
  Tensor h = gcn_encode(g, ps, cfg);
  auto m1 = extract_messages(h, ps, cfg);
  const auto perm = random_perm(g.num_nodes, rng);
  Tensor hp = gcn_encode(permute_graph(g, perm), ps, cfg);
  auto m2 = extract_messages(hp, ps, cfg);
  for (size_t i = 0; i < m1.size(); ++i) CHECK(max_abs_diff(m1[i], m2[i]) <= 1e-9);

  CHECK_THROWS_AS((void)message_pool(h, {m1[0]}, ps, cfg), std::invalid_argument);

  ModelConfig no_ctx = cfg;
  no_ctx.hyper.no_context_codes = true;
  auto mean_msgs = extract_messages(h, ps, no_ctx);
  Tensor mean = num::mean_rows(h);
  for (const auto& msg : mean_msgs) CHECK(bitwise_equal(msg, mean));

  ModelConfig m_one = cfg;
  m_one.hyper.m = 1;
  num::ParamStore ps_one = init_params(m_one, 5);
  auto one = extract_messages(h, ps_one, m_one);
  REQUIRE(one.size() == 1);
  CHECK(one[0].shape() == num::Shape{1, 16});
}

TEST_CASE("obfuscate: zero LSTM is exactly zero; outputs stay in (-1,1)") {
  ModelConfig cfg = tiny_config();
  num::ParamStore ps = init_params(cfg, 6);
  Rng rng(19);
  Graph g1 = random_graph(5, 0.5, 4, rng), g2 = random_graph(6, 0.5, 4, rng);
  Tensor h1 = gcn_encode(g1, ps, cfg), h2 = gcn_encode(g2, ps, cfg);
  auto msgs2 = extract_messages(h2, ps, cfg);
  auto pool1 = message_pool(h1, msgs2, ps, cfg);

  // Hand evaluation with all LSTM weights zero: every gate is 0.5, the
  // candidate is tanh(0) = 0, the cell stays 0, so h_m is exactly zero.
  num::ParamStore zeroed = ps;
  for (const char* gate : {"i", "f", "o", "c"}) {
    for (double& v : zeroed.at(std::string("lstm.w_") + gate).mutable_data()) v = 0.0;
    for (double& v : zeroed.at(std::string("lstm.b_") + gate).mutable_data()) v = 0.0;
  }
  Tensor o_zero = obfuscate(pool1, msgs2, zeroed, cfg);
  for (double v : o_zero.data()) CHECK(v == 0.0);

  Tensor o = obfuscate(pool1, msgs2, ps, cfg);
  for (double v : o.data()) {
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }

  // Identical inputs on both devices give identical obfuscated features.
  Tensor o_again = obfuscate(pool1, msgs2, ps, cfg);
  CHECK(bitwise_equal(o, o_again));

  CHECK_THROWS_AS((void)obfuscate(pool1, {msgs2[0]}, ps, cfg), std::invalid_argument);
}

TEST_CASE("predict_classification: identity, antipodal, orthogonal, zero guard") {
  Tensor u = Tensor::from_data({1, 3}, {0.3, -0.4, 0.5});
  Tensor mu = num::scale(u, -1.0);
  CHECK(std::abs(predict_classification(u, u).scalar_value() - 1.0) <= 1e-12);
  CHECK(std::abs(predict_classification(u, mu).scalar_value() + 1.0) <= 1e-12);

  Tensor ex = Tensor::from_data({1, 2}, {1.0, 0.0});
  Tensor ey = Tensor::from_data({1, 2}, {0.0, 1.0});
  CHECK(predict_classification(ex, ey).scalar_value() == 0.0);

  const size_t before = num::degenerate_event_count();
  Tensor zero = Tensor::from_data({1, 3}, {0.0, 0.0, 0.0});
  CHECK(predict_classification(zero, u).scalar_value() == 0.0);
  CHECK(num::degenerate_event_count() > before);
}

TEST_CASE("predict_regression: sigmoid(0) at zero weights, range, naive-loop oracle") {
  ModelConfig cfg = tiny_config();
  cfg.task = Task::regression;
  num::ParamStore ps = init_params(cfg, 7);
  Rng rng(23);
  std::vector<double> o1v(16), o2v(16);
  for (double& v : o1v) v = rng.uniform(-1, 1);
  for (double& v : o2v) v = rng.uniform(-1, 1);
  Tensor o1 = Tensor::from_data({1, 16}, o1v), o2 = Tensor::from_data({1, 16}, o2v);

  num::ParamStore zeroed = ps;
  for (const char* w : {"head.w0", "head.w1", "head.w2"})
    for (double& v : zeroed.at(w).mutable_data()) v = 0.0;
  CHECK(predict_regression(o1, o2, zeroed, cfg).scalar_value() == 0.5);

  const double y = predict_regression(o1, o2, ps, cfg).scalar_value();
  CHECK(y > 0.0);
  CHECK(y < 1.0);

  // Independent naive-loop evaluation of the same MLP.
  const int d = 16;
  std::vector<double> x(2 * d);
  std::copy(o1v.begin(), o1v.end(), x.begin());
  std::copy(o2v.begin(), o2v.end(), x.begin() + d);
  auto layer = [&](const std::vector<double>& in, const Tensor& w, bool relu_after) {
    const int rows = w.shape()[0], cols = w.shape()[1];
    std::vector<double> out(cols, 0.0);
    for (int j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (int i = 0; i < rows; ++i) acc += in[i] * w.at(i, j);
      out[j] = relu_after && acc < 0.0 ? 0.0 : acc;
    }
    return out;
  };
  auto a1 = layer(x, ps.at("head.w0"), true);
  auto a2 = layer(a1, ps.at("head.w1"), true);
  auto a3 = layer(a2, ps.at("head.w2"), false);
  const double expect = 1.0 / (1.0 + std::exp(-a3[0]));
  CHECK(y == doctest::Approx(expect).epsilon(1e-12));

  ModelConfig cls = tiny_config();
  num::ParamStore cls_ps = init_params(cls, 7);
  CHECK_THROWS_AS((void)predict_regression(o1, o2, cls_ps, cls), std::invalid_argument);
}

TEST_CASE("mse_loss: exact small cases and the classification label mapping") {
  auto scalar = [](double v) { return Tensor::scalar(v); };
  CHECK(mse_loss({scalar(0.7), scalar(-0.2)}, {0.7, -0.2}, Task::regression).scalar_value() == 0.0);
  // Classification maps label 0 to -1: (1 - (-1))^2 = 4.
  CHECK(mse_loss({scalar(1.0)}, {0.0}, Task::classification).scalar_value() == 4.0);
  CHECK(mse_loss({scalar(0.5), scalar(0.0)}, {1.0, 0.0}, Task::regression).scalar_value() ==
        doctest::Approx(0.125).epsilon(1e-15));
  CHECK_THROWS_AS((void)mse_loss({}, {}, Task::regression), std::invalid_argument);
}

TEST_CASE("sgnn_forward: identity score, permutation invariance, representation dim") {
  ModelConfig cfg = tiny_config(Family::sgnn);
  num::ParamStore ps = init_params(cfg, 8);
  Rng rng(29);
  Graph g = random_graph(8, 0.4, 4, rng);
  SgnnTrace t = sgnn_forward(g, g, ps, cfg, 0);
  CHECK(std::abs(t.score.scalar_value() - 1.0) <= 1e-12);
  CHECK(t.r1.shape() == num::Shape{1, 16});

  Graph g2 = random_graph(6, 0.4, 4, rng);
  const double base = sgnn_forward(g, g2, ps, cfg, 0).score.scalar_value();
  const auto perm = random_perm(g.num_nodes, rng);
  const double permuted = sgnn_forward(permute_graph(g, perm), g2, ps, cfg, 0).score.scalar_value();
  CHECK(std::abs(base - permuted) <= 1e-9);
}

TEST_CASE("ldp_noise: zero scale is identity, variance matches 2b^2, seeded") {
  Rng rng(31);
  Tensor rep = Tensor::from_data({1, 4}, {1.0, -2.0, 3.0, -4.0});
  Rng r0(1);
  Tensor same = ldp_noise(rep, 0.0, r0);
  for (size_t i = 0; i < 4; ++i) CHECK(same.data()[i] == rep.data()[i]);

  // Monte-Carlo against the analytic variance of Laplace(0, b).
  const double b = 0.7;
  const int n = 100000;
  Rng mc(12345);
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = mc.laplace(b);
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(var == doctest::Approx(2.0 * b * b).epsilon(0.05));

  Rng ra(77), rb(77);
  Tensor na = ldp_noise(rep, 1.0, ra), nb = ldp_noise(rep, 1.0, rb);
  CHECK(bitwise_equal(na, nb));

  Rng rc(78);
  CHECK_THROWS_AS((void)ldp_noise(rep, -0.1, rc), std::invalid_argument);
}

TEST_CASE("nodematch_forward: identity score and permutation invariance") {
  ModelConfig cfg = tiny_config(Family::nodematch);
  num::ParamStore ps = init_params(cfg, 9);
  Rng rng(37);
  Graph g = random_graph(7, 0.4, 4, rng);
  NodeMatchTrace t = nodematch_forward(g, g, ps, cfg);
  CHECK(std::abs(t.score.scalar_value() - 1.0) <= 1e-12);
  CHECK(t.h1.shape() == num::Shape{7, 16});
  CHECK(t.r1.shape() == num::Shape{1, 16});

  Graph g2 = random_graph(5, 0.4, 4, rng);
  const double base = nodematch_forward(g, g2, ps, cfg).score.scalar_value();
  const auto perm = random_perm(g.num_nodes, rng);
  const double permuted =
      nodematch_forward(permute_graph(g, perm), g2, ps, cfg).score.scalar_value();
  CHECK(std::abs(base - permuted) <= 1e-9);
}

TEST_CASE("ppgm invariants: symmetry (exact), permutation (1e-9), identity (1e-12)") {
  ModelConfig cfg = tiny_config();
  num::ParamStore ps = init_params(cfg, 10);
  Rng rng(41);
  for (int trial = 0; trial < 25; ++trial) {
    Graph g1 = random_graph(2 + rng.uniform_int(7), 0.4, 4, rng, "a");
    Graph g2 = random_graph(2 + rng.uniform_int(7), 0.4, 4, rng, "b");

    const double s12 = ppgm_forward(g1, g2, ps, cfg).score.scalar_value();
    const double s21 = ppgm_forward(g2, g1, ps, cfg).score.scalar_value();
    CHECK(s12 == s21);

    const auto perm = random_perm(g1.num_nodes, rng);
    const double sp = ppgm_forward(permute_graph(g1, perm), g2, ps, cfg).score.scalar_value();
    CHECK(std::abs(s12 - sp) <= 1e-9);

    const double sid = ppgm_forward(g1, g1, ps, cfg).score.scalar_value();
    CHECK(std::abs(sid - 1.0) <= 1e-12);
  }
}

TEST_CASE("ablation flags change exactly the named layer") {
  ModelConfig cfg = tiny_config();
  num::ParamStore ps = init_params(cfg, 11);
  Rng rng(43);
  Graph g1 = random_graph(6, 0.4, 4, rng, "a");
  Graph g2 = random_graph(5, 0.4, 4, rng, "b");
  PpgmTrace base = ppgm_forward(g1, g2, ps, cfg);

  SUBCASE("no_obfuscation swaps only the fusion inputs") {
    ModelConfig ab = cfg;
    ab.hyper.no_obfuscation = true;
    PpgmTrace t = ppgm_forward(g1, g2, ps, ab);
    CHECK(bitwise_equal(t.h1, base.h1));
    for (size_t i = 0; i < t.msgs1.size(); ++i) CHECK(bitwise_equal(t.msgs1[i], base.msgs1[i]));
    for (size_t i = 0; i < t.pool1.size(); ++i) CHECK(bitwise_equal(t.pool1[i], base.pool1[i]));
    CHECK(!bitwise_equal(t.o1, base.o1));
  }
  SUBCASE("no_context_codes changes message extraction only") {
    ModelConfig ab = cfg;
    ab.hyper.no_context_codes = true;
    PpgmTrace t = ppgm_forward(g1, g2, ps, ab);
    CHECK(bitwise_equal(t.h1, base.h1));
    CHECK(!bitwise_equal(t.msgs1[0], base.msgs1[0]));
    CHECK(bitwise_equal(t.msgs1[0], num::mean_rows(base.h1)));
  }
  SUBCASE("no_ng_matching changes the pooling layer only") {
    ModelConfig ab = cfg;
    ab.hyper.no_ng_matching = true;
    PpgmTrace t = ppgm_forward(g1, g2, ps, ab);
    CHECK(bitwise_equal(t.h1, base.h1));
    for (size_t i = 0; i < t.msgs1.size(); ++i) CHECK(bitwise_equal(t.msgs1[i], base.msgs1[i]));
    CHECK(!bitwise_equal(t.pool1[0], base.pool1[0]));
    CHECK(bitwise_equal(t.pool1[0], num::mean_rows(base.h1)));
  }
}

TEST_CASE("full ppgm gradient check against central finite differences") {
  ModelConfig cfg = tiny_config();
  num::ParamStore ps = init_params(cfg, 12);
  Rng rng(47);
  Graph a1 = random_graph(5, 0.5, 4, rng, "a1"), a2 = random_graph(5, 0.5, 4, rng, "a2");
  Graph b1 = random_graph(5, 0.5, 4, rng, "b1"), b2 = random_graph(5, 0.5, 4, rng, "b2");
  const std::vector<double> labels = {1.0, 0.0};

  auto build = [&] {
    std::vector<Tensor> preds = {ppgm_forward(a1, a2, ps, cfg).score,
                                 ppgm_forward(b1, b2, ps, cfg).score};
    return mse_loss(preds, labels, Task::classification);
  };
  std::vector<Tensor> leaves;
  for (auto& [name, t] : ps) leaves.push_back(t);
  auto res = oracles::fd_gradient_check(build, leaves, 1e-6, 1e-4, 1e-7);
  INFO(res.worst_at);
  CHECK(res.worst_margin <= 0.0);
}

TEST_CASE("regression head gradient check") {
  ModelConfig cfg = tiny_config();
  cfg.task = Task::regression;
  cfg.hyper.m = 1;
  num::ParamStore ps = init_params(cfg, 13);
  Rng rng(53);
  Graph g1 = random_graph(4, 0.5, 4, rng, "r1"), g2 = random_graph(5, 0.5, 4, rng, "r2");
  auto build = [&] {
    return mse_loss({ppgm_forward(g1, g2, ps, cfg).score}, {0.4}, Task::regression);
  };
  std::vector<Tensor> leaves = {ps.at("head.w0"), ps.at("head.w1"), ps.at("head.w2")};
  auto res = oracles::fd_gradient_check(build, leaves, 1e-6, 1e-4, 1e-7);
  INFO(res.worst_at);
  CHECK(res.worst_margin <= 0.0);
}

TEST_CASE("init_params is deterministic and family-scoped") {
  ModelConfig cfg = tiny_config();
  num::ParamStore a = init_params(cfg, 99), b = init_params(cfg, 99);
  REQUIRE(a.size() == b.size());
  for (auto& [name, t] : a) CHECK(bitwise_equal(t, b.at(name)));

  num::ParamStore sg = init_params(tiny_config(Family::sgnn), 99);
  CHECK(sg.count("gcn.w0") == 1);
  CHECK(sg.count("ctx.code.0") == 0);
  CHECK(sg.count("lstm.w_i") == 0);
}
