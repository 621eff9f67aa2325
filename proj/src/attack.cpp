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

#include "ppgm/attack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "ppgm/adam.hpp"
#include "ppgm/protocol.hpp"
#include "ppgm/rng.hpp"

namespace ppgm {

using nlohmann::json;
using num::Tensor;

AttackSurface classify_attack_surface(Family family) {
  switch (family) {
    case Family::ppgm:
      return {{"G", "O"}, false, true};
    case Family::sgnn:
    case Family::sgnn_ldp:
      return {{"G"}, false, true};
    case Family::nodematch:
      return {{"N", "G"}, true, true};
  }
  throw std::invalid_argument("classify_attack_surface: unknown family");
}

std::vector<std::string> build_shadow_set(const Dataset& ds, double fraction, uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw std::invalid_argument("build_shadow_set: fraction must be in (0,1], got " +
                                std::to_string(fraction));
  std::vector<std::string> ids = ds.split_graph_ids(Split::train);
  if (ids.empty()) throw std::invalid_argument("build_shadow_set: empty training split");
  const size_t count = std::min(
      ids.size(),
      static_cast<size_t>(std::max<long long>(1, std::llround(fraction * static_cast<double>(ids.size())))));
  Rng rng(mix_seed(seed, 0x5Ad));
  rng.shuffle(ids);
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  return ids;
}

const char* policy_name(InterceptPolicy p) {
  return p == InterceptPolicy::all ? "all" : "uniform-one";
}

InterceptPolicy policy_from_name(const std::string& name) {
  if (name == "all") return InterceptPolicy::all;
  if (name == "uniform-one" || name == "uniform_one") return InterceptPolicy::uniform_one;
  throw std::invalid_argument("unknown intercept policy '" + name + "'");
}

namespace {

/// Global binary encoding of the property values (sorted order), so train
/// and evaluation samples share one label convention.
std::pair<std::string, std::string> property_values(const Dataset& ds, const std::string& property) {
  std::set<std::string> values;
  for (const Graph& g : ds.graphs) {
    auto it = g.properties.find(property);
    if (it == g.properties.end())
      throw std::invalid_argument("collect_attackable: graph " + g.id + " lacks property '" +
                                  property + "'");
    values.insert(it->second);
  }
  if (values.size() != 2)
    throw std::invalid_argument("collect_attackable: property '" + property + "' has " +
                                std::to_string(values.size()) + " values, the attacker is binary");
  auto it = values.begin();
  const std::string lo = *it++;
  return {lo, *it};
}

std::vector<double> maxpool_rows(const std::vector<std::vector<double>>& rows) {
  std::vector<double> out(rows.front().size(), -std::numeric_limits<double>::infinity());
  for (const auto& row : rows)
    for (size_t j = 0; j < row.size(); ++j) out[j] = std::max(out[j], row[j]);
  return out;
}

}  // namespace

std::vector<AttackSample> collect_attackable(const Checkpoint& ckpt,
                                             const std::vector<std::string>& ids,
                                             const Dataset& ds, InterceptPolicy policy,
                                             const std::string& property, uint64_t seed) {
  if (ckpt.params.empty())
    throw std::invalid_argument("collect_attackable: checkpoint holds no parameters (untrained model)");
  if (ids.empty()) throw std::invalid_argument("collect_attackable: empty graph id set");
  const auto [value0, value1] = property_values(ds, property);

  Rng rng(mix_seed(seed, 0xC0));
  std::vector<AttackSample> samples;
  for (size_t i = 0; i < ids.size(); ++i) {
    const std::string& id = ids[i];
    // Partner drawn from the same pool; sessions are what the deployed
    // model would run, one per listed graph.
    std::string partner = id;
    if (ids.size() > 1)
      while (partner == id) partner = ids[static_cast<size_t>(rng.uniform_int(static_cast<int>(ids.size())))];
    const Graph& g = ds.graph(id);
    const Graph& pg = ds.graph(partner);
    const SessionResult session =
        run_pairwise_session(g, pg, ckpt.params, ckpt.config, mix_seed(seed, 0xE0 + i));

    const std::string& prop = g.properties.at(property);
    const int label = prop == value1 ? 1 : 0;
    auto add = [&](const std::string& kind, std::vector<double> rep) {
      samples.push_back({std::move(rep), label, kind, id});
    };

    // Only device A's emissions describe graph `id`; the partner's traffic
    // belongs to the partner's own collection pass.
    std::vector<InterceptedVec> own;
    for (auto& v : intercept_all(session.transcript))
      if (v.sender == "A") own.push_back(std::move(v));

    switch (ckpt.config.family) {
      case Family::ppgm: {
        if (policy == InterceptPolicy::uniform_one) {
          const auto& pick = own[static_cast<size_t>(rng.uniform_int(static_cast<int>(own.size())))];
          add(pick.tag, pick.values);
        } else {
          for (const auto& v : own) add(v.tag, v.values);
        }
        break;
      }
      case Family::sgnn:
      case Family::sgnn_ldp: {
        for (const auto& v : own) add(v.tag, v.values);
        break;
      }
      case Family::nodematch: {
        // Node representations pooled and concatenated with the graph
        // representation: one 2d sample per graph.
        std::vector<std::vector<double>> node_rows;
        std::vector<double> graph_rep;
        for (const auto& v : own) {
          if (v.tag == "node_rep") node_rows.push_back(v.values);
          if (v.tag == "graph_rep") graph_rep = v.values;
        }
        std::vector<double> rep = maxpool_rows(node_rows);
        rep.insert(rep.end(), graph_rep.begin(), graph_rep.end());
        add("node_concat", std::move(rep));
        break;
      }
    }
  }
  return samples;
}

// ---------------------------------------------------------------------------
// Attacker
// ---------------------------------------------------------------------------

namespace {

constexpr int kAttackerHidden1 = 128;
constexpr int kAttackerHidden2 = 64;
constexpr int kAttackerEpochs = 200;
constexpr double kAttackerLr = 1e-3;

Tensor attacker_logits(const num::ParamStore& net, const Tensor& x) {
  Tensor a = num::relu(num::add_rowvec(num::matmul(x, net.at("att.w0")), net.at("att.b0")));
  a = num::relu(num::add_rowvec(num::matmul(a, net.at("att.w1")), net.at("att.b1")));
  return num::add_rowvec(num::matmul(a, net.at("att.w2")), net.at("att.b2"));
}

Tensor sample_matrix(const std::vector<AttackSample>& samples, int input_dim) {
  std::vector<double> data;
  data.reserve(samples.size() * static_cast<size_t>(input_dim));
  for (const auto& s : samples) {
    if (static_cast<int>(s.representation.size()) != input_dim)
      throw std::invalid_argument("attacker: representation dims differ (" +
                                  std::to_string(s.representation.size()) + " vs " +
                                  std::to_string(input_dim) + ")");
    data.insert(data.end(), s.representation.begin(), s.representation.end());
  }
  return Tensor::from_data({static_cast<int>(samples.size()), input_dim}, std::move(data));
}

}  // namespace

AttackerParams train_attacker(const std::vector<AttackSample>& samples, uint64_t seed) {
  int positives = 0;
  for (const auto& s : samples) positives += s.label;
  const int negatives = static_cast<int>(samples.size()) - positives;
  if (positives < 2 || negatives < 2)
    throw std::invalid_argument("train_attacker: need at least two samples per class, got " +
                                std::to_string(positives) + " positive / " +
                                std::to_string(negatives) + " negative");

  const int input_dim = static_cast<int>(samples.front().representation.size());
  Rng rng(mix_seed(seed, 0xAFAF));
  AttackerParams attacker;
  attacker.input_dim = input_dim;
  auto add_layer = [&](const std::string& idx, int rows, int cols) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    std::vector<double> w(static_cast<size_t>(rows) * cols);
    for (double& v : w) v = rng.uniform(-bound, bound);
    attacker.net.emplace("att.w" + idx, Tensor::parameter({rows, cols}, std::move(w), "att.w" + idx));
    attacker.net.emplace("att.b" + idx,
                         Tensor::parameter({1, cols}, std::vector<double>(cols, 0.0), "att.b" + idx));
  };
  add_layer("0", input_dim, kAttackerHidden1);
  add_layer("1", kAttackerHidden1, kAttackerHidden2);
  add_layer("2", kAttackerHidden2, 1);

  const Tensor x = sample_matrix(samples, input_dim);
  std::vector<double> y(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) y[i] = samples[i].label;
  const Tensor labels = Tensor::from_data({static_cast<int>(samples.size()), 1}, y);

  num::AdamState adam;
  adam.hyper.lr = kAttackerLr;
  for (int epoch = 0; epoch < kAttackerEpochs; ++epoch) {
    // Binary cross-entropy from logits: mean(softplus(z) - y*z).
    const Tensor z = attacker_logits(attacker.net, x);
    const Tensor loss = num::mean_all(num::sub(num::softplus(z), num::elementwise_mul(labels, z)));
    num::GradMap grads = num::backward(loss);
    num::adam_step(attacker.net, grads, adam);
  }
  return attacker;
}

std::vector<double> attacker_scores(const AttackerParams& attacker,
                                    const std::vector<AttackSample>& samples) {
  if (samples.empty()) return {};
  const Tensor x = sample_matrix(samples, attacker.input_dim);
  const Tensor p = num::sigmoid(attacker_logits(attacker.net, x));
  return {p.data().begin(), p.data().end()};
}

double compute_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw std::invalid_argument("compute_auc: scores and labels must be non-empty and equal-sized");
  size_t n_pos = 0;
  for (int l : labels) n_pos += l == 1 ? 1 : 0;
  const size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("compute_auc: both classes must be present");

  // Mann-Whitney with average ranks for ties.
  std::vector<size_t> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  const double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

AttackReport run_attack(const Checkpoint& ckpt, const Dataset& ds, double shadow_fraction,
                        const std::string& property, InterceptPolicy policy, uint64_t seed) {
  const std::vector<std::string> shadow = build_shadow_set(ds, shadow_fraction, seed);
  const std::vector<std::string> val_ids = ds.split_graph_ids(Split::val);
  const std::vector<std::string> test_ids = ds.split_graph_ids(Split::test);
  for (const auto& id : val_ids)
    if (std::binary_search(shadow.begin(), shadow.end(), id))
      throw std::logic_error("run_attack: shadow set leaks into validation graphs");
  for (const auto& id : test_ids)
    if (std::binary_search(shadow.begin(), shadow.end(), id))
      throw std::logic_error("run_attack: shadow set leaks into test graphs");

  const auto train_samples = collect_attackable(ckpt, shadow, ds, policy, property, mix_seed(seed, 1));
  const AttackerParams attacker = train_attacker(train_samples, mix_seed(seed, 2));

  auto evaluate = [&](const std::vector<std::string>& ids, uint64_t collect_seed) {
    const auto samples = collect_attackable(ckpt, ids, ds, policy, property, collect_seed);
    std::vector<int> labels(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) labels[i] = samples[i].label;
    return compute_auc(attacker_scores(attacker, samples), labels);
  };

  AttackReport report;
  report.model = family_name(ckpt.config.family);
  report.property = property;
  report.policy = policy_name(policy);
  report.seed = seed;
  report.n_train_samples = static_cast<int>(train_samples.size());
  report.val_auc = evaluate(val_ids, mix_seed(seed, 3));
  report.test_auc = evaluate(test_ids, mix_seed(seed, 4));
  return report;
}

void write_attack_report(const AttackReport& report, const std::filesystem::path& path) {
  const json j{{"model", report.model},
               {"property", report.property},
               {"policy", report.policy},
               {"seed", report.seed},
               {"val_auc", report.val_auc},
               {"test_auc", report.test_auc},
               {"n_train_samples", report.n_train_samples}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

AttackReport read_attack_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  in >> j;
  AttackReport r;
  r.model = j.at("model").get<std::string>();
  r.property = j.at("property").get<std::string>();
  r.policy = j.at("policy").get<std::string>();
  r.seed = j.at("seed").get<uint64_t>();
  r.val_auc = j.at("val_auc").get<double>();
  r.test_auc = j.at("test_auc").get<double>();
  r.n_train_samples = j.at("n_train_samples").get<int>();
  return r;
}

}  // namespace ppgm
