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

#include "ppgm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "ppgm/adam.hpp"
#include "ppgm/attack.hpp"
#include "ppgm/protocol.hpp"
#include "ppgm/rng.hpp"
#include "ppgm/serial.hpp"

namespace ppgm {

using nlohmann::json;
using num::Tensor;

namespace {

/// Shadow fraction used by the sweep drivers: the default 10% rule applied
/// to a desk-scale split leaves too few graphs to train a stable attacker,
/// so sweeps widen it.
constexpr double kSweepShadowFraction = 0.5;
/// Desk-scale training budget for m-sweep points (epoch sweeps define
/// their own grid).
constexpr int kSweepEpochs = 30;

json hyper_to_json(const ModelConfig& cfg) {
  const HyperParams& h = cfg.hyper;
  return json{{"task", task_name(cfg.task)},
              {"feature_dim", cfg.feature_dim},
              {"d", h.d},
              {"layers", h.layers},
              {"m", h.m},
              {"heads", h.heads},
              {"lr", h.lr},
              {"epochs", h.epochs},
              {"batch", h.batch},
              {"no_obfuscation", h.no_obfuscation},
              {"no_context_codes", h.no_context_codes},
              {"no_ng_matching", h.no_ng_matching},
              {"ldp_scale", h.ldp_scale}};
}

ModelConfig config_from_json(const std::string& family, const json& hyper) {
  ModelConfig cfg;
  cfg.family = family_from_name(family);
  cfg.task = task_from_name(hyper.at("task").get<std::string>());
  cfg.feature_dim = hyper.at("feature_dim").get<int>();
  HyperParams& h = cfg.hyper;
  h.d = hyper.at("d").get<int>();
  h.layers = hyper.at("layers").get<int>();
  h.m = hyper.at("m").get<int>();
  h.heads = hyper.at("heads").get<int>();
  h.lr = hyper.at("lr").get<double>();
  h.epochs = hyper.at("epochs").get<int>();
  h.batch = hyper.at("batch").get<int>();
  h.no_obfuscation = hyper.at("no_obfuscation").get<bool>();
  h.no_context_codes = hyper.at("no_context_codes").get<bool>();
  h.no_ng_matching = hyper.at("no_ng_matching").get<bool>();
  h.ldp_scale = hyper.at("ldp_scale").get<double>();
  return cfg;
}

double evaluate_params(const num::ParamStore& params, const ModelConfig& cfg, const Dataset& ds,
                       Split split, uint64_t eval_seed) {
  const auto& pairs = ds.split(split);
  if (pairs.empty())
    throw std::invalid_argument(std::string("evaluate: split '") +
                                kSplitNames[static_cast<size_t>(split)] + "' has no pairs");
  std::vector<double> scores;
  scores.reserve(pairs.size());
  const uint64_t split_seed = mix_seed(eval_seed, 0x100 + static_cast<uint64_t>(split));
  for (size_t i = 0; i < pairs.size(); ++i) {
    const GraphPair& p = pairs[i];
    scores.push_back(run_pairwise_session(ds.graph(p.g1), ds.graph(p.g2), params, cfg,
                                          mix_seed(split_seed, i))
                         .score);
  }
  if (ds.task == Task::classification) {
    std::vector<int> labels(pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i) labels[i] = pairs[i].y == 1.0 ? 1 : 0;
    return compute_auc(scores, labels);
  }
  double sq = 0.0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    const double d = scores[i] - pairs[i].y;
    sq += d * d;
  }
  return sq / static_cast<double>(pairs.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  json params = json::object();
  for (const auto& [name, t] : c.params) {
    params[name] = json{{"shape", t.shape()},
                        {"data_b64", serial::doubles_to_b64(
                                         std::vector<double>(t.data().begin(), t.data().end()))}};
  }
  const json j{{"version", c.version},
               {"family", family_name(c.config.family)},
               {"hyper", hyper_to_json(c.config)},
               {"params", std::move(params)},
               {"meta",
                {{"seed", c.meta.seed},
                 {"epochs_completed", c.meta.epochs_completed},
                 {"best_val_metric", c.meta.best_val_metric}}}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  in >> j;
  Checkpoint c;
  c.version = j.at("version").get<int>();
  if (c.version != 1)
    throw std::runtime_error("checkpoint " + path.string() + ": unsupported version " +
                             std::to_string(c.version));
  c.config = config_from_json(j.at("family").get<std::string>(), j.at("hyper"));
  c.meta.seed = j.at("meta").at("seed").get<uint64_t>();
  c.meta.epochs_completed = j.at("meta").at("epochs_completed").get<int>();
  c.meta.best_val_metric = j.at("meta").at("best_val_metric").get<double>();

  // Shapes are dictated by the hyperparameters; reject any tensor that
  // disagrees, naming it.
  const num::ParamStore expected = init_params(c.config, 0);
  for (const auto& [name, spec] : j.at("params").items()) {
    auto it = expected.find(name);
    if (it == expected.end())
      throw std::runtime_error("checkpoint tensor '" + name + "' is not part of a " +
                               family_name(c.config.family) + " model");
    const num::Shape shape = spec.at("shape").get<num::Shape>();
    if (shape != it->second.shape())
      throw std::runtime_error("checkpoint tensor '" + name + "' has shape " +
                               num::shape_str(shape) + ", hyperparameters require " +
                               num::shape_str(it->second.shape()));
    std::vector<double> data = serial::b64_to_doubles(spec.at("data_b64").get<std::string>());
    if (data.size() != it->second.numel())
      throw std::runtime_error("checkpoint tensor '" + name + "' carries " +
                               std::to_string(data.size()) + " values, shape needs " +
                               std::to_string(it->second.numel()));
    c.params.emplace(name, Tensor::parameter(shape, std::move(data), name, false));
  }
  for (const auto& [name, t] : expected)
    if (!c.params.count(name))
      throw std::runtime_error("checkpoint is missing tensor '" + name + "'");
  return c;
}

bool checkpoints_equal(const Checkpoint& a, const Checkpoint& b) {
  if (a.version != b.version || a.meta.seed != b.meta.seed ||
      a.meta.epochs_completed != b.meta.epochs_completed ||
      a.meta.best_val_metric != b.meta.best_val_metric)
    return false;
  if (hyper_to_json(a.config) != hyper_to_json(b.config) ||
      a.config.family != b.config.family || a.params.size() != b.params.size())
    return false;
  for (const auto& [name, t] : a.params) {
    auto it = b.params.find(name);
    if (it == b.params.end() || it->second.shape() != t.shape()) return false;
    for (size_t i = 0; i < t.numel(); ++i)
      if (t.data()[i] != it->second.data()[i]) return false;
  }
  return true;
}

uint64_t model_size_bytes(const Checkpoint& c) {
  uint64_t count = 0;
  for (const auto& [name, t] : c.params) count += t.numel();
  return count * 4;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

int batches_per_epoch(int pairs, int batch) {
  if (pairs < 0 || batch < 1) throw std::invalid_argument("batches_per_epoch: bad arguments");
  return (pairs + batch - 1) / batch;
}

std::pair<Checkpoint, RunRecord> train_gsl(const Dataset& ds, const ModelConfig& cfg,
                                           uint64_t seed, const TrainOptions& opts) {
  validate_config(cfg);
  if (cfg.task != ds.task)
    throw std::invalid_argument("train_gsl: dataset task does not match the model head");
  if (cfg.feature_dim != ds.feature_dim)
    throw std::invalid_argument("train_gsl: feature dim mismatch");
  const auto& train_pairs = ds.split(Split::train);
  if (train_pairs.empty()) throw std::invalid_argument("train_gsl: empty training split");

  const auto t0 = std::chrono::steady_clock::now();

  num::ParamStore params = init_params(cfg, seed);
  num::AdamState adam;
  adam.hyper.lr = cfg.hyper.lr;
  Rng shuffle_rng(mix_seed(seed, 0x7E));

  // The Laplace channel noise is a deployment-time mechanism; the training
  // loss is computed on the centralized forward pass without it. Validation
  // goes through the distributed path, noise included.
  ModelConfig loss_cfg = cfg;
  loss_cfg.hyper.ldp_scale = 0.0;

  RunRecord record;
  const bool maximize = cfg.task == Task::classification;
  double best_metric = maximize ? -std::numeric_limits<double>::infinity()
                                : std::numeric_limits<double>::infinity();
  num::ParamStore best_params = clone_params(params, false);
  int best_epoch = 0;

  std::vector<size_t> order(train_pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  auto next_snapshot = opts.snapshot_epochs.begin();
  for (int epoch = 1; epoch <= cfg.hyper.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.hyper.batch)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.hyper.batch));
      std::vector<Tensor> preds;
      std::vector<double> labels;
      preds.reserve(end - start);
      for (size_t k = start; k < end; ++k) {
        const GraphPair& p = train_pairs[order[k]];
        preds.push_back(
            model_score(ds.graph(p.g1), ds.graph(p.g2), params, loss_cfg, 0));
        labels.push_back(p.y);
      }
      const Tensor loss = mse_loss(preds, labels, cfg.task);
      loss_sum += loss.scalar_value() * static_cast<double>(end - start);
      num::GradMap grads = num::backward(loss);
      num::adam_step(params, grads, adam);
    }
    record.train_loss.push_back(loss_sum / static_cast<double>(order.size()));

    const num::ParamStore frozen = clone_params(params, false);
    const double val = evaluate_params(frozen, cfg, ds, Split::val, mix_seed(seed, 0xE7A + epoch));
    record.val_metric.push_back(val);
    if (maximize ? val > best_metric : val < best_metric) {
      best_metric = val;
      best_params = frozen;
      best_epoch = epoch;
    }

    while (next_snapshot != opts.snapshot_epochs.end() && *next_snapshot == epoch) {
      if (opts.on_snapshot) {
        Checkpoint snap{1, cfg, best_params, {seed, epoch, best_metric}};
        opts.on_snapshot(epoch, snap);
      }
      ++next_snapshot;
    }
  }

  if (cfg.hyper.epochs == 0) {
    // Freshly initialized model: still a valid frozen checkpoint.
    best_metric = evaluate_params(best_params, cfg, ds, Split::val, mix_seed(seed, 0xE7A));
  }

  Checkpoint ckpt{1, cfg, best_params, {seed, cfg.hyper.epochs, best_metric}};
  record.test_metric = evaluate_gsl(ckpt, ds, Split::test);
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  (void)best_epoch;
  return {std::move(ckpt), std::move(record)};
}

double evaluate_gsl(const Checkpoint& c, const Dataset& ds, Split split) {
  if (c.config.task != ds.task)
    throw std::invalid_argument("evaluate_gsl: dataset task does not match the checkpoint");
  return evaluate_params(c.params, c.config, ds, split, c.meta.seed);
}

// ---------------------------------------------------------------------------
// Run records
// ---------------------------------------------------------------------------

bool run_records_equal(const RunRecord& a, const RunRecord& b) {
  return a.train_loss == b.train_loss && a.val_metric == b.val_metric &&
         a.test_metric == b.test_metric;
}

void save_run_record(const RunRecord& r, const ModelConfig& cfg, uint64_t seed,
                     const std::filesystem::path& jsonl_path) {
  std::ofstream out(jsonl_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + jsonl_path.string() + " for writing");
  for (size_t i = 0; i < r.train_loss.size(); ++i)
    out << json{{"epoch", i + 1},
                {"train_loss", r.train_loss[i]},
                {"val_metric", r.val_metric[i]}}
               .dump()
        << '\n';
  out << json{{"test_metric", r.test_metric},
              {"wall_seconds", r.wall_seconds},
              {"seed", seed},
              {"family", family_name(cfg.family)}}
             .dump()
      << '\n';
}

std::string render_run_summary(const RunRecord& r, const ModelConfig& cfg, uint64_t seed) {
  std::ostringstream out;
  const char* metric = cfg.task == Task::classification ? "val AUC" : "val MSE";
  out << "model " << family_name(cfg.family) << "  seed " << seed << "  epochs "
      << r.train_loss.size() << "\n";
  out << "epoch  train_loss  " << metric << "\n";
  for (size_t i = 0; i < r.train_loss.size(); ++i) {
    char line[96];
    std::snprintf(line, sizeof(line), "%5zu  %10.6f  %8.4f\n", i + 1, r.train_loss[i],
                  r.val_metric[i]);
    out << line;
  }
  char tail[64];
  std::snprintf(tail, sizeof(tail), "test metric %.4f  (%.1fs)\n", r.test_metric, r.wall_seconds);
  out << tail;
  return out.str();
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

const char* sweep_kind_name(SweepKind k) { return k == SweepKind::m ? "m" : "epochs"; }

SweepKind sweep_kind_from_name(const std::string& name) {
  if (name == "m") return SweepKind::m;
  if (name == "epochs") return SweepKind::epochs;
  throw std::invalid_argument("unknown sweep kind '" + name + "' (expected m|epochs)");
}

namespace {

double attack_test_auc(const Checkpoint& ckpt, const Dataset& ds, uint64_t seed) {
  return run_attack(ckpt, ds, kSweepShadowFraction, kFamilyProperty, InterceptPolicy::all, seed)
      .test_auc;
}

}  // namespace

std::vector<SweepRow> sweep(const Dataset& ds, Family family, SweepKind kind,
                            const std::vector<uint64_t>& seeds, int jobs) {
  if (ds.task != Task::classification)
    throw std::invalid_argument("sweep: needs a classification dataset");
  if (seeds.empty()) throw std::invalid_argument("sweep: need at least one seed");

  const std::vector<int> points =
      kind == SweepKind::m ? std::vector<int>{1, 2, 4, 8, 16} : std::vector<int>{20, 40, 60, 80, 100};

  struct Job {
    int point;
    uint64_t seed;
  };
  std::vector<Job> jobs_todo;
  if (kind == SweepKind::m) {
    for (int point : points)
      for (uint64_t seed : seeds) jobs_todo.push_back({point, seed});
  } else {
    for (uint64_t seed : seeds) jobs_todo.push_back({0, seed});  // one trajectory per seed
  }

  std::vector<std::vector<SweepRow>> results(jobs_todo.size());
  auto run_job = [&](size_t index) {
    const Job job = jobs_todo[index];
    std::vector<SweepRow> rows;
    if (kind == SweepKind::m) {
      ModelConfig cfg;
      cfg.family = family;
      cfg.task = ds.task;
      cfg.feature_dim = ds.feature_dim;
      cfg.hyper.m = job.point;
      cfg.hyper.epochs = kSweepEpochs;
      auto [ckpt, record] = train_gsl(ds, cfg, job.seed);
      rows.push_back({kind, job.point, job.seed, record.test_metric,
                      attack_test_auc(ckpt, ds, job.seed)});
    } else {
      // One 100-epoch trajectory; the best-so-far checkpoint after E epochs
      // is exactly what an E-epoch run with the same seed would select.
      ModelConfig cfg;
      cfg.family = family;
      cfg.task = ds.task;
      cfg.feature_dim = ds.feature_dim;
      cfg.hyper.epochs = points.back();
      std::vector<std::pair<int, Checkpoint>> snaps;
      TrainOptions opts;
      opts.snapshot_epochs = points;
      opts.on_snapshot = [&](int epoch, const Checkpoint& c) { snaps.emplace_back(epoch, c); };
      (void)train_gsl(ds, cfg, job.seed, opts);
      for (auto& [epoch, ckpt] : snaps)
        rows.push_back({kind, epoch, job.seed, evaluate_gsl(ckpt, ds, Split::test),
                        attack_test_auc(ckpt, ds, job.seed)});
    }
    results[index] = std::move(rows);
  };

  if (jobs <= 1) {
    for (size_t i = 0; i < jobs_todo.size(); ++i) run_job(i);
  } else {
    std::vector<std::future<void>> futures;
    size_t next = 0;
    while (next < jobs_todo.size()) {
      futures.clear();
      for (int j = 0; j < jobs && next < jobs_todo.size(); ++j, ++next)
        futures.push_back(std::async(std::launch::async, run_job, next));
      for (auto& f : futures) f.get();
    }
  }

  std::vector<SweepRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return a.point != b.point ? a.point < b.point : a.seed < b.seed;
  });
  return rows;
}

std::string render_sweep_table(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "point  seed        task_auc  attack_auc\n";
  for (const auto& r : rows) {
    char line[96];
    std::snprintf(line, sizeof(line), "%5d  %-10llu  %8.4f  %10.4f\n", r.point,
                  static_cast<unsigned long long>(r.seed), r.task_auc, r.attack_auc);
    out << line;
  }
  // mean +/- std per point
  std::vector<int> points;
  for (const auto& r : rows)
    if (points.empty() || points.back() != r.point) points.push_back(r.point);
  out << "\npoint  task_auc(mean+/-std)  attack_auc(mean+/-std)\n";
  for (int point : points) {
    std::vector<double> task, attack;
    for (const auto& r : rows)
      if (r.point == point) {
        task.push_back(r.task_auc);
        attack.push_back(r.attack_auc);
      }
    auto stats = [](const std::vector<double>& v) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      var = v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0.0;
      return std::pair<double, double>{mean, std::sqrt(var)};
    };
    const auto [tm, ts] = stats(task);
    const auto [am, as] = stats(attack);
    char line[96];
    std::snprintf(line, sizeof(line), "%5d  %8.4f +/- %6.4f   %8.4f +/- %6.4f\n", point, tm, ts,
                  am, as);
    out << line;
  }
  return out.str();
}

void write_sweep_report(const std::vector<SweepRow>& rows, const std::filesystem::path& jsonl_path,
                        const std::filesystem::path& table_path) {
  {
    std::ofstream out(jsonl_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + jsonl_path.string() + " for writing");
    for (const auto& r : rows)
      out << json{{"kind", sweep_kind_name(r.kind)},
                  {"point", r.point},
                  {"seed", r.seed},
                  {"task_auc", r.task_auc},
                  {"attack_auc", r.attack_auc}}
                 .dump()
          << '\n';
  }
  std::ofstream table(table_path, std::ios::binary);
  if (!table) throw std::runtime_error("cannot open " + table_path.string() + " for writing");
  table << render_sweep_table(rows);
}

}  // namespace ppgm
