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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ppgm/dataset.hpp"
#include "ppgm/model.hpp"

namespace ppgm {

struct Checkpoint {
  int version = 1;
  ModelConfig config;
  num::ParamStore params;
  struct Meta {
    uint64_t seed = 0;
    int epochs_completed = 0;
    double best_val_metric = 0.0;  // AUC for classification, MSE for regression
  } meta;
};

/// Structured text document with base64 little-endian 64-bit parameter
/// payloads; load(save(c)) is bit-exact.
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
bool checkpoints_equal(const Checkpoint& a, const Checkpoint& b);

/// Deployment size accounting: total parameter count x 4 bytes.
uint64_t model_size_bytes(const Checkpoint& c);

struct RunRecord {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_metric;  // per epoch
  double test_metric = 0.0;
  double wall_seconds = 0.0;
};

/// Structural equality; wall-clock time is informational only.
bool run_records_equal(const RunRecord& a, const RunRecord& b);

void save_run_record(const RunRecord& r, const ModelConfig& cfg, uint64_t seed,
                     const std::filesystem::path& jsonl_path);
std::string render_run_summary(const RunRecord& r, const ModelConfig& cfg, uint64_t seed);

/// Number of optimizer steps per epoch: ceil(pairs / batch); the last
/// batch may be partial.
int batches_per_epoch(int pairs, int batch);

struct TrainOptions {
  /// After finishing epoch e in this list, hand the best-so-far checkpoint
  /// to on_snapshot (used by the epoch sweep: the prefix of one trajectory
  /// is exactly a shorter run with the same seed).
  std::vector<int> snapshot_epochs;
  std::function<void(int, const Checkpoint&)> on_snapshot;
};

/// Adam over the MSE loss, shuffled seeded batches; model selection keeps
/// the parameters with the best validation metric (highest AUC for
/// classification, lowest MSE for regression); the test metric is computed
/// exactly once, on the selected parameters.
std::pair<Checkpoint, RunRecord> train_gsl(const Dataset& ds, const ModelConfig& cfg,
                                           uint64_t seed, const TrainOptions& opts = {});

/// Scores every pair of the split through the distributed session path and
/// returns AUC (classification) or mean squared error (regression).
double evaluate_gsl(const Checkpoint& c, const Dataset& ds, Split split);

enum class SweepKind { m, epochs };
const char* sweep_kind_name(SweepKind k);
SweepKind sweep_kind_from_name(const std::string& name);

struct SweepRow {
  SweepKind kind = SweepKind::m;
  int point = 0;
  uint64_t seed = 0;
  double task_auc = 0.0;
  double attack_auc = 0.0;
};

/// Grid points: m in {1,2,4,8,16}, epochs in {20,40,60,80,100}. For every
/// (point, seed): train, evaluate the task, run the full attack protocol.
/// jobs > 1 runs points concurrently with isolated state.
std::vector<SweepRow> sweep(const Dataset& ds, Family family, SweepKind kind,
                            const std::vector<uint64_t>& seeds, int jobs = 1);

/// Rows as newline-delimited records plus a rendered summary table with
/// mean +/- std per point.
void write_sweep_report(const std::vector<SweepRow>& rows, const std::filesystem::path& jsonl_path,
                        const std::filesystem::path& table_path);
std::string render_sweep_table(const std::vector<SweepRow>& rows);

}  // namespace ppgm
