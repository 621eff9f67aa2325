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
#include <string>
#include <vector>

#include "ppgm/dataset.hpp"
#include "ppgm/pipeline.hpp"

namespace ppgm {

/// Qualitative surface classification: which representation kinds cross the
/// boundary and which attack classes they enable. Property inference
/// threatens every family; reconstruction needs node-level representations.
struct AttackSurface {
  std::vector<std::string> rep_kinds;  // subset of {"N", "G", "O"}
  bool reconstruction_attackable = false;
  bool property_inference_attackable = true;
};
AttackSurface classify_attack_surface(Family family);

/// Uniform sample without replacement from the training-split graph ids;
/// fraction defaults to the 10% shadow rule. Returned sorted.
std::vector<std::string> build_shadow_set(const Dataset& ds, double fraction, uint64_t seed);

struct AttackSample {
  std::vector<double> representation;
  int label = 0;
  std::string rep_kind;  // "message" | "obfuscated" | "graph_rep" | "node_concat"
  std::string graph_id;
};

enum class InterceptPolicy { all, uniform_one };
const char* policy_name(InterceptPolicy p);
InterceptPolicy policy_from_name(const std::string& name);

/// Runs one seeded session per listed graph (partner drawn from the same
/// id pool) and harvests the target device's boundary-crossing vectors:
/// ppgm -> one sample per intercepted vector (m messages + 1 obfuscated
/// under policy "all", a single uniform draw under "uniform-one");
/// sgnn/sgnn_ldp -> the communicated graph representation; nodematch ->
/// max-pooled node representations concatenated with the graph
/// representation (2d dims). Labels are the source graph's private
/// property value.
std::vector<AttackSample> collect_attackable(const Checkpoint& ckpt,
                                             const std::vector<std::string>& ids,
                                             const Dataset& ds, InterceptPolicy policy,
                                             const std::string& property, uint64_t seed);

/// The black-box attacker: input -> 128 -> 64 -> 1 fully-connected network,
/// ReLU between layers, sigmoid output.
struct AttackerParams {
  int input_dim = 0;
  num::ParamStore net;
};

/// Binary cross-entropy, Adam(lr 1e-3), 200 full-batch epochs;
/// deterministic in (samples, seed). Requires two samples per class.
AttackerParams train_attacker(const std::vector<AttackSample>& samples, uint64_t seed);

std::vector<double> attacker_scores(const AttackerParams& attacker,
                                    const std::vector<AttackSample>& samples);

/// Probability that a random positive outranks a random negative, ties
/// counted one half (rank definition). Both classes must be present.
double compute_auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct AttackReport {
  std::string model;
  std::string property;
  std::string policy;
  uint64_t seed = 0;
  double val_auc = 0.0;
  double test_auc = 0.0;
  int n_train_samples = 0;
};

/// The full protocol: shadow sampling, collection, attacker training, and
/// AUC evaluation on all validation/test-split graphs.
AttackReport run_attack(const Checkpoint& ckpt, const Dataset& ds, double shadow_fraction,
                        const std::string& property, InterceptPolicy policy, uint64_t seed);

void write_attack_report(const AttackReport& report, const std::filesystem::path& path);
AttackReport read_attack_report(const std::filesystem::path& path);

}  // namespace ppgm
