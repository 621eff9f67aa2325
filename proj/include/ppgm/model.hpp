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
#include <string>
#include <vector>

#include "ppgm/dataset.hpp"
#include "ppgm/graph.hpp"
#include "ppgm/rng.hpp"
#include "ppgm/tensor.hpp"

namespace ppgm {

enum class Family { ppgm, sgnn, sgnn_ldp, nodematch };

const char* family_name(Family f);
Family family_from_name(const std::string& name);

struct HyperParams {
  int d = 100;
  int layers = 3;
  int m = 8;
  int heads = 4;
  double lr = 5e-4;
  int epochs = 100;
  int batch = 10;
  bool no_obfuscation = false;
  bool no_context_codes = false;
  bool no_ng_matching = false;
  double ldp_scale = 0.0;
};

struct ModelConfig {
  Family family = Family::ppgm;
  Task task = Task::classification;
  int feature_dim = 8;
  HyperParams hyper;
};

void validate_config(const ModelConfig& cfg);

/// Fresh parameters: uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weight
/// matrices, zeros for LSTM biases, 0.1 * standard normal for context codes.
/// Deterministic in (config, seed).
num::ParamStore init_params(const ModelConfig& cfg, uint64_t seed);

/// One multi-head attention block: four d x d projections, single layer,
/// no residual, no layer norm, no feed-forward.
struct AttnBlock {
  num::Tensor wq, wk, wv, wo;
};
AttnBlock attn_block(const num::ParamStore& params, const std::string& prefix);

/// Attention pooling: query 1 x d against n x d keys/values, h heads of
/// width d/h, per-head softmax(q k^T / sqrt(d/h)) v, concatenated and
/// projected by wo. Optionally exposes the per-head attention weights.
num::Tensor mha_pool(const num::Tensor& query, const num::Tensor& keys,
                     const num::Tensor& values, const AttnBlock& block, int heads,
                     std::vector<num::Tensor>* head_weights = nullptr);

/// Stacked GCN layers H^(l) = ReLU(A~ H^(l-1) W^l), no bias; returns H^(L).
num::Tensor gcn_encode(const Graph& g, const num::ParamStore& params,
                       const ModelConfig& cfg);

/// Context-attentive messages g_i = mha_pool(c_i, H, H), i = 1..m; with the
/// no_context_codes ablation every message is mean_rows(H).
std::vector<num::Tensor> extract_messages(const num::Tensor& h,
                                          const num::ParamStore& params,
                                          const ModelConfig& cfg);

/// Message-guided pooling p_i = mha_pool(incoming_i, H, H); with the
/// no_ng_matching ablation every pool is mean_rows(H).
std::vector<num::Tensor> message_pool(const num::Tensor& h,
                                      const std::vector<num::Tensor>& incoming,
                                      const num::ParamStore& params,
                                      const ModelConfig& cfg);

/// Ordered fusion: e_i = own_pooled_i || incoming_i, o = final hidden state
/// of a single-layer LSTM (zero initial state) over e_1..e_m.
num::Tensor obfuscate(const std::vector<num::Tensor>& own_pooled,
                      const std::vector<num::Tensor>& incoming,
                      const num::ParamStore& params, const ModelConfig& cfg);

/// Cosine similarity in [-1, 1]; zero vectors score 0 (logged as
/// degenerate via l2_normalize).
num::Tensor predict_classification(const num::Tensor& o1, const num::Tensor& o2);

/// sigmoid(MLP([o1 || o2])) with layers 2d -> d -> d/2 -> 1, ReLU between.
num::Tensor predict_regression(const num::Tensor& o1, const num::Tensor& o2,
                               const num::ParamStore& params, const ModelConfig& cfg);

/// Mean squared error; classification labels {0,1} are mapped to {-1,+1}
/// before comparison with cosine scores.
num::Tensor mse_loss(const std::vector<num::Tensor>& predictions,
                     const std::vector<double>& labels, Task task);

/// rep + iid Laplace(0, b) noise per coordinate.
num::Tensor ldp_noise(const num::Tensor& rep, double b, Rng& rng);

// ---------------------------------------------------------------------------
// Whole-model forward passes. Traces expose every intermediate that either
// crosses the device boundary or is needed by tests; the protocol module
// stages the same calls in the same order, so distributed and monolithic
// scores agree bit for bit.
// ---------------------------------------------------------------------------

struct PpgmTrace {
  num::Tensor h1, h2;
  std::vector<num::Tensor> msgs1, msgs2;  // communicated
  std::vector<num::Tensor> pool1, pool2;  // consumed locally
  num::Tensor o1, o2;                     // communicated
  num::Tensor score;
};
PpgmTrace ppgm_forward(const Graph& g1, const Graph& g2, const num::ParamStore& params,
                       const ModelConfig& cfg);

struct SgnnTrace {
  num::Tensor r1, r2;        // device-local pooled representations
  num::Tensor sent1, sent2;  // communicated (Laplace-noised for sgnn_ldp)
  num::Tensor score;
};
SgnnTrace sgnn_forward(const Graph& g1, const Graph& g2, const num::ParamStore& params,
                       const ModelConfig& cfg, uint64_t session_seed);

struct NodeMatchTrace {
  num::Tensor h1, h2;  // communicated node representations
  num::Tensor r1, r2;  // communicated graph representations
  num::Tensor score;
};
NodeMatchTrace nodematch_forward(const Graph& g1, const Graph& g2,
                                 const num::ParamStore& params, const ModelConfig& cfg);

/// Scoring function used on the neutral scorer for nodematch: cosine of
/// [r_k || mean of softmax-weighted cross-graph node matches], computed
/// from the communicated node/graph representations only.
num::Tensor nodematch_score(const num::Tensor& h1, const num::Tensor& r1,
                            const num::Tensor& h2, const num::Tensor& r2);

/// Monolithic score for any family; session_seed feeds the sgnn_ldp noise
/// streams (ignored elsewhere).
num::Tensor model_score(const Graph& g1, const Graph& g2, const num::ParamStore& params,
                        const ModelConfig& cfg, uint64_t session_seed);

/// Deep copy of every named tensor, trainable or frozen.
num::ParamStore clone_params(const num::ParamStore& params, bool requires_grad);

}  // namespace ppgm
