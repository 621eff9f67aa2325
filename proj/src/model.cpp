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

#include "ppgm/model.hpp"

#include <cmath>
#include <stdexcept>

#include "ppgm/rng.hpp"

namespace ppgm {

using num::Tensor;

const char* family_name(Family f) {
  switch (f) {
    case Family::ppgm: return "ppgm";
    case Family::sgnn: return "sgnn";
    case Family::sgnn_ldp: return "sgnn-ldp";
    case Family::nodematch: return "nodematch";
  }
  return "?";
}

Family family_from_name(const std::string& name) {
  if (name == "ppgm") return Family::ppgm;
  if (name == "sgnn") return Family::sgnn;
  if (name == "sgnn-ldp" || name == "sgnn_ldp") return Family::sgnn_ldp;
  if (name == "nodematch") return Family::nodematch;
  throw std::invalid_argument("unknown model family '" + name + "'");
}

void validate_config(const ModelConfig& cfg) {
  const HyperParams& h = cfg.hyper;
  if (h.d < 1 || h.layers < 1 || h.m < 1 || h.heads < 1 || h.batch < 1 || cfg.feature_dim < 1)
    throw std::invalid_argument("model config: dimensions and counts must be positive");
  if (h.d % h.heads != 0)
    throw std::invalid_argument("model config: d=" + std::to_string(h.d) +
                                " must be divisible by heads=" + std::to_string(h.heads));
  if (h.lr <= 0.0) throw std::invalid_argument("model config: lr must be positive");
  if (h.epochs < 0) throw std::invalid_argument("model config: epochs must be >= 0");
  if (h.ldp_scale < 0.0) throw std::invalid_argument("model config: ldp_scale must be >= 0");
  if (cfg.task == Task::regression && cfg.family != Family::ppgm)
    throw std::invalid_argument("model config: regression head exists only for the ppgm family");
  if (cfg.task == Task::regression && cfg.hyper.d % 2 != 0)
    throw std::invalid_argument("model config: regression head needs even d");
}

num::ParamStore init_params(const ModelConfig& cfg, uint64_t seed) {
  validate_config(cfg);
  const HyperParams& h = cfg.hyper;
  Rng rng(mix_seed(seed, 0x9A));
  num::ParamStore ps;

  auto add_uniform = [&](const std::string& name, int rows, int cols) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    std::vector<double> data(static_cast<size_t>(rows) * cols);
    for (double& v : data) v = rng.uniform(-bound, bound);
    ps.emplace(name, Tensor::parameter({rows, cols}, std::move(data), name));
  };
  auto add_zeros = [&](const std::string& name, int rows, int cols) {
    ps.emplace(name, Tensor::parameter({rows, cols},
                                       std::vector<double>(static_cast<size_t>(rows) * cols, 0.0),
                                       name));
  };

  add_uniform("gcn.w0", cfg.feature_dim, h.d);
  for (int l = 1; l < h.layers; ++l) add_uniform("gcn.w" + std::to_string(l), h.d, h.d);

  if (cfg.family == Family::ppgm) {
    for (int i = 0; i < h.m; ++i) {
      std::vector<double> code(static_cast<size_t>(h.d));
      for (double& v : code) v = 0.1 * rng.normal();
      const std::string name = "ctx.code." + std::to_string(i);
      ps.emplace(name, Tensor::parameter({1, h.d}, std::move(code), name));
    }
    for (const char* prefix : {"ctx_attn", "msg_attn"})
      for (const char* w : {".wq", ".wk", ".wv", ".wo"})
        add_uniform(std::string(prefix) + w, h.d, h.d);
    for (const char* gate : {"i", "f", "o", "c"}) {
      add_uniform(std::string("lstm.w_") + gate, 3 * h.d, h.d);
      add_zeros(std::string("lstm.b_") + gate, 1, h.d);
    }
    if (cfg.task == Task::regression) {
      add_uniform("head.w0", 2 * h.d, h.d);
      add_uniform("head.w1", h.d, h.d / 2);
      add_uniform("head.w2", h.d / 2, 1);
    }
  }
  return ps;
}

AttnBlock attn_block(const num::ParamStore& params, const std::string& prefix) {
  return AttnBlock{params.at(prefix + ".wq"), params.at(prefix + ".wk"),
                   params.at(prefix + ".wv"), params.at(prefix + ".wo")};
}

Tensor mha_pool(const Tensor& query, const Tensor& keys, const Tensor& values,
                const AttnBlock& block, int heads, std::vector<Tensor>* head_weights) {
  const int d = block.wq.shape()[0];
  if (query.rank() != 2 || query.rows() != 1 || query.cols() != d)
    throw std::invalid_argument("mha_pool: query must be 1x" + std::to_string(d) + ", got " +
                                num::shape_str(query.shape()));
  if (keys.rank() != 2 || keys.cols() != d || values.shape() != keys.shape())
    throw std::invalid_argument("mha_pool: keys/values must be n x d, got " +
                                num::shape_str(keys.shape()) + " and " +
                                num::shape_str(values.shape()));
  if (d % heads != 0) throw std::invalid_argument("mha_pool: d not divisible by head count");

  const Tensor q = num::matmul(query, block.wq);
  const Tensor k = num::matmul(keys, block.wk);
  const Tensor v = num::matmul(values, block.wv);
  const int hd = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));

  Tensor pooled;
  for (int h = 0; h < heads; ++h) {
    const Tensor qh = num::slice_cols(q, h * hd, hd);
    const Tensor kh = num::slice_cols(k, h * hd, hd);
    const Tensor vh = num::slice_cols(v, h * hd, hd);
    const Tensor scores = num::scale(num::matmul(qh, num::transpose(kh)), inv_sqrt);
    const Tensor weights = num::softmax_lastdim(scores);
    if (head_weights) head_weights->push_back(weights);
    const Tensor head_out = num::matmul(weights, vh);
    pooled = h == 0 ? head_out : num::concat(pooled, head_out);
  }
  return num::matmul(pooled, block.wo);
}

Tensor gcn_encode(const Graph& g, const num::ParamStore& params, const ModelConfig& cfg) {
  if (g.feature_dim != cfg.feature_dim)
    throw std::invalid_argument("gcn_encode: graph " + g.id + " has feature dim " +
                                std::to_string(g.feature_dim) + ", model expects " +
                                std::to_string(cfg.feature_dim));
  if (g.num_nodes < 1)
    throw std::invalid_argument("gcn_encode: graph " + g.id + " is empty");
  const Tensor adj = normalized_adjacency(g);
  Tensor h = feature_tensor(g);
  for (int l = 0; l < cfg.hyper.layers; ++l)
    h = num::relu(num::matmul(num::matmul(adj, h), params.at("gcn.w" + std::to_string(l))));
  return h;
}

std::vector<Tensor> extract_messages(const Tensor& h, const num::ParamStore& params,
                                     const ModelConfig& cfg) {
  std::vector<Tensor> out;
  out.reserve(static_cast<size_t>(cfg.hyper.m));
  if (cfg.hyper.no_context_codes) {
    const Tensor mean = num::mean_rows(h);
    for (int i = 0; i < cfg.hyper.m; ++i) out.push_back(mean);
    return out;
  }
  const AttnBlock block = attn_block(params, "ctx_attn");
  for (int i = 0; i < cfg.hyper.m; ++i)
    out.push_back(mha_pool(params.at("ctx.code." + std::to_string(i)), h, h, block,
                           cfg.hyper.heads));
  return out;
}

std::vector<Tensor> message_pool(const Tensor& h, const std::vector<Tensor>& incoming,
                                 const num::ParamStore& params, const ModelConfig& cfg) {
  if (incoming.size() != static_cast<size_t>(cfg.hyper.m))
    throw std::invalid_argument("message_pool: expected " + std::to_string(cfg.hyper.m) +
                                " incoming messages, got " + std::to_string(incoming.size()));
  std::vector<Tensor> out;
  out.reserve(incoming.size());
  if (cfg.hyper.no_ng_matching) {
    const Tensor mean = num::mean_rows(h);
    for (int i = 0; i < cfg.hyper.m; ++i) out.push_back(mean);
    return out;
  }
  const AttnBlock block = attn_block(params, "msg_attn");
  for (const Tensor& msg : incoming) out.push_back(mha_pool(msg, h, h, block, cfg.hyper.heads));
  return out;
}

Tensor obfuscate(const std::vector<Tensor>& own_pooled, const std::vector<Tensor>& incoming,
                 const num::ParamStore& params, const ModelConfig& cfg) {
  const size_t m = static_cast<size_t>(cfg.hyper.m);
  if (own_pooled.size() != m || incoming.size() != m)
    throw std::invalid_argument("obfuscate: expected " + std::to_string(m) +
                                " vectors per list, got " + std::to_string(own_pooled.size()) +
                                " and " + std::to_string(incoming.size()));
  const Tensor wi = params.at("lstm.w_i"), wf = params.at("lstm.w_f");
  const Tensor wo = params.at("lstm.w_o"), wc = params.at("lstm.w_c");
  const Tensor bi = params.at("lstm.b_i"), bf = params.at("lstm.b_f");
  const Tensor bo = params.at("lstm.b_o"), bc = params.at("lstm.b_c");

  Tensor h = Tensor::zeros({1, cfg.hyper.d});
  Tensor c = Tensor::zeros({1, cfg.hyper.d});
  for (size_t i = 0; i < m; ++i) {
    const Tensor x = num::concat(own_pooled[i], incoming[i]);  // own-graph vector first
    const Tensor xh = num::concat(x, h);
    const Tensor gi = num::sigmoid(num::add(num::matmul(xh, wi), bi));
    const Tensor gf = num::sigmoid(num::add(num::matmul(xh, wf), bf));
    const Tensor go = num::sigmoid(num::add(num::matmul(xh, wo), bo));
    const Tensor gc = num::tanh_op(num::add(num::matmul(xh, wc), bc));
    c = num::add(num::elementwise_mul(gf, c), num::elementwise_mul(gi, gc));
    h = num::elementwise_mul(go, num::tanh_op(c));
  }
  return h;
}

Tensor predict_classification(const Tensor& o1, const Tensor& o2) {
  return num::matmul(num::l2_normalize(o1), num::transpose(num::l2_normalize(o2)));
}

Tensor predict_regression(const Tensor& o1, const Tensor& o2, const num::ParamStore& params,
                          const ModelConfig& cfg) {
  if (cfg.task != Task::regression || !params.count("head.w0"))
    throw std::invalid_argument("predict_regression: checkpoint has no regression head");
  Tensor x = num::concat(o1, o2);
  x = num::relu(num::matmul(x, params.at("head.w0")));
  x = num::relu(num::matmul(x, params.at("head.w1")));
  return num::sigmoid(num::matmul(x, params.at("head.w2")));
}

Tensor mse_loss(const std::vector<Tensor>& predictions, const std::vector<double>& labels,
                Task task) {
  if (predictions.empty())
    throw std::invalid_argument("mse_loss: empty batch");
  if (predictions.size() != labels.size())
    throw std::invalid_argument("mse_loss: " + std::to_string(predictions.size()) +
                                " predictions vs " + std::to_string(labels.size()) + " labels");
  Tensor acc;
  for (size_t i = 0; i < predictions.size(); ++i) {
    const double target = task == Task::classification ? 2.0 * labels[i] - 1.0 : labels[i];
    const Tensor diff = num::sub(predictions[i], Tensor::scalar(target));
    const Tensor sq = num::elementwise_mul(diff, diff);
    acc = i == 0 ? sq : num::add(acc, sq);
  }
  return num::scale(acc, 1.0 / static_cast<double>(predictions.size()));
}

Tensor ldp_noise(const Tensor& rep, double b, Rng& rng) {
  if (b < 0.0) throw std::invalid_argument("ldp_noise: scale must be >= 0, got " + std::to_string(b));
  std::vector<double> noise(rep.numel());
  for (double& v : noise) v = rng.laplace(b);
  return num::add(rep, Tensor::from_data(rep.shape(), std::move(noise)));
}

// ---------------------------------------------------------------------------
// Whole-model forwards
// ---------------------------------------------------------------------------

PpgmTrace ppgm_forward(const Graph& g1, const Graph& g2, const num::ParamStore& params,
                       const ModelConfig& cfg) {
  PpgmTrace t;
  t.h1 = gcn_encode(g1, params, cfg);
  t.msgs1 = extract_messages(t.h1, params, cfg);
  t.h2 = gcn_encode(g2, params, cfg);
  t.msgs2 = extract_messages(t.h2, params, cfg);
  t.pool1 = message_pool(t.h1, t.msgs2, params, cfg);
  t.o1 = obfuscate(t.pool1, cfg.hyper.no_obfuscation ? t.msgs1 : t.msgs2, params, cfg);
  t.pool2 = message_pool(t.h2, t.msgs1, params, cfg);
  t.o2 = obfuscate(t.pool2, cfg.hyper.no_obfuscation ? t.msgs2 : t.msgs1, params, cfg);
  t.score = cfg.task == Task::classification ? predict_classification(t.o1, t.o2)
                                             : predict_regression(t.o1, t.o2, params, cfg);
  return t;
}

SgnnTrace sgnn_forward(const Graph& g1, const Graph& g2, const num::ParamStore& params,
                       const ModelConfig& cfg, uint64_t session_seed) {
  SgnnTrace t;
  t.r1 = num::mean_rows(gcn_encode(g1, params, cfg));
  t.r2 = num::mean_rows(gcn_encode(g2, params, cfg));
  if (cfg.family == Family::sgnn_ldp && cfg.hyper.ldp_scale > 0.0) {
    Rng rng1(mix_seed(session_seed, 0xA1));
    Rng rng2(mix_seed(session_seed, 0xB2));
    t.sent1 = ldp_noise(t.r1, cfg.hyper.ldp_scale, rng1);
    t.sent2 = ldp_noise(t.r2, cfg.hyper.ldp_scale, rng2);
  } else {
    t.sent1 = t.r1;
    t.sent2 = t.r2;
  }
  t.score = predict_classification(t.sent1, t.sent2);
  return t;
}

Tensor nodematch_score(const Tensor& h1, const Tensor& r1, const Tensor& h2, const Tensor& r2) {
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(h1.cols()));
  const Tensor w1 = num::softmax_lastdim(num::scale(num::matmul(h1, num::transpose(h2)), inv_sqrt));
  const Tensor matched1 = num::mean_rows(num::matmul(w1, h2));
  const Tensor w2 = num::softmax_lastdim(num::scale(num::matmul(h2, num::transpose(h1)), inv_sqrt));
  const Tensor matched2 = num::mean_rows(num::matmul(w2, h1));
  return predict_classification(num::concat(r1, matched1), num::concat(r2, matched2));
}

NodeMatchTrace nodematch_forward(const Graph& g1, const Graph& g2,
                                 const num::ParamStore& params, const ModelConfig& cfg) {
  NodeMatchTrace t;
  t.h1 = gcn_encode(g1, params, cfg);
  t.r1 = num::mean_rows(t.h1);
  t.h2 = gcn_encode(g2, params, cfg);
  t.r2 = num::mean_rows(t.h2);
  t.score = nodematch_score(t.h1, t.r1, t.h2, t.r2);
  return t;
}

num::ParamStore clone_params(const num::ParamStore& params, bool requires_grad) {
  num::ParamStore out;
  for (const auto& [name, t] : params)
    out.emplace(name, Tensor::parameter(t.shape(),
                                        std::vector<double>(t.data().begin(), t.data().end()),
                                        name, requires_grad));
  return out;
}

Tensor model_score(const Graph& g1, const Graph& g2, const num::ParamStore& params,
                   const ModelConfig& cfg, uint64_t session_seed) {
  switch (cfg.family) {
    case Family::ppgm:
      return ppgm_forward(g1, g2, params, cfg).score;
    case Family::sgnn:
    case Family::sgnn_ldp:
      return sgnn_forward(g1, g2, params, cfg, session_seed).score;
    case Family::nodematch:
      return nodematch_forward(g1, g2, params, cfg).score;
  }
  throw std::invalid_argument("model_score: unknown family");
}

}  // namespace ppgm
