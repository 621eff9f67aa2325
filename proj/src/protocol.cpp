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

#include "ppgm/protocol.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "ppgm/serial.hpp"

namespace ppgm {

using nlohmann::json;
using num::Tensor;

namespace {

std::vector<double> flatten_payload(const std::vector<std::vector<double>>& payload) {
  std::vector<double> flat;
  for (const auto& vec : payload) flat.insert(flat.end(), vec.begin(), vec.end());
  return flat;
}

bool is_multi_vector_kind(const std::string& kind) {
  return kind == "messages" || kind == "node_reps";
}

bool params_equal(const num::ParamStore& a, const num::ParamStore& b) {
  if (&a == &b) return true;
  if (a.size() != b.size()) return false;
  auto ia = a.begin();
  auto ib = b.begin();
  for (; ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first || ia->second.shape() != ib->second.shape()) return false;
    const auto da = ia->second.data(), db = ib->second.data();
    for (size_t i = 0; i < da.size(); ++i)
      if (da[i] != db[i]) return false;
  }
  return true;
}

std::vector<std::vector<double>> rows_of(const Tensor& t) {
  std::vector<std::vector<double>> out;
  const int n = t.rows(), c = t.cols();
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    out.emplace_back(t.data().begin() + static_cast<size_t>(i) * c,
                     t.data().begin() + static_cast<size_t>(i + 1) * c);
  return out;
}

std::vector<std::vector<double>> rows_of(const std::vector<Tensor>& vecs) {
  std::vector<std::vector<double>> out;
  for (const Tensor& t : vecs)
    out.emplace_back(t.data().begin(), t.data().end());
  return out;
}

void push_message(Transcript& t, const std::string& sid, const std::string& sender,
                  const std::string& kind, std::vector<std::vector<double>> payload) {
  WireMessage msg;
  msg.session_id = sid;
  msg.sender = sender;
  msg.kind = kind;
  msg.m = static_cast<int>(payload.size());
  msg.dim = payload.empty() ? 0 : static_cast<int>(payload.front().size());
  msg.payload = std::move(payload);
  validate_wire_message(msg);
  t.entries.push_back({static_cast<int>(t.entries.size()), std::move(msg)});
}

std::vector<Tensor> vectors_from(const WireMessage& msg) {
  std::vector<Tensor> out;
  out.reserve(msg.payload.size());
  for (const auto& v : msg.payload) out.push_back(Tensor::from_data({1, msg.dim}, v));
  return out;
}

Tensor matrix_from(const WireMessage& msg) {
  std::vector<double> flat;
  flat.reserve(static_cast<size_t>(msg.m) * msg.dim);
  for (const auto& v : msg.payload) flat.insert(flat.end(), v.begin(), v.end());
  return Tensor::from_data({msg.m, msg.dim}, std::move(flat));
}

const WireMessage& expect_entry(const Transcript& t, size_t index, const std::string& sender,
                                const std::string& kind) {
  if (index >= t.entries.size())
    throw std::invalid_argument("transcript: missing step " + std::to_string(index));
  const WireMessage& msg = t.entries[index].msg;
  if (msg.sender != sender || msg.kind != kind)
    throw std::invalid_argument("transcript step " + std::to_string(t.entries[index].step) +
                                ": expected " + sender + ":" + kind + ", got " + msg.sender + ":" +
                                msg.kind);
  return msg;
}

}  // namespace

void validate_wire_message(const WireMessage& msg) {
  static const std::set<std::string> kSenders = {"A", "B", "scorer"};
  static const std::set<std::string> kKinds = {"messages", "obfuscated", "graph_rep", "node_reps",
                                               "score"};
  if (!kSenders.count(msg.sender))
    throw std::invalid_argument("wire message: unknown sender '" + msg.sender + "'");
  if (!kKinds.count(msg.kind))
    throw std::invalid_argument("wire message: unknown kind '" + msg.kind + "'");
  if (msg.dim < 1) throw std::invalid_argument("wire message: dim must be >= 1");
  if (msg.payload.empty()) throw std::invalid_argument("wire message: empty payload");
  if (static_cast<int>(msg.payload.size()) != msg.m)
    throw std::invalid_argument("wire message: payload count " +
                                std::to_string(msg.payload.size()) + " != m " +
                                std::to_string(msg.m));
  if (!is_multi_vector_kind(msg.kind) && msg.m != 1)
    throw std::invalid_argument("wire message: kind '" + msg.kind + "' carries one vector");
  if (msg.kind == "score" && msg.dim != 1)
    throw std::invalid_argument("wire message: score payload must be a single real");
  for (const auto& v : msg.payload)
    if (static_cast<int>(v.size()) != msg.dim)
      throw std::invalid_argument("wire message: vector length " + std::to_string(v.size()) +
                                  " != dim " + std::to_string(msg.dim));
}

void validate_transcript(const Transcript& t) {
  int last = -1;
  for (const auto& entry : t.entries) {
    if (entry.step <= last)
      throw std::invalid_argument("transcript step " + std::to_string(entry.step) +
                                  ": step indices must be strictly increasing");
    last = entry.step;
    try {
      validate_wire_message(entry.msg);
    } catch (const std::exception& e) {
      throw std::invalid_argument("transcript step " + std::to_string(entry.step) + ": " +
                                  e.what());
    }
  }
}

SessionResult run_pairwise_session(const Graph& g1, const num::ParamStore& params_a,
                                   const Graph& g2, const num::ParamStore& params_b,
                                   const ModelConfig& cfg, uint64_t session_seed,
                                   const std::string& session_id) {
  if (!params_equal(params_a, params_b))
    throw std::invalid_argument("run_pairwise_session: device parameters differ");
  const std::string sid =
      session_id.empty() ? "session-" + std::to_string(session_seed) : session_id;

  SessionResult result;
  Transcript& t = result.transcript;

  switch (cfg.family) {
    case Family::ppgm: {
      // Device A encodes locally and emits its multi-perspective messages.
      const Tensor h1 = gcn_encode(g1, params_a, cfg);
      const auto msgs1 = extract_messages(h1, params_a, cfg);
      push_message(t, sid, "A", "messages", rows_of(msgs1));
      // Device B does the same.
      const Tensor h2 = gcn_encode(g2, params_b, cfg);
      const auto msgs2 = extract_messages(h2, params_b, cfg);
      push_message(t, sid, "B", "messages", rows_of(msgs2));
      // Each device consumes the counterpart's wire payload, pools its own
      // nodes under those messages, and emits one obfuscated feature.
      const auto incoming2 = vectors_from(t.entries[1].msg);
      const auto pool1 = message_pool(h1, incoming2, params_a, cfg);
      const Tensor o1 =
          obfuscate(pool1, cfg.hyper.no_obfuscation ? msgs1 : incoming2, params_a, cfg);
      push_message(t, sid, "A", "obfuscated", rows_of(o1));
      const auto incoming1 = vectors_from(t.entries[0].msg);
      const auto pool2 = message_pool(h2, incoming1, params_b, cfg);
      const Tensor o2 =
          obfuscate(pool2, cfg.hyper.no_obfuscation ? msgs2 : incoming1, params_b, cfg);
      push_message(t, sid, "B", "obfuscated", rows_of(o2));
      // Neutral scorer sees only the obfuscated features.
      const Tensor o1w = vectors_from(t.entries[2].msg).front();
      const Tensor o2w = vectors_from(t.entries[3].msg).front();
      const Tensor s = cfg.task == Task::classification
                           ? predict_classification(o1w, o2w)
                           : predict_regression(o1w, o2w, params_a, cfg);
      result.score = s.scalar_value();
      break;
    }
    case Family::sgnn:
    case Family::sgnn_ldp: {
      const Tensor r1 = num::mean_rows(gcn_encode(g1, params_a, cfg));
      Tensor sent1 = r1;
      if (cfg.family == Family::sgnn_ldp && cfg.hyper.ldp_scale > 0.0) {
        Rng rng(mix_seed(session_seed, 0xA1));
        sent1 = ldp_noise(r1, cfg.hyper.ldp_scale, rng);
      }
      push_message(t, sid, "A", "graph_rep", rows_of(sent1));
      const Tensor r2 = num::mean_rows(gcn_encode(g2, params_b, cfg));
      Tensor sent2 = r2;
      if (cfg.family == Family::sgnn_ldp && cfg.hyper.ldp_scale > 0.0) {
        Rng rng(mix_seed(session_seed, 0xB2));
        sent2 = ldp_noise(r2, cfg.hyper.ldp_scale, rng);
      }
      push_message(t, sid, "B", "graph_rep", rows_of(sent2));
      const Tensor s = predict_classification(vectors_from(t.entries[0].msg).front(),
                                              vectors_from(t.entries[1].msg).front());
      result.score = s.scalar_value();
      break;
    }
    case Family::nodematch: {
      const Tensor h1 = gcn_encode(g1, params_a, cfg);
      const Tensor r1 = num::mean_rows(h1);
      push_message(t, sid, "A", "node_reps", rows_of(h1));
      push_message(t, sid, "A", "graph_rep", rows_of(r1));
      const Tensor h2 = gcn_encode(g2, params_b, cfg);
      const Tensor r2 = num::mean_rows(h2);
      push_message(t, sid, "B", "node_reps", rows_of(h2));
      push_message(t, sid, "B", "graph_rep", rows_of(r2));
      const Tensor s = nodematch_score(matrix_from(t.entries[0].msg),
                                       vectors_from(t.entries[1].msg).front(),
                                       matrix_from(t.entries[2].msg),
                                       vectors_from(t.entries[3].msg).front());
      result.score = s.scalar_value();
      break;
    }
  }
  push_message(t, sid, "scorer", "score", {{result.score}});
  return result;
}

SessionResult run_pairwise_session(const Graph& g1, const Graph& g2,
                                   const num::ParamStore& params, const ModelConfig& cfg,
                                   uint64_t session_seed, const std::string& session_id) {
  return run_pairwise_session(g1, params, g2, params, cfg, session_seed, session_id);
}

std::vector<InterceptedVec> intercept_all(const Transcript& t) {
  std::vector<InterceptedVec> out;
  for (const auto& entry : t.entries) {
    const WireMessage& msg = entry.msg;
    std::string tag;
    if (msg.kind == "messages")
      tag = "message";
    else if (msg.kind == "obfuscated")
      tag = "obfuscated";
    else if (msg.kind == "graph_rep")
      tag = "graph_rep";
    else if (msg.kind == "node_reps")
      tag = "node_rep";
    else
      continue;  // the score is not a representation
    for (size_t i = 0; i < msg.payload.size(); ++i)
      out.push_back({tag, msg.sender, entry.step, static_cast<int>(i), msg.payload[i]});
  }
  return out;
}

InterceptedVec intercept_one(const Transcript& t, Rng& rng) {
  auto all = intercept_all(t);
  if (all.empty()) throw std::invalid_argument("intercept: transcript carries no representations");
  return all[static_cast<size_t>(rng.uniform_int(static_cast<int>(all.size())))];
}

// ---------------------------------------------------------------------------
// Codec and files
// ---------------------------------------------------------------------------

namespace {

json record_of(const TranscriptEntry& entry) {
  const WireMessage& msg = entry.msg;
  json j{{"step", entry.step},
         {"sender", msg.sender},
         {"kind", msg.kind},
         {"dim", msg.dim},
         {"payload_b64", serial::doubles_to_b64(flatten_payload(msg.payload))},
         {"session", msg.session_id}};
  if (is_multi_vector_kind(msg.kind)) j["m"] = msg.m;
  return j;
}

TranscriptEntry entry_of(const json& j) {
  TranscriptEntry entry;
  entry.step = j.at("step").get<int>();
  WireMessage& msg = entry.msg;
  msg.sender = j.at("sender").get<std::string>();
  msg.kind = j.at("kind").get<std::string>();
  msg.dim = j.at("dim").get<int>();
  msg.m = is_multi_vector_kind(msg.kind) ? j.at("m").get<int>() : 1;
  if (j.contains("session")) msg.session_id = j.at("session").get<std::string>();
  const std::vector<double> flat =
      serial::b64_to_doubles(j.at("payload_b64").get<std::string>());
  if (msg.dim < 1 || msg.m < 1 ||
      flat.size() != static_cast<size_t>(msg.m) * static_cast<size_t>(msg.dim))
    throw std::invalid_argument("payload length " + std::to_string(flat.size()) +
                                " inconsistent with m*dim = " + std::to_string(msg.m) + "*" +
                                std::to_string(msg.dim));
  for (int i = 0; i < msg.m; ++i)
    msg.payload.emplace_back(flat.begin() + static_cast<size_t>(i) * msg.dim,
                             flat.begin() + static_cast<size_t>(i + 1) * msg.dim);
  validate_wire_message(msg);
  return entry;
}

}  // namespace

std::vector<uint8_t> wire_encode(const TranscriptEntry& entry) {
  validate_wire_message(entry.msg);
  const std::string record = record_of(entry).dump();
  std::vector<uint8_t> out(4 + record.size());
  const uint32_t len = static_cast<uint32_t>(record.size());
  for (int b = 0; b < 4; ++b) out[b] = static_cast<uint8_t>((len >> (8 * b)) & 0xFF);
  std::memcpy(out.data() + 4, record.data(), record.size());
  return out;
}

TranscriptEntry wire_decode(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 4)
    throw std::invalid_argument("wire frame truncated at offset 0: need 4-byte length prefix");
  uint32_t len = 0;
  for (int b = 0; b < 4; ++b) len |= static_cast<uint32_t>(bytes[b]) << (8 * b);
  if (bytes.size() < 4 + static_cast<size_t>(len))
    throw std::invalid_argument("wire frame truncated at offset 4: header promises " +
                                std::to_string(len) + " bytes, " +
                                std::to_string(bytes.size() - 4) + " present");
  const std::string record(bytes.begin() + 4, bytes.begin() + 4 + len);
  try {
    return entry_of(json::parse(record));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("wire frame corrupt at offset 4: ") + e.what());
  }
}

void write_transcript(const Transcript& t, const std::filesystem::path& path) {
  validate_transcript(t);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& entry : t.entries) out << record_of(entry).dump() << '\n';
}

Transcript read_transcript(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Transcript t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      t.entries.push_back(entry_of(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("transcript line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate_transcript(t);
  return t;
}

double replay_score(const Transcript& t, const num::ParamStore& head_params,
                    const ModelConfig& cfg) {
  validate_transcript(t);
  Tensor s;
  switch (cfg.family) {
    case Family::ppgm: {
      expect_entry(t, 0, "A", "messages");
      expect_entry(t, 1, "B", "messages");
      const Tensor o1 = vectors_from(expect_entry(t, 2, "A", "obfuscated")).front();
      const Tensor o2 = vectors_from(expect_entry(t, 3, "B", "obfuscated")).front();
      expect_entry(t, 4, "scorer", "score");
      s = cfg.task == Task::classification ? predict_classification(o1, o2)
                                           : predict_regression(o1, o2, head_params, cfg);
      break;
    }
    case Family::sgnn:
    case Family::sgnn_ldp: {
      const Tensor r1 = vectors_from(expect_entry(t, 0, "A", "graph_rep")).front();
      const Tensor r2 = vectors_from(expect_entry(t, 1, "B", "graph_rep")).front();
      expect_entry(t, 2, "scorer", "score");
      s = predict_classification(r1, r2);
      break;
    }
    case Family::nodematch: {
      const Tensor h1 = matrix_from(expect_entry(t, 0, "A", "node_reps"));
      const Tensor r1 = vectors_from(expect_entry(t, 1, "A", "graph_rep")).front();
      const Tensor h2 = matrix_from(expect_entry(t, 2, "B", "node_reps"));
      const Tensor r2 = vectors_from(expect_entry(t, 3, "B", "graph_rep")).front();
      expect_entry(t, 4, "scorer", "score");
      s = nodematch_score(h1, r1, h2, r2);
      break;
    }
  }
  return s.scalar_value();
}

}  // namespace ppgm
