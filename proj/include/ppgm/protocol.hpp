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

#include "ppgm/model.hpp"
#include "ppgm/rng.hpp"

namespace ppgm {

/// One representation transfer across the device boundary.
/// kind -> payload contract: "messages" and "node_reps" carry m vectors of
/// length dim, "obfuscated" and "graph_rep" carry one vector, "score" one
/// real.
struct WireMessage {
  std::string session_id;
  std::string sender;  // "A" | "B" | "scorer"
  std::string kind;    // "messages" | "obfuscated" | "graph_rep" | "node_reps" | "score"
  int m = 0;           // vector count for multi-vector kinds
  int dim = 0;
  std::vector<std::vector<double>> payload;
};

/// Throws std::invalid_argument on kind/count/dim violations.
void validate_wire_message(const WireMessage& msg);

struct TranscriptEntry {
  int step = 0;
  WireMessage msg;
};

/// Ordered record of every representation that crossed the boundary in one
/// scoring session. For a PPGM session the sequence is exactly
/// [A:messages, B:messages, A:obfuscated, B:obfuscated, scorer:score].
struct Transcript {
  std::vector<TranscriptEntry> entries;
};

/// Rejects out-of-order steps and malformed messages, naming the step.
void validate_transcript(const Transcript& t);

struct SessionResult {
  double score = 0.0;
  Transcript transcript;
};

/// Deterministic two-party split execution: graph g1 lives on device A,
/// g2 on device B, both devices hold identical trained parameters; only
/// the family's attackable representations cross the boundary, and the
/// returned score equals the monolithic forward pass bit for bit.
SessionResult run_pairwise_session(const Graph& g1, const num::ParamStore& params_a,
                                   const Graph& g2, const num::ParamStore& params_b,
                                   const ModelConfig& cfg, uint64_t session_seed,
                                   const std::string& session_id = "");

/// Shared-parameter convenience overload.
SessionResult run_pairwise_session(const Graph& g1, const Graph& g2,
                                   const num::ParamStore& params, const ModelConfig& cfg,
                                   uint64_t session_seed, const std::string& session_id = "");

/// What an observer of the channel sees: every vector that crossed, tagged.
struct InterceptedVec {
  std::string tag;  // "message" | "obfuscated" | "graph_rep" | "node_rep"
  std::string sender;
  int step = 0;
  int index = 0;  // position inside a multi-vector message
  std::vector<double> values;
};

/// Policy "all": every boundary-crossing vector, in transcript order.
std::vector<InterceptedVec> intercept_all(const Transcript& t);
/// Policy "uniform-one": a single vector drawn uniformly from the above.
InterceptedVec intercept_one(const Transcript& t, Rng& rng);

/// Frame codec: 4-byte little-endian length prefix + the UTF-8 JSON record
/// {"step","sender","kind","m"?,"dim","payload_b64","session"} with the
/// payload serialized as base64 little-endian 64-bit reals. Decoding a
/// truncated or corrupt frame reports the byte offset.
std::vector<uint8_t> wire_encode(const TranscriptEntry& entry);
TranscriptEntry wire_decode(const std::vector<uint8_t>& bytes);

/// Newline-delimited records, one per entry (same record schema as the
/// frame codec without the length prefix).
void write_transcript(const Transcript& t, const std::filesystem::path& path);
Transcript read_transcript(const std::filesystem::path& path);

/// Recomputes the final score from the communicated payloads alone (the
/// scorer's view); equals the logged score exactly for a valid transcript.
double replay_score(const Transcript& t, const num::ParamStore& head_params,
                    const ModelConfig& cfg);

}  // namespace ppgm
