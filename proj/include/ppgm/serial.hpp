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

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppgm::serial {

inline constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string b64_encode(const std::vector<uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (size_t i = 0; i < bytes.size(); i += 3) {
    uint32_t triple = static_cast<uint32_t>(bytes[i]) << 16;
    if (i + 1 < bytes.size()) triple |= static_cast<uint32_t>(bytes[i + 1]) << 8;
    if (i + 2 < bytes.size()) triple |= bytes[i + 2];
    out.push_back(kB64Alphabet[(triple >> 18) & 0x3F]);
    out.push_back(kB64Alphabet[(triple >> 12) & 0x3F]);
    out.push_back(i + 1 < bytes.size() ? kB64Alphabet[(triple >> 6) & 0x3F] : '=');
    out.push_back(i + 2 < bytes.size() ? kB64Alphabet[triple & 0x3F] : '=');
  }
  return out;
}

inline std::vector<uint8_t> b64_decode(const std::string& s) {
  auto value_of = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  if (s.size() % 4 != 0) throw std::invalid_argument("base64: length not a multiple of 4");
  std::vector<uint8_t> out;
  out.reserve(s.size() / 4 * 3);
  for (size_t i = 0; i < s.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = s[i + k];
      if (c == '=' && k >= 2) {
        vals[k] = 0;
        ++pad;
      } else {
        vals[k] = value_of(c);
        if (vals[k] < 0) throw std::invalid_argument("base64: invalid character");
      }
    }
    const uint32_t triple = (static_cast<uint32_t>(vals[0]) << 18) |
                            (static_cast<uint32_t>(vals[1]) << 12) |
                            (static_cast<uint32_t>(vals[2]) << 6) | static_cast<uint32_t>(vals[3]);
    out.push_back(static_cast<uint8_t>((triple >> 16) & 0xFF));
    if (pad < 2) out.push_back(static_cast<uint8_t>((triple >> 8) & 0xFF));
    if (pad < 1) out.push_back(static_cast<uint8_t>(triple & 0xFF));
  }
  return out;
}

/// 64-bit reals as little-endian bytes, independent of host byte order.
inline std::vector<uint8_t> doubles_to_le_bytes(const std::vector<double>& values) {
  std::vector<uint8_t> bytes;
  bytes.reserve(values.size() * 8);
  for (double v : values) {
    const uint64_t bits = std::bit_cast<uint64_t>(v);
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<uint8_t>((bits >> (8 * b)) & 0xFF));
  }
  return bytes;
}

inline std::vector<double> le_bytes_to_doubles(const std::vector<uint8_t>& bytes) {
  if (bytes.size() % 8 != 0) throw std::invalid_argument("payload: byte count not a multiple of 8");
  std::vector<double> out(bytes.size() / 8);
  for (size_t i = 0; i < out.size(); ++i) {
    uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<uint64_t>(bytes[i * 8 + b]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

inline std::string doubles_to_b64(const std::vector<double>& values) {
  return b64_encode(doubles_to_le_bytes(values));
}

inline std::vector<double> b64_to_doubles(const std::string& s) {
  return le_bytes_to_doubles(b64_decode(s));
}

}  // namespace ppgm::serial
