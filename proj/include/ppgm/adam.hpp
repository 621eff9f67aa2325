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
#include <map>
#include <string>
#include <vector>

#include "ppgm/tensor.hpp"

namespace ppgm::num {

struct AdamHyper {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-parameter first/second moment estimates plus the global step counter.
struct AdamState {
  AdamHyper hyper;
  int64_t t = 0;
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };
  std::map<std::string, Moments> moments;
};

/// Standard Adam update with bias correction, applied in place to every
/// parameter that has an entry in grads. Gradient keys must be a subset of
/// params and shapes must match.
void adam_step(ParamStore& params, const GradMap& grads, AdamState& state);

}  // namespace ppgm::num
