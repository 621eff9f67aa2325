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

#include "ppgm/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace ppgm::num {

void adam_step(ParamStore& params, const GradMap& grads, AdamState& state) {
  const AdamHyper& h = state.hyper;
  state.t += 1;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
  for (const auto& [name, grad] : grads) {
    auto it = params.find(name);
    if (it == params.end())
      throw std::invalid_argument("adam_step: gradient for unknown parameter '" + name + "'");
    Tensor& param = it->second;
    if (param.shape() != grad.shape())
      throw std::invalid_argument("adam_step: shape mismatch for '" + name + "', " +
                                  shape_str(param.shape()) + " vs " + shape_str(grad.shape()));
    auto& mom = state.moments[name];
    if (mom.m.empty()) {
      mom.m.assign(param.numel(), 0.0);
      mom.v.assign(param.numel(), 0.0);
    }
    auto p = param.mutable_data();
    const auto g = grad.data();
    for (size_t i = 0; i < p.size(); ++i) {
      mom.m[i] = h.beta1 * mom.m[i] + (1.0 - h.beta1) * g[i];
      mom.v[i] = h.beta2 * mom.v[i] + (1.0 - h.beta2) * g[i] * g[i];
      const double mhat = mom.m[i] / bc1;
      const double vhat = mom.v[i] / bc2;
      p[i] -= h.lr * mhat / (std::sqrt(vhat) + h.epsilon);
    }
  }
}

}  // namespace ppgm::num
