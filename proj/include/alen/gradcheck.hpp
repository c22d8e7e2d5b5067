// Copyright 2026 The ALEN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "alen/tensor.hpp"

namespace alen {

struct GradCheckOptions {
  double step = 1e-5;
  /// 0 checks every coordinate; otherwise a seeded sample per input.
  std::size_t max_coords_per_input = 0;
  std::uint64_t seed = 0;
  /// Coordinates (input index, flat index) left out of the comparison, e.g.
  /// parameters whose gradient is identically zero by construction.
  std::function<bool(std::size_t input, std::size_t coord)> exclude;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  /// Coordinates whose +-step probe changed a relu/clamp branch decision.
  std::size_t skipped_near_kink = 0;
};

/// Compares reverse-mode gradients of `closure` against central finite
/// differences. The closure must read `inputs` (which are perturbed in place
/// and restored) and return a scalar. Error per coordinate is
/// |analytic - numeric| / max(1e-12, |analytic| + |numeric|).
GradCheckResult grad_check(const std::function<Tensor()>& closure, std::vector<Tensor> inputs,
                           const GradCheckOptions& options = {});

double relative_error(double analytic, double numeric);

}  // namespace alen
