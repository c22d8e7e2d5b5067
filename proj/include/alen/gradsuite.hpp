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
#include <string>
#include <vector>

namespace alen {

struct GradSuiteOptions {
  std::size_t seeds = 10;
  std::uint64_t first_seed = 0;
  /// Sampled coordinates per parameter tensor for the full networks.
  std::size_t network_coords = 4;
  /// Adds an op whose backward pass is deliberately wrong.
  bool inject_fault = false;
};

struct GradSuiteRow {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  bool pass() const { return checked > 0 && max_rel_error < tolerance; }
};

/// Finite-difference check of every differentiable op, the losses, and the
/// SCNet, MCNet and transformer-block compositions on small random inputs.
std::vector<GradSuiteRow> run_gradient_suite(const GradSuiteOptions& options = {});

}  // namespace alen
