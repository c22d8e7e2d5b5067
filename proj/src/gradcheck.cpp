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

#include "alen/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace alen {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-12, std::abs(analytic) + std::abs(numeric));
}

namespace {

struct Probe {
  double value;
  std::uint64_t signature;
};

Probe evaluate(const std::function<Tensor()>& closure) {
  KinkMonitor monitor;
  const Tensor out = closure();
  if (out.numel() != 1) throw ShapeError("grad_check: closure output is not scalar");
  return {out.item(), monitor.signature()};
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor()>& closure, std::vector<Tensor> inputs,
                           const GradCheckOptions& options) {
  std::vector<bool> saved_flags;
  for (Tensor& t : inputs) {
    saved_flags.push_back(t.requires_grad());
    t.set_requires_grad(true);
    t.zero_grad();
  }

  std::uint64_t base_signature = 0;
  {
    Tape tape;
    Tensor out;
    {
      TapeScope scope(tape);
      KinkMonitor monitor;
      out = closure();
      base_signature = monitor.signature();
    }
    if (out.numel() != 1) throw ShapeError("grad_check: closure output is not scalar");
    tape.backward(out);
  }
  std::vector<std::vector<double>> analytic;
  for (const Tensor& t : inputs) analytic.push_back(t.gradient());

  GradCheckResult result;
  std::mt19937_64 rng(options.seed);
  for (std::size_t n = 0; n < inputs.size(); ++n) {
    Tensor& t = inputs[n];
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < t.numel(); ++i) {
      if (!options.exclude || !options.exclude(n, i)) order.push_back(i);
    }
    std::size_t wanted = order.size();
    if (options.max_coords_per_input > 0 && options.max_coords_per_input < order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      wanted = options.max_coords_per_input;
    }
    std::size_t done = 0;
    for (std::size_t idx : order) {
      if (done == wanted) break;
      auto data = t.mutable_data();
      const double original = data[idx];
      data[idx] = original + options.step;
      const Probe plus = evaluate(closure);
      data[idx] = original - options.step;
      const Probe minus = evaluate(closure);
      data[idx] = original;
      if (plus.signature != base_signature || minus.signature != base_signature) {
        ++result.skipped_near_kink;
        continue;
      }
      const double numeric = (plus.value - minus.value) / (2.0 * options.step);
      result.max_rel_error =
          std::max(result.max_rel_error, relative_error(analytic[n][idx], numeric));
      ++result.checked;
      ++done;
    }
  }

  for (std::size_t n = 0; n < inputs.size(); ++n) {
    inputs[n].zero_grad();
    inputs[n].set_requires_grad(saved_flags[n]);
  }
  return result;
}

}  // namespace alen
