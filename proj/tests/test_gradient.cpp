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

#include <gtest/gtest.h>

#include <cmath>

#include "alen/gradcheck.hpp"
#include "alen/gradsuite.hpp"
#include "alen/losses.hpp"
#include "alen/slcformer.hpp"
#include "test_util.hpp"

namespace alen {
namespace {

using test::random_tensor;

/// square() with a deliberately wrong backward pass.
Tensor broken_square(const Tensor& x) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.at(i) * x.at(i);
  Tensor y = Tensor::from(x.shape(), std::move(out));
  return record_op(y, {x}, [x](std::span<const double> g) {
    std::vector<double> gx(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] = 3.0 * x.at(i) * g[i];
    accumulate_grad(x, gx);
  });
}

TEST(GradCheck, RelativeErrorDefinition) {
  EXPECT_DOUBLE_EQ(relative_error(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(1.0, 3.0), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(0.0, 0.0), 0.0);
}

TEST(GradCheck, AcceptsCorrectGradient) {
  Rng rng(1);
  Tensor x = random_tensor({6}, rng);
  const auto r = grad_check([&] { return sum(mul(square(x), x)); }, {x});
  EXPECT_EQ(r.checked, 6u);
  EXPECT_LT(r.max_rel_error, 1e-8);
}

TEST(GradCheck, FlagsBrokenBackward) {
  Rng rng(2);
  Tensor x = random_tensor({4}, rng, 0.5, 1.0);
  const auto r = grad_check([&] { return sum(broken_square(x)); }, {x});
  EXPECT_NEAR(r.max_rel_error, 0.2, 1e-6);  // |3-2| / (3+2)
}

TEST(GradCheck, ExcludedCoordinatesAreNotProbed) {
  Rng rng(3);
  Tensor x = random_tensor({4}, rng, 0.5, 1.0);
  GradCheckOptions opt;
  opt.exclude = [](std::size_t, std::size_t coord) { return coord < 3; };
  const auto r = grad_check([&] { return sum(broken_square(x)); }, {x}, opt);
  EXPECT_EQ(r.checked, 1u);
}

TEST(GradCheck, SkipsProbesAcrossReluKink) {
  Tensor x = Tensor::from({3}, {1e-7, 0.5, -0.5});
  const auto r = grad_check([&] { return sum(relu(x)); }, {x});
  EXPECT_EQ(r.skipped_near_kink, 1u);
  EXPECT_EQ(r.checked, 2u);
  EXPECT_LT(r.max_rel_error, 1e-9);
}

TEST(GradCheck, RestoresInputsAndFlags) {
  Rng rng(4);
  Tensor x = random_tensor({5}, rng);
  const auto before = test::values(x);
  grad_check([&] { return sum(square(x)); }, {x});
  EXPECT_EQ(test::values(x), before);
  EXPECT_FALSE(x.requires_grad());
}

// Mixed tolerance: relative 1e-5 plus an absolute floor of 1e-9 * max|grad|.
TEST(GradCheck, GaussianWindowSsimGradient) {
  Rng rng(5);
  Tensor x = random_tensor({1, 12, 12}, rng, 0.0, 1.0).set_requires_grad(true);
  Tensor y = random_tensor({1, 12, 12}, rng, 0.0, 1.0);
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = ssim_loss(x, y);
  }
  backward(loss, tape);
  const auto g = x.gradient();
  double gmax = 0.0;
  for (double v : g) gmax = std::max(gmax, std::abs(v));
  const double h = 1e-5;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    auto d = x.mutable_data();
    const double orig = d[i];
    d[i] = orig + h;
    const double plus = ssim_loss(x, y).item();
    d[i] = orig - h;
    const double minus = ssim_loss(x, y).item();
    d[i] = orig;
    const double numeric = (plus - minus) / (2 * h);
    EXPECT_LE(std::abs(g[i] - numeric), 1e-5 * (std::abs(g[i]) + std::abs(numeric)) + 1e-9 * gmax)
        << "coord " << i;
  }
}

TEST(GradCheck, AttentionKeyBiasHasZeroGradient) {
  NamedTensorStore w;
  Rng rng(6);
  const std::string p = "blk";
  const std::size_t c = 8;
  w.add(p + ".qkv.w", random_tensor({3 * c, c}, rng, -0.5, 0.5));
  w.add(p + ".qkv.b", random_tensor({3 * c}, rng, -0.5, 0.5).set_requires_grad(true));
  w.add(p + ".proj.w", random_tensor({c, c}, rng, -0.5, 0.5));
  w.add(p + ".proj.b", random_tensor({c}, rng));
  w.add(p + ".rpb.w", random_tensor({9, 2}, rng));
  Tensor x = random_tensor({4, 4, c}, rng);
  BlockGeometry g{4, 4, c, 2, 2};
  Tape tape;
  Tensor out;
  {
    TapeScope scope(tape);
    out = sum(square(window_attention(x, w, p, g, {})));
  }
  backward(out, tape);
  const auto grad = w.get(p + ".qkv.b").gradient();
  double key_max = 0.0, other_max = 0.0;
  for (std::size_t i = 0; i < 3 * c; ++i) {
    if (i >= c && i < 2 * c) {
      key_max = std::max(key_max, std::abs(grad[i]));
    } else {
      other_max = std::max(other_max, std::abs(grad[i]));
    }
  }
  EXPECT_LT(key_max, 1e-12);
  EXPECT_GT(other_max, 1e-6);
}

TEST(GradSuite, SingleSeedPassesAndFaultIsCaught) {
  GradSuiteOptions opt;
  opt.seeds = 1;
  opt.first_seed = 3;
  opt.inject_fault = true;
  const auto rows = run_gradient_suite(opt);
  ASSERT_FALSE(rows.empty());
  for (const auto& r : rows) {
    if (r.name == "injected_fault") {
      EXPECT_FALSE(r.pass());
    } else {
      EXPECT_TRUE(r.pass()) << r.name << " " << r.max_rel_error;
    }
  }
}

}  // namespace
}  // namespace alen
