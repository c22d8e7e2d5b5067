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

#include "alen/estimators.hpp"
#include "alen/error.hpp"
#include "test_util.hpp"

namespace alen {
namespace {

/// Feature map [C][H][W] as nested vectors for the direct-loop oracle.
struct Map {
  std::size_t c, h, w;
  std::vector<double> v;
  double at(std::size_t ch, std::size_t y, std::size_t x) const { return v[(ch * h + y) * w + x]; }
};

Map conv_oracle(const Map& in, const NamedTensorStore& ws, const std::string& name,
                std::size_t k) {
  const Tensor& kern = ws.get(name + ".w");
  const Tensor& bias = ws.get(name + ".b");
  const std::size_t co = kern.dim(0);
  const long pad = static_cast<long>(k / 2);
  Map out{co, in.h, in.w, std::vector<double>(co * in.h * in.w)};
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t y = 0; y < in.h; ++y)
      for (std::size_t x = 0; x < in.w; ++x) {
        double acc = bias.at(o);
        for (std::size_t c = 0; c < in.c; ++c)
          for (std::size_t u = 0; u < k; ++u)
            for (std::size_t t = 0; t < k; ++t) {
              const long yy = long(y) + long(u) - pad, xx = long(x) + long(t) - pad;
              if (yy < 0 || xx < 0 || yy >= long(in.h) || xx >= long(in.w)) continue;
              acc += kern.at(((o * in.c + c) * k + u) * k + t) * in.at(c, yy, xx);
            }
        out.v[(o * in.h + y) * in.w + x] = acc;
      }
  return out;
}

Map relu_map(Map m) {
  for (double& x : m.v) x = std::max(0.0, x);
  return m;
}

Map cat(const Map& a, const Map& b) {
  Map out{a.c + b.c, a.h, a.w, a.v};
  out.v.insert(out.v.end(), b.v.begin(), b.v.end());
  return out;
}

Map plus(Map a, const Map& b) {
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
  return a;
}

Map from_tensor(const Tensor& t) { return {t.dim(0), t.dim(1), t.dim(2), test::values(t)}; }

/// Small random weights so activations stay away from the clamp.
NamedTensorStore scaled(NamedTensorStore w, double factor, Rng& rng) {
  NamedTensorStore out;
  for (const auto& e : w.entries()) {
    Tensor t = e.tensor.clone();
    for (double& x : t.mutable_data()) x = x * factor + (e.name.back() == 'b' ? rng.uniform(-0.1, 0.1) : 0.0);
    out.add(e.name, t);
  }
  return out;
}

TEST(SCNet, ParameterCountMatchesHandCount) {
  const std::size_t hand = (9 * 1 + 1) * 32 + (9 * 32 + 1) * 64 + (9 * 64 + 1) * 128 +
                           (9 * 128 + 1) * 256 + (256 + 1) * 128 + (256 + 1) * 64 +
                           (128 + 1) * 32 + (64 + 1) * 1;
  EXPECT_EQ(SCNetSpec::standard().parameter_count(), hand);
  EXPECT_EQ(build_default_weights(SCNetSpec::standard(), 1).total_elements(), hand);
}

TEST(SCNet, MatchesDirectLoopLadder) {
  Rng rng(21);
  const auto w = scaled(build_default_weights(SCNetSpec::standard(), 3), 0.5, rng);
  Tensor v = test::random_tensor({1, 5, 4}, rng, 0.0, 1.0);
  const Map in = from_tensor(v);
  const Map c1 = relu_map(conv_oracle(in, w, "scnet.conv1", 3));
  const Map c2 = relu_map(conv_oracle(c1, w, "scnet.conv2", 3));
  const Map c3 = relu_map(conv_oracle(c2, w, "scnet.conv3", 3));
  const Map c4 = relu_map(conv_oracle(c3, w, "scnet.conv4", 3));
  const Map c5 = relu_map(conv_oracle(c4, w, "scnet.conv5", 1));
  const Map c6 = relu_map(conv_oracle(cat(c5, c3), w, "scnet.conv6", 1));
  const Map c7 = relu_map(conv_oracle(cat(c6, c2), w, "scnet.conv7", 1));
  const Map c8 = conv_oracle(cat(c7, c1), w, "scnet.conv8", 1);
  const Tensor out = scnet_forward(v, w);
  ASSERT_EQ(out.shape(), (Shape{1, 5, 4}));
  for (std::size_t i = 0; i < c8.v.size(); ++i) {
    EXPECT_NEAR(out.at(i), std::clamp(c8.v[i], 0.0, 1.0), 1e-12);
  }
}

TEST(SCNet, ShapeRangeAndZeroWeights) {
  Rng rng(22);
  const auto w = build_default_weights(SCNetSpec::standard(), 4);
  for (auto [h, wd] : {std::pair{1, 1}, std::pair{3, 7}, std::pair{6, 2}}) {
    Plane p = Plane::filled(h, wd, 0.0);
    for (auto& x : p.values) x = rng.uniform();
    const Plane out = scnet_forward(p, w);
    EXPECT_EQ(out.height, std::size_t(h));
    EXPECT_EQ(out.width, std::size_t(wd));
    for (double x : out.values) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    }
  }
  NamedTensorStore zero;
  for (const auto& e : w.entries()) zero.add(e.name, Tensor::zeros(e.tensor.shape()));
  for (double x : scnet_forward(Plane::filled(4, 4, 0.7), zero).values) EXPECT_EQ(x, 0.0);
}

TEST(SCNet, SkipPathsAreLive) {
  Rng rng(23);
  const auto w = scaled(build_default_weights(SCNetSpec::standard(), 5), 0.5, rng);
  Tensor v = test::random_tensor({1, 6, 6}, rng, 0.0, 1.0);
  const auto base = test::values(scnet_forward(v, w));
  // Zero the columns of conv6/7/8 that read the skip half of their input.
  for (auto [name, from] : {std::pair{"scnet.conv6", 128}, std::pair{"scnet.conv7", 64},
                            std::pair{"scnet.conv8", 32}}) {
    NamedTensorStore cut = w.clone();
    const Tensor& k = cut.get(std::string(name) + ".w");
    Tensor kk = k;
    const std::size_t co = k.dim(0), ci = k.dim(1);
    auto d = kk.mutable_data();
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t c = std::size_t(from); c < ci; ++c) d[o * ci + c] = 0.0;
    EXPECT_GT(test::max_abs_diff(test::values(scnet_forward(v, cut)), base), 1e-9) << name;
  }
}

TEST(SCNet, MissingOrMisshapedWeight) {
  auto w = build_default_weights(SCNetSpec::standard(), 1);
  NamedTensorStore partial;
  for (const auto& e : w.entries())
    if (e.name != "scnet.conv4.b") partial.add(e.name, e.tensor);
  EXPECT_THROW(validate_weights(SCNetSpec::standard(), partial), Error);
  EXPECT_THROW(scnet_forward(Plane::filled(2, 2, 0.5), partial), Error);
  NamedTensorStore wrong;
  for (const auto& e : w.entries())
    wrong.add(e.name, e.name == "scnet.conv1.w" ? Tensor::zeros({32, 1, 1, 1}) : e.tensor);
  EXPECT_THROW(validate_weights(SCNetSpec::standard(), wrong), Error);
}

TEST(MCNet, MatchesDirectLoopWiring) {
  Rng rng(24);
  const auto w = scaled(build_default_weights(MCNetSpec::standard(), 6), 0.7, rng);
  Tensor img = test::random_tensor({3, 4, 5}, rng, 0.0, 1.0);
  Map merged{0, 4, 5, {}};
  for (std::size_t c = 0; c < 3; ++c) {
    Map ch{1, 4, 5, std::vector<double>(img.data().begin() + c * 20, img.data().begin() + (c + 1) * 20)};
    const Map a0 = relu_map(conv_oracle(ch, w, "mcnet.initial", 3));
    const Map a1 = relu_map(conv_oracle(a0, w, "mcnet.conv1", 3));
    const Map a2 = relu_map(conv_oracle(a1, w, "mcnet.conv2", 3));
    const Map a3 = relu_map(plus(conv_oracle(a2, w, "mcnet.conv3", 3), conv_oracle(a1, w, "mcnet.ca1", 1)));
    const Map a4 = relu_map(plus(conv_oracle(a3, w, "mcnet.conv4", 3), conv_oracle(a3, w, "mcnet.ca2", 1)));
    const Map a5 = relu_map(conv_oracle(a4, w, "mcnet.conv5", 3));
    const Map a6 = relu_map(conv_oracle(a5, w, "mcnet.adapter", 1));
    const Map a7 = relu_map(conv_oracle(a6, w, "mcnet.conv6", 3));
    merged = cat(merged, conv_oracle(a7, w, "mcnet.final", 1));
  }
  const Map fused = conv_oracle(merged, w, "mcnet.fusion", 3);
  const Tensor out = mcnet_forward(img, w);
  for (std::size_t i = 0; i < fused.v.size(); ++i) {
    const double want = 1.0 / (1.0 + std::exp(-fused.v[i]));
    EXPECT_NEAR(out.at(i), want, 1e-12);
    EXPECT_GT(out.at(i), 0.0);
    EXPECT_LT(out.at(i), 1.0);
  }
}

TEST(MCNet, BranchWeightsAreSharedAcrossChannels) {
  Rng rng(25);
  const auto w = build_default_weights(MCNetSpec::standard(), 7);
  Tensor img = test::random_tensor({3, 4, 4}, rng, 0.0, 1.0);
  Tensor swapped = concat(concat(slice(img, 0, 2, 3), slice(img, 0, 1, 2), 0), slice(img, 0, 0, 1), 0);
  for (std::size_t c = 0; c < 3; ++c) {
    const auto a = test::values(mcnet_branch(slice(img, 0, c, c + 1), w));
    const auto b = test::values(mcnet_branch(slice(swapped, 0, 2 - c, 3 - c), w));
    EXPECT_EQ(a, b);
  }
}

TEST(MCNet, ShapePreservedOnOddSizes) {
  Rng rng(26);
  const auto w = build_default_weights(MCNetSpec::standard(), 8);
  const ImageRGB img = test::random_image(3, 1, rng);
  const ImageRGB out = mcnet_forward(img, w);
  EXPECT_EQ(out.height, 3u);
  EXPECT_EQ(out.width, 1u);
}

TEST(EstimatorInit, DeterministicBoundedAndSeedSensitive) {
  const auto spec = SCNetSpec::standard();
  const auto a = build_default_weights(spec, 9);
  EXPECT_TRUE(a.bit_equal(build_default_weights(spec, 9)));
  EXPECT_FALSE(a.bit_equal(build_default_weights(spec, 10)));
  for (const auto& layer : spec.layers) {
    const double bound = std::sqrt(6.0 / double(layer.in_channels * layer.kernel * layer.kernel));
    for (double x : a.get(layer.name + ".w").data()) EXPECT_LE(std::abs(x), bound);
    for (double x : a.get(layer.name + ".b").data()) EXPECT_EQ(x, 0.0);
  }
  const auto m = build_default_weights(MCNetSpec::standard(), 9);
  EXPECT_TRUE(m.contains("mcnet.adapter.w"));
  EXPECT_EQ(m.total_elements(), MCNetSpec::standard().parameter_count());
}

}  // namespace
}  // namespace alen
