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

#include "alen/colorspace.hpp"
#include "alen/error.hpp"
#include "alen/pipeline.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace alen {
namespace {

using test::max_abs_diff;
using test::random_image;

/// SCNet weights computing clamp(v): conv1 channel 0 passes v, conv8 reads it.
NamedTensorStore identity_scnet() {
  NamedTensorStore w;
  for (const auto& l : SCNetSpec::standard().layers) {
    Tensor k = Tensor::zeros(l.weight_shape());
    if (l.name == "scnet.conv1") k.mutable_data()[4] = 1.0;
    if (l.name == "scnet.conv8") k.mutable_data()[32] = 1.0;
    w.add(l.name + ".w", k);
    w.add(l.name + ".b", Tensor::zeros({l.out_channels}));
  }
  return w;
}

TEST(Pipeline, GlobalBranchMatchesStepwiseOracle) {
  Rng rng(71);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const ModelBundle b = ModelBundle::seeded(seed);
    const ImageRGB img = random_image(8, 8, rng);
    const ImageRGB out = enhance_global(img, b);
    EXPECT_LT(max_abs_diff(out.data, oracle::global_branch(img, b).data), 1e-12);
    for (double v : out.data) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(Pipeline, LocalBranchMatchesStepwiseOracleAndKeepsHue) {
  Rng rng(72);
  const ModelBundle b = ModelBundle::seeded(5);
  const ImageRGB img = random_image(8, 8, rng);
  const ImageRGB out = enhance_local(img, b);
  EXPECT_LT(max_abs_diff(out.data, oracle::local_branch(img, b).data), 1e-12);
  const ImageHSV a = rgb_to_hsv(img), c = rgb_to_hsv(out);
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    if (c.value.values[i] > 1e-3 && a.saturation.values[i] > 0) {
      EXPECT_NEAR(c.hue.values[i], a.hue.values[i], 1e-9);
      EXPECT_NEAR(c.saturation.values[i], a.saturation.values[i], 1e-12);
    }
  }
}

TEST(Pipeline, IdentityScnetLeavesGlobalInputUnchanged) {
  Rng rng(73);
  ModelBundle b = ModelBundle::seeded(1);
  b.scnet_global = identity_scnet();
  const ImageRGB img = random_image(6, 6, rng);
  EXPECT_LT(max_abs_diff(enhance_global(img, b).data, mcnet_forward(img, b.mcnet_illum).data), 1e-12);
}

TEST(Pipeline, ZeroLocalScnetGivesBlack) {
  Rng rng(74);
  ModelBundle b = ModelBundle::seeded(1);
  NamedTensorStore zero;
  for (const auto& e : b.scnet_local.entries()) zero.add(e.name, Tensor::zeros(e.tensor.shape()));
  b.scnet_local = zero;
  for (double v : enhance_local(random_image(5, 5, rng), b).data) EXPECT_EQ(v, 0.0);
}

TEST(Pipeline, ColorBranchDelegates) {
  Rng rng(75);
  const ModelBundle b = ModelBundle::seeded(2);
  const ImageRGB img = random_image(5, 7, rng);
  EXPECT_EQ(enhance_color(img, b), mcnet_forward(img, b.mcnet_color));
}

TEST(Fuse, ArithmeticIdentitiesAndOracle) {
  Rng rng(76);
  const ImageRGB a = random_image(8, 8, rng), c = random_image(8, 8, rng);
  EXPECT_EQ(fuse(a, c, {1, 0, 0}, Illumination::Global), a);
  EXPECT_EQ(fuse(a, c, {0, 1, 0}, Illumination::Local), a);
  EXPECT_EQ(fuse(a, a, {0.5, 0.5, 0.5}, Illumination::Global), a);
  const FusionWeights w{0.7, 0.2, 0.3};
  const ImageRGB g = fuse(a, c, w, Illumination::Global);
  const ImageRGB l = fuse(a, c, w, Illumination::Local);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    EXPECT_NEAR(g.data[i], oracle::fused_pixel(a.data[i], c.data[i], 0.7, 0.3), 1e-15);
    EXPECT_NEAR(l.data[i], oracle::fused_pixel(a.data[i], c.data[i], 0.2, 0.3), 1e-15);
  }
  const ImageRGB big = fuse(a, c, {2, 2, 2}, Illumination::Global);
  for (double v : big.data) EXPECT_LE(v, 1.0);
  EXPECT_THROW(fuse(a, random_image(8, 7, rng), w, Illumination::Global), ShapeError);
  EXPECT_THROW((FusionWeights{-0.1, 0.5, 0.5}.validate()), Error);
}

TEST(Fuse, PreClampLinearity) {
  Rng rng(77);
  const ImageRGB a = random_image(6, 6, rng), b = random_image(6, 6, rng), c = random_image(6, 6, rng);
  const ImageRGB x = fuse_unclamped(a, c, {0.3, 0, 0.4}, Illumination::Global);
  const ImageRGB y = fuse_unclamped(b, c, {0.6, 0, 0.0}, Illumination::Global);
  ImageRGB ab = a;
  for (std::size_t i = 0; i < ab.data.size(); ++i) ab.data[i] = a.data[i] * 0.3 + b.data[i] * 0.6;
  const ImageRGB z = fuse_unclamped(ab, c, {1.0, 0, 0.4}, Illumination::Global);
  for (std::size_t i = 0; i < z.data.size(); ++i) EXPECT_NEAR(x.data[i] + y.data[i], z.data[i], 1e-15);
}

TEST(Enhance, HistogramRoutingAndInvariants) {
  const ModelBundle b = ModelBundle::seeded(3);
  Rng rng(78);
  const ImageRGB dark = random_image(8, 8, rng, 0.0, 0.3);
  const EnhancementResult r = enhance(dark, b);
  EXPECT_EQ(r.label.label, Illumination::Global);
  EXPECT_EQ(r.label.probability, 1.0);
  ASSERT_TRUE(r.i_thr.has_value());
  EXPECT_EQ(r.branch_output, enhance_global(dark, b));
  EXPECT_EQ(r.output, fuse(r.branch_output, r.color_output, r.weights_used, r.label.label));
  const EnhancementResult again = enhance(dark, b);
  EXPECT_EQ(again.output, r.output);
  for (double v : r.output.data) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }

  const ImageRGB bright = random_image(8, 8, rng, 0.0, 1.0);
  const EnhancementResult lr = enhance(bright, b);
  EXPECT_EQ(lr.label.label, Illumination::Local);
  EXPECT_EQ(lr.branch_output, enhance_local(bright, b));
}

TEST(Enhance, ForcedRoutesDiffer) {
  const ModelBundle b = ModelBundle::seeded(4);
  Rng rng(79);
  const ImageRGB img = random_image(8, 8, rng);
  const auto g = enhance(img, b, {}, Illumination::Global);
  const auto l = enhance(img, b, {}, Illumination::Local);
  EXPECT_EQ(g.color_output, l.color_output);
  EXPECT_NE(g.branch_output, l.branch_output);
  EXPECT_NE(g.output, l.output);
}

TEST(Enhance, NetworkModeNeedsClassifier) {
  ModelBundle b = ModelBundle::seeded(1);
  b.classifier_mode = ClassifierMode::Network;
  EXPECT_THROW(b.validate(), Error);
  b.classifier_config = SLCformerConfig::toy();
  b.classifier = build_default_weights(b.classifier_config, 9);
  Rng rng(80);
  const auto r = enhance(random_image(12, 12, rng), b);
  EXPECT_EQ(r.label.label, label_from_probability(r.label.probability));
  EXPECT_FALSE(r.i_thr.has_value());
}

}  // namespace
}  // namespace alen
