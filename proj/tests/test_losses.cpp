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

#include "alen/error.hpp"
#include "alen/gradcheck.hpp"
#include "alen/losses.hpp"
#include "test_util.hpp"

namespace alen {
namespace {

using test::random_tensor;

double ssim_formula(double mx, double my, double vx, double vy, double cxy, double c1 = 1e-4,
                    double c2 = 9e-4) {
  return ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
}

TEST(Bce, SymmetricPointAndPerfectPrediction) {
  Tensor half = Tensor::full({4}, 0.5);
  EXPECT_NEAR(bce_loss(half, Tensor::from({4}, {0, 1, 1, 0})).item(), std::log(2.0), 1e-15);
  Tensor y = Tensor::from({3}, {0, 1, 1});
  EXPECT_LE(bce_loss(y, y).item(), -std::log(1 - 1e-7) + 1e-15);
  EXPECT_THROW(bce_loss(half, Tensor::zeros({3})), Error);
}

TEST(Bce, GradientMatchesClosedForm) {
  Tensor p = Tensor::from({3}, {0.2, 0.7, 0.9}).set_requires_grad(true);
  Tensor y = Tensor::from({3}, {0, 1, 0});
  Tape tape;
  Tensor l;
  {
    TapeScope s(tape);
    l = bce_loss(p, y);
  }
  backward(l, tape);
  const auto g = p.gradient();
  for (std::size_t i = 0; i < 3; ++i) {
    const double ph = p.at(i), yy = y.at(i);
    EXPECT_NEAR(g[i], (ph - yy) / (ph * (1 - ph)) / 3.0, 1e-12);
  }
  const auto r = grad_check([&] { return bce_loss(p, y); }, {p});
  EXPECT_LT(r.max_rel_error, 1e-8);
}

TEST(Mse, Identities) {
  Rng rng(31);
  Tensor a = random_tensor({2, 3, 3}, rng);
  EXPECT_EQ(mse_loss(a, a).item(), 0.0);
  EXPECT_EQ(mse_loss(Tensor::zeros({1}), Tensor::full({1}, 1.0)).item(), 1.0);
  EXPECT_DOUBLE_EQ(mse_loss(Tensor::full({5}, 0.25), Tensor::full({5}, 0.5)).item(), 0.0625);
  EXPECT_THROW(mse_loss(a, random_tensor({3, 3}, rng)), Error);
}

TEST(Ssim, IdenticalAndSymmetric) {
  Rng rng(32);
  Tensor a = random_tensor({3, 12, 13}, rng, 0, 1);
  Tensor b = random_tensor({3, 12, 13}, rng, 0, 1);
  EXPECT_NEAR(ssim_loss(a, a).item(), 0.0, 1e-12);
  EXPECT_EQ(ssim_loss(a, b).item(), ssim_loss(b, a).item());
  EXPECT_GE(ssim_loss(a, b).item(), 0.0);
}

TEST(Ssim, ZeroVersusOnePlaneClosedForm) {
  Tensor z = Tensor::zeros({1, 8, 8});
  Tensor o = Tensor::full({1, 8, 8}, 1.0);
  const double want = 1.0 - ssim_formula(0, 1, 0, 0, 0);
  EXPECT_NEAR(ssim_loss(z, o).item(), want, 1e-15);
  EXPECT_GT(ssim_loss(z, o).item(), 0.999);
}

TEST(Ssim, SmallPlaneMatchesWholePlaneOracle) {
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x = random_tensor({1, 8, 8}, rng, 0, 1);
    Tensor y = random_tensor({1, 8, 8}, rng, 0, 1);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < 64; ++i) {
      mx += x.at(i) / 64;
      my += y.at(i) / 64;
    }
    double vx = 0, vy = 0, cxy = 0;
    for (std::size_t i = 0; i < 64; ++i) {
      vx += (x.at(i) - mx) * (x.at(i) - mx) / 64;
      vy += (y.at(i) - my) * (y.at(i) - my) / 64;
      cxy += (x.at(i) - mx) * (y.at(i) - my) / 64;
    }
    EXPECT_NEAR(ssim_mean(x, y).item(), ssim_formula(mx, my, vx, vy, cxy), 1e-10);
  }
}

TEST(Ssim, GaussianWindowMatchesBruteForce) {
  Rng rng(34);
  const std::size_t h = 13, w = 12, m = 11;
  Tensor x = random_tensor({1, h, w}, rng, 0, 1);
  Tensor y = random_tensor({1, h, w}, rng, 0, 1);
  std::vector<double> g(m * m);
  double total = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double di = double(i) - 5, dj = double(j) - 5;
      g[i * m + j] = std::exp(-(di * di + dj * dj) / (2 * 1.5 * 1.5));
      total += g[i * m + j];
    }
  for (double& v : g) v /= total;
  EXPECT_LT(test::max_abs_diff(gaussian_window(11, 1.5), g), 1e-16);

  double acc = 0;
  std::size_t n = 0;
  for (std::size_t oy = 0; oy + m <= h; ++oy)
    for (std::size_t ox = 0; ox + m <= w; ++ox) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          const double k = g[i * m + j];
          const double a = x.at((oy + i) * w + ox + j), b = y.at((oy + i) * w + ox + j);
          mx += k * a;
          my += k * b;
          sxx += k * a * a;
          syy += k * b * b;
          sxy += k * a * b;
        }
      acc += ssim_formula(mx, my, sxx - mx * mx, syy - my * my, sxy - mx * my);
      ++n;
    }
  EXPECT_EQ(n, 6u);
  EXPECT_NEAR(ssim_mean(x, y).item(), acc / double(n), 1e-12);
  EXPECT_EQ(ssim_map(x, y, {}).numel(), 6u);
}

TEST(Ssim, RgbAveragesChannels) {
  Rng rng(35);
  Tensor x = random_tensor({3, 6, 6}, rng, 0, 1);
  Tensor y = random_tensor({3, 6, 6}, rng, 0, 1);
  double acc = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    acc += ssim_mean(slice(x, 0, c, c + 1), slice(y, 0, c, c + 1)).item() / 3;
  }
  EXPECT_NEAR(ssim_mean(x, y).item(), acc, 1e-15);
}

TEST(Perceptual, IdentityExtractorReducesToMse) {
  ConvLayerSpec spec{"id", 3, 3, 1, 1, 0};
  NamedTensorStore w;
  std::vector<double> k(9, 0.0);
  k[0] = k[4] = k[8] = 1.0;
  w.add("id.w", Tensor::from({3, 3, 1, 1}, k));
  w.add("id.b", Tensor::zeros({3}));
  FeatureExtractor fx({FeatureLayer{spec, false}}, w);
  Rng rng(36);
  Tensor a = random_tensor({3, 4, 4}, rng, 0, 1);
  Tensor b = random_tensor({3, 4, 4}, rng, 0, 1);
  EXPECT_NEAR(perceptual_loss(a, b, fx).item(), mse_loss(a, b).item(), 1e-15);
  EXPECT_EQ(perceptual_loss(a, a, fx).item(), 0.0);
  EXPECT_THROW(perceptual_loss(a, b, fx, {1}), Error);
}

TEST(Perceptual, MatchesTwoPassOracle) {
  const FeatureExtractor fx = FeatureExtractor::seeded();
  Rng rng(37);
  Tensor a = random_tensor({3, 4, 4}, rng, 0, 1);
  Tensor b = random_tensor({3, 4, 4}, rng, 0, 1);
  const auto fa = fx.features(a);
  const auto fb = fx.features(b);
  ASSERT_EQ(fa.size(), 3u);
  double want = 0;
  for (std::size_t j = 0; j < fa.size(); ++j) {
    double d = 0;
    for (std::size_t i = 0; i < fa[j].numel(); ++i) d += std::pow(fa[j].at(i) - fb[j].at(i), 2);
    want += d / double(fa[j].numel());
  }
  EXPECT_NEAR(perceptual_loss(a, b, fx).item(), want, 1e-12);
  const double tap2 = perceptual_loss(a, b, fx, {2}).item();
  double d2 = 0;
  for (std::size_t i = 0; i < fa[2].numel(); ++i) d2 += std::pow(fa[2].at(i) - fb[2].at(i), 2);
  EXPECT_NEAR(tap2, d2 / double(fa[2].numel()), 1e-12);
}

TEST(Perceptual, SingleChannelIsReplicated) {
  const FeatureExtractor fx = FeatureExtractor::seeded();
  Rng rng(38);
  Tensor a = random_tensor({1, 4, 4}, rng, 0, 1);
  Tensor b = random_tensor({1, 4, 4}, rng, 0, 1);
  Tensor a3 = concat(concat(a, a, 0), a, 0);
  Tensor b3 = concat(concat(b, b, 0), b, 0);
  EXPECT_EQ(perceptual_loss(a, b, fx).item(), perceptual_loss(a3, b3, fx).item());
}

TEST(Composites, DefinitionsHoldBitExactly) {
  const FeatureExtractor fx = FeatureExtractor::seeded();
  Rng rng(39);
  Tensor a = random_tensor({3, 5, 5}, rng, 0, 1);
  Tensor b = random_tensor({3, 5, 5}, rng, 0, 1);
  EXPECT_EQ(loss_local(a, b).item(), ssim_loss(a, b).item());
  const double sep = (mse_loss(a, b).item() + ssim_loss(a, b).item()) + perceptual_loss(a, b, fx).item();
  EXPECT_EQ(loss_global_or_color(a, b, fx).item(), sep);
  EXPECT_NEAR(loss_global_or_color(a, a, fx).item(), 0.0, 1e-12);
}

TEST(Composites, GradientThroughAllTerms) {
  const FeatureExtractor fx = FeatureExtractor::seeded();
  Rng rng(40);
  Tensor a = random_tensor({3, 4, 4}, rng, 0, 1);
  Tensor b = random_tensor({3, 4, 4}, rng, 0, 1);
  const auto r = grad_check([&] { return loss_global_or_color(a, b, fx); }, {a});
  EXPECT_GT(r.checked, 0u);
  EXPECT_LT(r.max_rel_error, 1e-5);
}

}  // namespace
}  // namespace alen
