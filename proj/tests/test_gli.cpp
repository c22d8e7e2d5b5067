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
#include <filesystem>

#include "alen/error.hpp"
#include "alen/gli.hpp"
#include "alen/persistence.hpp"
#include "alen/synthetic.hpp"
#include "test_util.hpp"

namespace alen {
namespace {

namespace fs = std::filesystem;

TEST(Grayscale, ClosedFormValues) {
  EXPECT_EQ(to_grayscale(ImageRGB::filled(2, 2, 1.0)).values, std::vector<std::uint8_t>(4, 255));
  EXPECT_EQ(to_grayscale(ImageRGB::filled(2, 2, 0.0)).values, std::vector<std::uint8_t>(4, 0));
  ImageRGB red = ImageRGB::filled(1, 1, 0.0);
  red.at(0, 0, 0) = 1.0;
  EXPECT_EQ(to_grayscale(red).values[0], 76);
}

TEST(Histogram, ConstantImageAndConservation) {
  ImageGray g{2, 2, {7, 7, 7, 7}};
  const Histogram h = histogram(g);
  EXPECT_EQ(h[7], 4u);
  std::uint64_t total = 0;
  for (auto c : h) total += c;
  EXPECT_EQ(total, 4u);
}

TEST(Threshold, WorkedExamples) {
  Histogram h{};
  h[0] = 100;
  h[200] = 5;
  EXPECT_EQ(threshold_intensity(h, 10), 0);
  EXPECT_EQ(threshold_intensity(h, 5), 200);
  EXPECT_EQ(threshold_intensity(h, 101), std::nullopt);
}

TEST(Threshold, PixelThresholdParsingAndResolution) {
  EXPECT_EQ(PixelThreshold{}.resolve(100), 1u);
  EXPECT_EQ(PixelThreshold{}.resolve(1'000'000), 1000u);
  EXPECT_EQ(PixelThreshold{}.resolve(1500), 2u);  // round(1.5) away from zero
  EXPECT_EQ(PixelThreshold::parse("12").resolve(50), 12u);
  EXPECT_EQ(PixelThreshold::parse("0.25").resolve(100), 25u);
  EXPECT_EQ(PixelThreshold::parse("0.001").resolve(10), 1u);
  EXPECT_THROW(PixelThreshold::parse("0"), Error);
  EXPECT_THROW(PixelThreshold::parse("-3"), Error);
  EXPECT_THROW(PixelThreshold::parse("1.5"), Error);
  EXPECT_THROW(PixelThreshold::parse("abc"), Error);
  LabelerConfig bad;
  bad.intensity_cutoff = 256;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Label, RuleExamples) {
  LabelerConfig cfg;
  EXPECT_EQ(label(ImageRGB::filled(4, 4, 0.0), cfg).label, Illumination::Global);
  EXPECT_EQ(label(ImageRGB::filled(4, 4, 128.0 / 255.0), cfg).label, Illumination::Global);
  EXPECT_EQ(label(ImageRGB::filled(4, 4, 129.0 / 255.0), cfg).label, Illumination::Local);

  ImageRGB bimodal = ImageRGB::filled(4, 4, 10.0 / 255.0);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t y = 0; y < 2; ++y) bimodal.at(c, y, x) = 240.0 / 255.0;
  cfg.threshold = PixelThreshold::count(4);
  const GliLabel l = label(bimodal, cfg);
  EXPECT_EQ(l.label, Illumination::Local);
  EXPECT_EQ(l.i_thr, 240);

  cfg.threshold = PixelThreshold::count(17);
  EXPECT_EQ(label(bimodal, cfg).i_thr, std::nullopt);
  EXPECT_EQ(label(bimodal, cfg).label, Illumination::Global);
  EXPECT_EQ(label_from_threshold(std::nullopt, 0), Illumination::Global);
}

TEST(LabelDataset, EmptyFixtureAndDeterminism) {
  const fs::path dir = fs::temp_directory_path() / "alen_gli_fixture";
  fs::remove_all(dir);
  fs::create_directories(dir / "sub");
  EXPECT_TRUE(label_dataset(dir, {}).rows.empty());
  EXPECT_EQ(manifest_csv({}), "path,label,i_thr\n");

  Rng rng(41);
  save_image(synthetic_dark(16, rng), dir / "a_dark.png");
  save_image(synthetic_bimodal(16, rng), dir / "b_bimodal.png");
  save_image(synthetic_dark(16, rng), dir / "sub" / "c_dark.ppm");
  save_image(synthetic_bimodal(16, rng), dir / "sub" / "d_bimodal.png");
  write_file_atomic(dir / "broken.png", "not an image");

  const LabelingResult r = label_dataset(dir, {});
  ASSERT_EQ(r.rows.size(), 4u);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_NE(r.failures[0].find("broken.png"), std::string::npos);
  std::size_t global = 0;
  for (const auto& row : r.rows) global += row.label == Illumination::Global;
  EXPECT_EQ(global, 2u);
  EXPECT_TRUE(std::is_sorted(r.rows.begin(), r.rows.end(),
                             [](const auto& a, const auto& b) { return a.path < b.path; }));
  EXPECT_EQ(manifest_csv(r.rows), manifest_csv(label_dataset(dir, {}).rows));
  fs::remove_all(dir);
}

// Per-pixel and per-bin brute force over random images with random thresholds
// (the full 1000-image run is in the acceptance binary).
TEST(GliOracle, BruteForceAgreement) {
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const ImageRGB img = test::random_image(16, 16, rng, 0.0, rng.uniform(0.05, 1.0));
    const ImageGray g = to_grayscale(img);
    Histogram tally{};
    for (std::size_t i = 0; i < 256; ++i) {
      const double y = 0.299 * img.data[i] + 0.587 * img.data[256 + i] + 0.114 * img.data[512 + i];
      const auto v = static_cast<std::uint8_t>(std::floor(y * 255.0 + 0.5));
      ASSERT_EQ(g.values[i], v);
      ++tally[v];
    }
    const Histogram h = histogram(g);
    ASSERT_EQ(h, tally);
    const std::uint64_t t = 1 + rng.below(8);
    std::optional<int> scan;
    for (int i = 0; i < 256; ++i)
      if (h[i] >= t) scan = i;
    ASSERT_EQ(threshold_intensity(h, t), scan);
  }
}

}  // namespace
}  // namespace alen
