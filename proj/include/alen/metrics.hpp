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

#include <optional>
#include <string>
#include <vector>

#include "alen/image.hpp"
#include "alen/losses.hpp"

namespace alen {

/// 10 log10(1 / MSE); +infinity for identical images.
double psnr(const ImageRGB& a, const ImageRGB& b);

/// Mean windowed SSIM of two planes; shares the loss kernel exactly.
double ssim_index(const Plane& a, const Plane& b, const SSIMParams& p = {});
/// RGB images are compared on their luma planes.
double ssim_index(const ImageRGB& a, const ImageRGB& b, const SSIMParams& p = {});

struct UqiResult {
  double value = 0.0;
  std::size_t windows_used = 0;
  std::size_t windows_skipped = 0;  // zero denominator
};
UqiResult uqi_detail(const Plane& a, const Plane& b);
UqiResult uqi_detail(const ImageRGB& a, const ImageRGB& b);
double uqi(const ImageRGB& a, const ImageRGB& b);

struct Lab {
  double l;
  double a;
  double b;
};
/// sRGB (D65) to CIELAB.
Lab srgb_to_lab(double r, double g, double b);
/// Mean CIE76 colour difference.
double delta_e(const ImageRGB& a, const ImageRGB& b);

/// Per-pixel max(R,G,B).
Plane lightness(const ImageRGB& img);
/// Nearest-neighbour sample of `grid` x `grid` sites at floor((i + 0.5) * H / grid).
std::vector<double> sample_grid(const Plane& p, std::size_t grid);
/// Lightness order error on a grid x grid sample.
double loe(const ImageRGB& original, const ImageRGB& enhanced, std::size_t grid = 50);

struct MetricRow {
  std::string image;
  std::optional<double> psnr;  // may be +infinity
  std::optional<double> ssim;
  std::optional<double> uqi;
  std::optional<double> delta_e;
  std::optional<double> loe;
};

struct MetricReport {
  std::vector<MetricRow> rows;
  bool full_reference = true;

  struct Aggregate {
    MetricRow mean;
    std::size_t infinite_psnr = 0;
  };
  /// Arithmetic mean per column; infinite PSNR values are excluded and
  /// counted.
  Aggregate aggregate() const;

  /// Header `image,psnr,ssim,uqi,delta_e,loe` (full-reference columns
  /// omitted without a reference), one row per image, then a `mean` row.
  std::string to_csv() const;
  std::string to_markdown() const;
};

/// Metrics for one enhanced image; reference may be absent, original may be
/// absent (no LOE).
MetricRow evaluate_pair(const std::string& name, const ImageRGB& enhanced,
                        const ImageRGB* reference, const ImageRGB* original,
                        std::size_t loe_grid = 50);

}  // namespace alen
