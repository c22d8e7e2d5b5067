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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "alen/image.hpp"

namespace alen {

/// Pixel-count threshold T, either absolute or a fraction of the pixel count.
struct PixelThreshold {
  enum class Kind { Default, Count, Fraction };
  Kind kind = Kind::Default;
  double value = 0.0;

  static PixelThreshold count(std::uint64_t n);
  static PixelThreshold fraction(double f);
  /// "12" is a count; "0.01" (a value in (0,1) written with a point) is a
  /// fraction.
  static PixelThreshold parse(const std::string& text);

  /// Absolute threshold for an image with `pixels` pixels. The default is
  /// max(1, round(0.001 * pixels)).
  std::uint64_t resolve(std::uint64_t pixels) const;
};

struct LabelerConfig {
  PixelThreshold threshold;
  int intensity_cutoff = 128;

  void validate() const;
};

using Histogram = std::array<std::uint64_t, 256>;

/// Rec. 601 luma scaled to [0,255], rounded half away from zero.
ImageGray to_grayscale(const ImageRGB& img);
Histogram histogram(const ImageGray& img);
/// Largest intensity whose count reaches `t`, if any.
std::optional<int> threshold_intensity(const Histogram& counts, std::uint64_t t);
/// Global when the threshold intensity is absent or at most `cutoff`.
Illumination label_from_threshold(std::optional<int> i_thr, int cutoff);

struct GliLabel {
  Illumination label;
  std::optional<int> i_thr;
};
GliLabel label(const ImageRGB& img, const LabelerConfig& cfg);

struct ManifestRow {
  std::string path;
  Illumination label;
  std::optional<int> i_thr;
};

struct LabelingResult {
  std::vector<ManifestRow> rows;
  /// "path: message" for every file that could not be decoded.
  std::vector<std::string> failures;
};

/// Labels every regular file under `dir` (recursively) in lexicographic path
/// order. Undecodable files are reported, not fatal.
LabelingResult label_dataset(const std::filesystem::path& dir, const LabelerConfig& cfg);

/// CSV with header `path,label,i_thr`; an absent threshold is an empty field.
std::string manifest_csv(const std::vector<ManifestRow>& rows);

}  // namespace alen
