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

#include "alen/gli.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "alen/persistence.hpp"

namespace alen {

PixelThreshold PixelThreshold::count(std::uint64_t n) {
  if (n == 0) throw Error("pixel threshold must be at least 1");
  return {Kind::Count, static_cast<double>(n)};
}

PixelThreshold PixelThreshold::fraction(double f) {
  if (!(f > 0.0 && f < 1.0)) throw Error("pixel threshold fraction must lie in (0,1)");
  return {Kind::Fraction, f};
}

PixelThreshold PixelThreshold::parse(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw Error("invalid threshold '" + text + "'");
  }
  if (used != text.size()) throw Error("invalid threshold '" + text + "'");
  if (text.find('.') != std::string::npos && v > 0.0 && v < 1.0) return fraction(v);
  if (v < 1.0 || v != std::floor(v)) {
    throw Error("threshold '" + text + "' is neither a fraction in (0,1) nor a count >= 1");
  }
  return count(static_cast<std::uint64_t>(v));
}

std::uint64_t PixelThreshold::resolve(std::uint64_t pixels) const {
  switch (kind) {
    case Kind::Count:
      return static_cast<std::uint64_t>(value);
    case Kind::Fraction:
      return std::max<std::uint64_t>(
          1, static_cast<std::uint64_t>(std::llround(value * static_cast<double>(pixels))));
    case Kind::Default:
      break;
  }
  return std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::llround(0.001 * static_cast<double>(pixels))));
}

void LabelerConfig::validate() const {
  if (intensity_cutoff < 0 || intensity_cutoff > 255) {
    throw Error("intensity cutoff " + std::to_string(intensity_cutoff) + " outside [0,255]");
  }
  if (threshold.kind == PixelThreshold::Kind::Count && threshold.value < 1.0) {
    throw Error("pixel threshold must be at least 1");
  }
}

ImageGray to_grayscale(const ImageRGB& img) {
  const Plane y = luma(img);
  ImageGray g{img.height, img.width, std::vector<std::uint8_t>(y.size())};
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = std::clamp(std::round(y.values[i] * 255.0), 0.0, 255.0);
    g.values[i] = static_cast<std::uint8_t>(v);
  }
  return g;
}

Histogram histogram(const ImageGray& img) {
  Histogram counts{};
  for (std::uint8_t v : img.values) ++counts[v];
  return counts;
}

std::optional<int> threshold_intensity(const Histogram& counts, std::uint64_t t) {
  for (int i = 255; i >= 0; --i) {
    if (counts[static_cast<std::size_t>(i)] >= t) return i;
  }
  return std::nullopt;
}

Illumination label_from_threshold(std::optional<int> i_thr, int cutoff) {
  return (!i_thr || *i_thr <= cutoff) ? Illumination::Global : Illumination::Local;
}

GliLabel label(const ImageRGB& img, const LabelerConfig& cfg) {
  cfg.validate();
  const ImageGray gray = to_grayscale(img);
  const auto t = cfg.threshold.resolve(gray.values.size());
  const auto i_thr = threshold_intensity(histogram(gray), t);
  return {label_from_threshold(i_thr, cfg.intensity_cutoff), i_thr};
}

LabelingResult label_dataset(const std::filesystem::path& dir, const LabelerConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  LabelingResult result;
  for (const auto& f : files) {
    try {
      const GliLabel l = label(load_image(f), cfg);
      result.rows.push_back({f.generic_string(), l.label, l.i_thr});
    } catch (const std::exception& e) {
      result.failures.push_back(f.generic_string() + ": " + e.what());
    }
  }
  return result;
}

std::string manifest_csv(const std::vector<ManifestRow>& rows) {
  std::ostringstream out;
  out << "path,label,i_thr\n";
  for (const auto& r : rows) {
    out << r.path << ',' << to_string(r.label) << ',';
    if (r.i_thr) out << *r.i_thr;
    out << '\n';
  }
  return out.str();
}

}  // namespace alen
