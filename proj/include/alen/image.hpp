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

#include <cstddef>
#include <cstdint>
#include <vector>

#include "alen/tensor.hpp"

namespace alen {

enum class Illumination { Global, Local };

const char* to_string(Illumination label);

/// Single-channel height x width plane of reals.
struct Plane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  static Plane filled(std::size_t height, std::size_t width, double value);
  double& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
  double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  std::size_t size() const { return values.size(); }

  /// [1,H,W] view for the networks.
  Tensor to_tensor() const;
  static Plane from_tensor(const Tensor& t);
};

/// RGB image, planar storage [R plane][G plane][B plane], values in [0,1].
struct ImageRGB {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  static ImageRGB filled(std::size_t height, std::size_t width, double value);
  static ImageRGB from_planes(const Plane& r, const Plane& g, const Plane& b);

  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return data[(c * height + y) * width + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * height + y) * width + x];
  }
  std::size_t pixels() const { return height * width; }
  Plane channel(std::size_t c) const;
  bool same_size(const ImageRGB& other) const {
    return height == other.height && width == other.width;
  }

  /// Throws alen::Error unless every value lies in [0,1].
  void validate() const;

  Tensor to_tensor() const;  // [3,H,W]
  static ImageRGB from_tensor(const Tensor& t);

  bool operator==(const ImageRGB&) const = default;
};

/// HSV image: hue in degrees [0,360), saturation and value in [0,1].
struct ImageHSV {
  std::size_t height = 0;
  std::size_t width = 0;
  Plane hue;
  Plane saturation;
  Plane value;
};

/// 8-bit grayscale image for histogram work.
struct ImageGray {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> values;
};

/// Rec. 601 luma plane (0.299 R + 0.587 G + 0.114 B).
Plane luma(const ImageRGB& img);

/// Bilinear resize with half-pixel centers (edge-clamped sampling).
ImageRGB resize_bilinear(const ImageRGB& img, std::size_t height, std::size_t width);

}  // namespace alen
