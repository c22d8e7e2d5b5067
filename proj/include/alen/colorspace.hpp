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

#include "alen/image.hpp"

namespace alen {

struct Hsv {
  double h;  // degrees, [0,360)
  double s;
  double v;
};

struct Rgb {
  double r;
  double g;
  double b;
};

/// Hexcone RGB -> HSV. Hue is 0 for achromatic pixels.
Hsv rgb_to_hsv(const Rgb& px);
Rgb hsv_to_rgb(const Hsv& px);

/// Throws alen::Error on values outside [0,1].
ImageHSV rgb_to_hsv(const ImageRGB& img);
/// Throws alen::Error on hue outside [0,360) or S/V outside [0,1].
ImageRGB hsv_to_rgb(const ImageHSV& img);

/// Elementwise (a + b) / 2.
Plane average_v(const Plane& a, const Plane& b);

}  // namespace alen
