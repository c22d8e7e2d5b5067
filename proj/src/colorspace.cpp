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

#include "alen/colorspace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace alen {

Hsv rgb_to_hsv(const Rgb& px) {
  const double v = std::max({px.r, px.g, px.b});
  const double mn = std::min({px.r, px.g, px.b});
  const double chroma = v - mn;
  Hsv out{0.0, v > 0.0 ? chroma / v : 0.0, v};
  if (chroma <= 0.0) {
    out.s = 0.0;
    return out;
  }
  double sector;
  if (v == px.r) {
    sector = (px.g - px.b) / chroma;
    if (sector < 0.0) sector += 6.0;
  } else if (v == px.g) {
    sector = (px.b - px.r) / chroma + 2.0;
  } else {
    sector = (px.r - px.g) / chroma + 4.0;
  }
  out.h = 60.0 * sector;
  if (out.h >= 360.0) out.h -= 360.0;
  return out;
}

Rgb hsv_to_rgb(const Hsv& px) {
  if (px.s <= 0.0) return {px.v, px.v, px.v};
  const double h = px.h / 60.0;
  const double sector = std::floor(h);
  const double f = h - sector;
  const double p = px.v * (1.0 - px.s);
  const double q = px.v * (1.0 - px.s * f);
  const double t = px.v * (1.0 - px.s * (1.0 - f));
  auto clamp01 = [](double x) { return std::clamp(x, 0.0, 1.0); };
  switch (static_cast<int>(sector) % 6) {
    case 0: return {px.v, clamp01(t), clamp01(p)};
    case 1: return {clamp01(q), px.v, clamp01(p)};
    case 2: return {clamp01(p), px.v, clamp01(t)};
    case 3: return {clamp01(p), clamp01(q), px.v};
    case 4: return {clamp01(t), clamp01(p), px.v};
    default: return {px.v, clamp01(p), clamp01(q)};
  }
}

ImageHSV rgb_to_hsv(const ImageRGB& img) {
  img.validate();
  ImageHSV out{img.height, img.width, Plane::filled(img.height, img.width, 0.0),
               Plane::filled(img.height, img.width, 0.0),
               Plane::filled(img.height, img.width, 0.0)};
  const std::size_t n = img.pixels();
  for (std::size_t i = 0; i < n; ++i) {
    const Hsv px = rgb_to_hsv(Rgb{img.data[i], img.data[n + i], img.data[2 * n + i]});
    out.hue.values[i] = px.h;
    out.saturation.values[i] = px.s;
    out.value.values[i] = px.v;
  }
  return out;
}

ImageRGB hsv_to_rgb(const ImageHSV& img) {
  const std::size_t n = img.height * img.width;
  if (img.hue.size() != n || img.saturation.size() != n || img.value.size() != n) {
    throw ShapeError("HSV planes do not match the image size");
  }
  ImageRGB out = ImageRGB::filled(img.height, img.width, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = img.hue.values[i];
    const double s = img.saturation.values[i];
    const double v = img.value.values[i];
    if (!(h >= 0.0 && h < 360.0) || !(s >= 0.0 && s <= 1.0) || !(v >= 0.0 && v <= 1.0)) {
      throw Error("HSV value out of range at pixel " + std::to_string(i));
    }
    const Rgb px = hsv_to_rgb(Hsv{h, s, v});
    out.data[i] = px.r;
    out.data[n + i] = px.g;
    out.data[2 * n + i] = px.b;
  }
  return out;
}

Plane average_v(const Plane& a, const Plane& b) {
  if (a.height != b.height || a.width != b.width) throw ShapeError("average_v: shape mismatch");
  Plane out = Plane::filled(a.height, a.width, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out.values[i] = (a.values[i] + b.values[i]) / 2.0;
  return out;
}

}  // namespace alen
