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

#include "alen/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace alen {

ImageRGB synthetic_scene(std::size_t height, std::size_t width, Rng& rng) {
  ImageRGB img = ImageRGB::filled(height, width, 0.0);
  const double h = static_cast<double>(height);
  const double w = static_cast<double>(width);
  for (std::size_t c = 0; c < 3; ++c) {
    const double base = rng.uniform(0.3, 0.7);
    const double gy = rng.uniform(-0.3, 0.3);
    const double gx = rng.uniform(-0.3, 0.3);
    const double freq = rng.uniform(1.0, 3.0);
    const double phase = rng.uniform(0.0, 6.283185307179586);
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const double u = static_cast<double>(y) / h;
        const double v = static_cast<double>(x) / w;
        img.at(c, y, x) = base + gy * (u - 0.5) + gx * (v - 0.5) +
                          0.1 * std::sin(freq * 6.283185307179586 * (u + v) + phase);
      }
    }
  }
  const std::size_t shapes = 2 + rng.below(3);
  for (std::size_t s = 0; s < shapes; ++s) {
    const double cy = rng.uniform(0.0, h);
    const double cx = rng.uniform(0.0, w);
    const double r = rng.uniform(0.1, 0.3) * std::min(h, w);
    const double colour[3] = {rng.uniform(0.15, 0.95), rng.uniform(0.15, 0.95),
                              rng.uniform(0.15, 0.95)};
    const bool disc = rng.below(2) == 0;
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const double dy = static_cast<double>(y) - cy;
        const double dx = static_cast<double>(x) - cx;
        const bool inside = disc ? dy * dy + dx * dx <= r * r
                                 : std::abs(dy) <= r && std::abs(dx) <= r;
        if (!inside) continue;
        for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = colour[c];
      }
    }
  }
  for (double& v : img.data) v = std::clamp(v, 0.15, 0.95);
  return img;
}

ImageRGB gamma_darken(const ImageRGB& img, double gamma, double gain, double noise, Rng& rng) {
  ImageRGB out = img;
  for (double& v : out.data) {
    double d = gain * std::pow(v, gamma);
    if (noise > 0.0) d += noise * rng.normal();
    v = std::clamp(d, 0.0, 1.0);
  }
  return out;
}

std::vector<ImagePair> synthetic_pairs(std::size_t count, std::size_t size, std::uint64_t seed,
                                       double noise) {
  Rng rng(seed);
  std::vector<ImagePair> pairs;
  pairs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ImageRGB target = synthetic_scene(size, size, rng);
    const double gamma = rng.uniform(2.0, 3.0);
    const double gain = rng.uniform(0.5, 0.8);
    ImageRGB input = gamma_darken(target, gamma, gain, noise, rng);
    pairs.push_back({std::move(input), std::move(target)});
  }
  return pairs;
}

ImageRGB synthetic_dark(std::size_t size, Rng& rng) {
  ImageRGB img = synthetic_scene(size, size, rng);
  const double gain = rng.uniform(0.1, 0.3);
  for (double& v : img.data) v = std::clamp(v * gain, 0.0, 0.29);
  return img;
}

ImageRGB synthetic_bimodal(std::size_t size, Rng& rng) {
  ImageRGB img = synthetic_scene(size, size, rng);
  const bool vertical = rng.below(2) == 0;
  const bool bright_first = rng.below(2) == 0;
  const std::size_t split = size / 4 + rng.below(size / 2 + 1);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const bool first = (vertical ? x : y) < split;
      const bool bright = first == bright_first;
      for (std::size_t c = 0; c < 3; ++c) {
        double& v = img.at(c, y, x);
        v = bright ? std::clamp(0.55 + 0.45 * v, 0.0, 1.0) : 0.08 * v;
      }
    }
  }
  return img;
}

std::vector<LabeledImage> synthetic_illumination_set(std::size_t count, std::size_t size,
                                                     std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LabeledImage> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (i % 2 == 0) {
      out.push_back({synthetic_dark(size, rng), Illumination::Global});
    } else {
      out.push_back({synthetic_bimodal(size, rng), Illumination::Local});
    }
  }
  return out;
}

}  // namespace alen
