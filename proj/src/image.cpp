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

#include "alen/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace alen {

const char* to_string(Illumination label) {
  return label == Illumination::Global ? "global" : "local";
}

Plane Plane::filled(std::size_t height, std::size_t width, double value) {
  return Plane{height, width, std::vector<double>(height * width, value)};
}

Tensor Plane::to_tensor() const { return Tensor::from({1, height, width}, values); }

Plane Plane::from_tensor(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 1) {
    throw ShapeError("expected a [1,H,W] tensor, got " + shape_to_string(t.shape()));
  }
  return Plane{t.dim(1), t.dim(2), std::vector<double>(t.data().begin(), t.data().end())};
}

ImageRGB ImageRGB::filled(std::size_t height, std::size_t width, double value) {
  return ImageRGB{height, width, std::vector<double>(3 * height * width, value)};
}

ImageRGB ImageRGB::from_planes(const Plane& r, const Plane& g, const Plane& b) {
  if (r.height != g.height || r.height != b.height || r.width != g.width || r.width != b.width) {
    throw ShapeError("channel planes differ in size");
  }
  ImageRGB img{r.height, r.width, {}};
  img.data.reserve(3 * r.size());
  for (const Plane* p : {&r, &g, &b}) img.data.insert(img.data.end(), p->values.begin(), p->values.end());
  return img;
}

Plane ImageRGB::channel(std::size_t c) const {
  const auto first = data.begin() + static_cast<std::ptrdiff_t>(c * pixels());
  return Plane{height, width, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(pixels()))};
}

void ImageRGB::validate() const {
  if (data.size() != 3 * height * width) throw Error("image buffer does not match its size");
  for (double v : data) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error("image value outside [0,1]: " + std::to_string(v));
  }
}

Tensor ImageRGB::to_tensor() const { return Tensor::from({3, height, width}, data); }

ImageRGB ImageRGB::from_tensor(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 3) {
    throw ShapeError("expected a [3,H,W] tensor, got " + shape_to_string(t.shape()));
  }
  return ImageRGB{t.dim(1), t.dim(2), std::vector<double>(t.data().begin(), t.data().end())};
}

Plane luma(const ImageRGB& img) {
  Plane out = Plane::filled(img.height, img.width, 0.0);
  const std::size_t n = img.pixels();
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = 0.299 * img.data[i] + 0.587 * img.data[n + i] + 0.114 * img.data[2 * n + i];
  }
  return out;
}

ImageRGB resize_bilinear(const ImageRGB& img, std::size_t height, std::size_t width) {
  if (img.height == height && img.width == width) return img;
  if (img.height == 0 || img.width == 0 || height == 0 || width == 0) {
    throw ShapeError("resize of an empty image");
  }
  ImageRGB out = ImageRGB::filled(height, width, 0.0);
  const double sy = static_cast<double>(img.height) / static_cast<double>(height);
  const double sx = static_cast<double>(img.width) / static_cast<double>(width);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(img.height - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(img.width - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = img.at(c, y0, x0) * (1.0 - wx) + img.at(c, y0, x1) * wx;
        const double bottom = img.at(c, y1, x0) * (1.0 - wx) + img.at(c, y1, x1) * wx;
        out.at(c, y, x) = top * (1.0 - wy) + bottom * wy;
      }
    }
  }
  return out;
}

}  // namespace alen
