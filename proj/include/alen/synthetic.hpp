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

#include <cstdint>
#include <vector>

#include "alen/image.hpp"
#include "alen/random.hpp"

namespace alen {

/// Well-exposed target paired with its low-light rendition.
struct ImagePair {
  ImageRGB input;
  ImageRGB target;
};

struct LabeledImage {
  ImageRGB image;
  Illumination label;
};

/// Smooth colour gradients with a few flat shapes, values in [0.15, 0.95].
ImageRGB synthetic_scene(std::size_t height, std::size_t width, Rng& rng);

/// gain * x^gamma plus Gaussian noise of deviation `noise`, clamped to [0,1].
ImageRGB gamma_darken(const ImageRGB& img, double gamma, double gain, double noise, Rng& rng);

/// `count` scenes darkened with gamma in [2, 3], gain in [0.5, 0.8].
std::vector<ImagePair> synthetic_pairs(std::size_t count, std::size_t size, std::uint64_t seed,
                                       double noise = 0.0);

/// Uniformly dark scene: every value below 0.3.
ImageRGB synthetic_dark(std::size_t size, Rng& rng);
/// Unevenly lit scene: one side near black, the other bright.
ImageRGB synthetic_bimodal(std::size_t size, Rng& rng);
/// Alternating dark (Global) and bimodal (Local) images.
std::vector<LabeledImage> synthetic_illumination_set(std::size_t count, std::size_t size,
                                                     std::uint64_t seed);

}  // namespace alen
