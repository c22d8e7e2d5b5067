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
#include <string>
#include <vector>

#include "alen/image.hpp"
#include "alen/store.hpp"

namespace alen {

struct ConvLayerSpec {
  std::string name;  // full weight prefix, e.g. "scnet.conv1"
  std::size_t in_channels;
  std::size_t out_channels;
  std::size_t kernel;
  std::size_t stride;
  std::size_t padding;

  Shape weight_shape() const { return {out_channels, in_channels, kernel, kernel}; }
  std::size_t parameter_count() const {
    return (kernel * kernel * in_channels + 1) * out_channels;
  }
};

/// Single-channel illumination estimator: four 3x3 feature-extraction convs
/// (1->32->64->128->256) followed by four 1x1 filter-reduction convs whose
/// inputs are concatenated with the matching extraction output.
struct SCNetSpec {
  std::vector<ConvLayerSpec> layers;  // conv1..conv8

  static SCNetSpec standard();
  std::size_t parameter_count() const;
};

/// Multi-channel estimator: one shared single-channel branch applied to each
/// of R, G, B, then a 3x3 fusion conv with sigmoid.
///
/// Branch: initial -> conv1 -> conv2 -> conv3 (+ ca1(conv1)) -> conv4 (+ ca2(conv3))
///         -> conv5 -> adapter -> conv6 -> final
/// Skip sums are taken before the ReLU of the receiving layer.
struct MCNetSpec {
  std::vector<ConvLayerSpec> layers;

  static MCNetSpec standard();
  const ConvLayerSpec& layer(const std::string& name) const;
  std::size_t parameter_count() const;
};

/// Kaiming-uniform (fan-in, ReLU gain) kernels bounded by sqrt(6/fan_in) and
/// zero biases, reproducible from `seed`.
NamedTensorStore build_default_weights(const SCNetSpec& spec, std::uint64_t seed);
NamedTensorStore build_default_weights(const MCNetSpec& spec, std::uint64_t seed);

/// Throws alen::Error naming the first missing or mis-shaped parameter.
void validate_weights(const SCNetSpec& spec, const NamedTensorStore& weights);
void validate_weights(const MCNetSpec& spec, const NamedTensorStore& weights);

/// v: [1,H,W] -> [1,H,W], clamped to [0,1]. Differentiable.
Tensor scnet_forward(const Tensor& v, const NamedTensorStore& weights);
Plane scnet_forward(const Plane& v, const NamedTensorStore& weights);

/// The shared per-channel branch: [1,H,W] -> [1,H,W] (pre-fusion).
Tensor mcnet_branch(const Tensor& channel, const NamedTensorStore& weights);
/// img: [3,H,W] -> [3,H,W] in (0,1). Differentiable.
Tensor mcnet_forward(const Tensor& img, const NamedTensorStore& weights);
ImageRGB mcnet_forward(const ImageRGB& img, const NamedTensorStore& weights);

}  // namespace alen
