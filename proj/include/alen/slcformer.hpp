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
#include <string>
#include <utility>
#include <vector>

#include "alen/image.hpp"
#include "alen/store.hpp"

namespace alen {

/// Four-stage shifted-window transformer used as the global/local classifier.
struct SLCformerConfig {
  std::array<std::size_t, 4> stage_channels{32, 64, 128, 256};
  std::array<std::size_t, 4> stage_heads{1, 2, 4, 8};
  std::array<std::size_t, 4> stage_depths{2, 2, 6, 2};
  std::size_t patch_size = 4;
  std::size_t window_size = 7;
  double mlp_ratio = 4.0;
  std::size_t input_resolution = 224;

  static SLCformerConfig standard() { return {}; }
  /// Small variant (32x32 input, window 2, channels 8..64) for desk-scale
  /// training.
  static SLCformerConfig toy();

  /// Token grid side length at `stage`.
  std::size_t stage_resolution(std::size_t stage) const;
  /// Window actually used at `stage`: the configured window, or the whole
  /// grid once the grid is no larger than the window.
  std::size_t stage_window(std::size_t stage) const;
  std::size_t mlp_hidden(std::size_t stage) const;

  /// Throws alen::Error describing the first violated constraint.
  void validate() const;
};

/// Geometry of one transformer block.
struct BlockGeometry {
  std::size_t height;
  std::size_t width;
  std::size_t channels;
  std::size_t heads;
  std::size_t window;
};

struct AttentionOptions {
  bool shifted = false;
  /// Disable only to compare shifted and unshifted attention directly.
  bool mask = true;
};

struct IlluminationLabel {
  Illumination label = Illumination::Global;
  double probability = 0.5;
};

/// Name and shape of every parameter, in construction order.
std::vector<std::pair<std::string, Shape>> parameter_shapes(const SLCformerConfig& cfg);

/// Linear layers and bias tables ~ N(0, 0.02^2) (truncated at 2 sigma), zero
/// biases, unit layer-norm gains.
NamedTensorStore build_default_weights(const SLCformerConfig& cfg, std::uint64_t seed);
void validate_weights(const SLCformerConfig& cfg, const NamedTensorStore& weights);

/// Table index for every (query, key) token pair of an M x M window.
std::vector<std::size_t> relative_position_index(std::size_t window);
/// Additive mask [nW, 1, M*M, M*M] for shifted windows: 0 inside a region,
/// -1e9 across regions.
Tensor shifted_window_mask(std::size_t height, std::size_t width, std::size_t window,
                           std::size_t shift);

/// img [3,R,R] -> tokens [(R/p)^2, C1].
Tensor patch_embed(const Tensor& img, const NamedTensorStore& weights,
                   const SLCformerConfig& cfg);

/// Multi-head attention inside each window. x: [H,W,C]; parameters under
/// `prefix` (qkv, proj, rpb).
Tensor window_attention(const Tensor& x, const NamedTensorStore& weights,
                        const std::string& prefix, const BlockGeometry& g,
                        const AttentionOptions& options);

/// z + attn(LN(z)) followed by MLP residual. x: [H,W,C].
Tensor swin_block(const Tensor& x, const NamedTensorStore& weights, const std::string& prefix,
                  const BlockGeometry& g, bool shifted);

/// Regular block then shifted block under `stage_prefix`.block{first}/{first+1}.
Tensor swin_block_pair(const Tensor& x, const NamedTensorStore& weights,
                       const std::string& stage_prefix, std::size_t first,
                       const BlockGeometry& g);

/// [H,W,C] -> [H/2,W/2,2C]: 2x2 neighbours concatenated, normalized, reduced.
Tensor patch_merging(const Tensor& x, const NamedTensorStore& weights,
                     const std::string& prefix);

/// img [3,R,R] at cfg.input_resolution -> logit [1]. Differentiable.
Tensor slcformer_logit(const Tensor& img, const NamedTensorStore& weights,
                       const SLCformerConfig& cfg);

/// Resizes to the configured resolution and applies the sigmoid head.
IlluminationLabel classify(const ImageRGB& img, const NamedTensorStore& weights,
                           const SLCformerConfig& cfg);
Illumination label_from_probability(double p);

std::size_t count_parameters(const SLCformerConfig& cfg);
/// Multiply-accumulate count of one forward pass at `resolution`.
std::uint64_t count_flops(const SLCformerConfig& cfg, std::size_t resolution);

}  // namespace alen
