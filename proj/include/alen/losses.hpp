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

#include "alen/estimators.hpp"
#include "alen/tensor.hpp"

namespace alen {

struct SSIMParams {
  double c1 = 0.01 * 0.01;
  double c2 = 0.03 * 0.03;
  std::size_t window = 11;
  double sigma = 1.5;
  double dynamic_range = 1.0;

  /// The degenerate form (c1 = c2 = 0) used by the universal quality index.
  static SSIMParams uqi() {
    SSIMParams p;
    p.c1 = 0.0;
    p.c2 = 0.0;
    return p;
  }
};

/// Normalized 2-D Gaussian kernel, row-major window x window.
std::vector<double> gaussian_window(std::size_t window, double sigma);

/// Local moments of a plane pair, one entry per window position. Planes at
/// least `window` on each side use the Gaussian window at every valid
/// position; smaller planes use a single uniform window over the whole plane.
struct WindowStats {
  Tensor mu_x;
  Tensor mu_y;
  Tensor var_x;
  Tensor var_y;
  Tensor cov;
};
WindowStats window_stats(const Tensor& x, const Tensor& y, const SSIMParams& p);

/// Per-window SSIM of two [1,H,W] planes.
Tensor ssim_map(const Tensor& x, const Tensor& y, const SSIMParams& p);
/// Mean SSIM of two [C,H,W] tensors, averaged over channels.
Tensor ssim_mean(const Tensor& x, const Tensor& y, const SSIMParams& p = {});

Tensor bce_loss(const Tensor& y_hat, const Tensor& y, double eps = 1e-7);
Tensor mse_loss(const Tensor& y_hat, const Tensor& y);
/// 1 - ssim_mean.
Tensor ssim_loss(const Tensor& y_hat, const Tensor& y, const SSIMParams& p = {});

struct FeatureLayer {
  ConvLayerSpec conv;
  bool relu = true;
};

/// Fixed convolutional feature network for the perceptual term. Weights are
/// never marked trainable.
class FeatureExtractor {
 public:
  FeatureExtractor(std::vector<FeatureLayer> layers, NamedTensorStore weights);

  /// 3 -> 8 -> 16 -> 16 channels, 3x3 convs with ReLU, Kaiming-uniform from
  /// `seed`; every layer is a tap.
  static FeatureExtractor seeded(std::uint64_t seed = 7);

  const std::vector<FeatureLayer>& layers() const { return layers_; }
  const NamedTensorStore& weights() const { return weights_; }
  std::size_t input_channels() const { return layers_.front().conv.in_channels; }

  /// Outputs of every layer for a [C_in,H,W] input.
  std::vector<Tensor> features(const Tensor& x) const;

 private:
  std::vector<FeatureLayer> layers_;
  NamedTensorStore weights_;
};

/// Sum over taps j of mean squared feature distance (1/(C_j H_j W_j) ||.||^2).
/// Single-channel inputs are replicated to the extractor's input channels.
/// An empty `taps` uses every layer.
Tensor perceptual_loss(const Tensor& y_hat, const Tensor& y, const FeatureExtractor& fx,
                       const std::vector<std::size_t>& taps = {});

Tensor loss_local(const Tensor& y_hat, const Tensor& y);
/// mse + ssim + perceptual, in that order.
Tensor loss_global_or_color(const Tensor& y_hat, const Tensor& y, const FeatureExtractor& fx);

}  // namespace alen
