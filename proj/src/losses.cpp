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

#include "alen/losses.hpp"

#include <cmath>

namespace alen {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_to_string(a.shape()) +
                     " vs " + shape_to_string(b.shape()));
  }
}

Tensor as_vector(const Tensor& t) { return reshape(t, {t.numel()}); }

Tensor replicate_channels(const Tensor& x, std::size_t channels) {
  if (x.dim(0) == channels) return x;
  if (x.dim(0) != 1) {
    throw ShapeError("perceptual_loss: cannot map " + std::to_string(x.dim(0)) +
                     " channels onto extractor input of " + std::to_string(channels));
  }
  Tensor out = x;
  for (std::size_t c = 1; c < channels; ++c) out = concat_channels(out, x);
  return out;
}

}  // namespace

std::vector<double> gaussian_window(std::size_t window, double sigma) {
  std::vector<double> g1(window);
  const double centre = (static_cast<double>(window) - 1.0) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    const double d = static_cast<double>(i) - centre;
    g1[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    total += g1[i];
  }
  for (double& v : g1) v /= total;
  std::vector<double> g2(window * window);
  for (std::size_t y = 0; y < window; ++y)
    for (std::size_t x = 0; x < window; ++x) g2[y * window + x] = g1[y] * g1[x];
  return g2;
}

WindowStats window_stats(const Tensor& x, const Tensor& y, const SSIMParams& p) {
  require_same_shape(x, y, "ssim");
  if (x.rank() != 3 || x.dim(0) != 1) {
    throw ShapeError("ssim expects [1,H,W] planes, got " + shape_to_string(x.shape()));
  }
  const Tensor xx = mul(x, x);
  const Tensor yy = mul(y, y);
  const Tensor xy = mul(x, y);
  WindowStats s;
  Tensor exx, eyy, exy;
  if (x.dim(1) >= p.window && x.dim(2) >= p.window) {
    const Tensor kernel = Tensor::from({1, 1, p.window, p.window},
                                       gaussian_window(p.window, p.sigma));
    auto filter = [&](const Tensor& t) { return as_vector(conv2d(t, kernel, Tensor(), 1, 0)); };
    s.mu_x = filter(x);
    s.mu_y = filter(y);
    exx = filter(xx);
    eyy = filter(yy);
    exy = filter(xy);
  } else {
    auto average = [](const Tensor& t) { return reshape(mean(t), {1}); };
    s.mu_x = average(x);
    s.mu_y = average(y);
    exx = average(xx);
    eyy = average(yy);
    exy = average(xy);
  }
  s.var_x = sub(exx, mul(s.mu_x, s.mu_x));
  s.var_y = sub(eyy, mul(s.mu_y, s.mu_y));
  s.cov = sub(exy, mul(s.mu_x, s.mu_y));
  return s;
}

Tensor ssim_map(const Tensor& x, const Tensor& y, const SSIMParams& p) {
  const WindowStats s = window_stats(x, y, p);
  const double c1 = p.c1 * p.dynamic_range * p.dynamic_range;
  const double c2 = p.c2 * p.dynamic_range * p.dynamic_range;
  const Tensor luminance_num = add_scalar(scale(mul(s.mu_x, s.mu_y), 2.0), c1);
  const Tensor structure_num = add_scalar(scale(s.cov, 2.0), c2);
  const Tensor luminance_den = add_scalar(add(mul(s.mu_x, s.mu_x), mul(s.mu_y, s.mu_y)), c1);
  const Tensor structure_den = add_scalar(add(s.var_x, s.var_y), c2);
  return div(mul(luminance_num, structure_num), mul(luminance_den, structure_den));
}

Tensor ssim_mean(const Tensor& x, const Tensor& y, const SSIMParams& p) {
  require_same_shape(x, y, "ssim");
  if (x.rank() != 3) throw ShapeError("ssim expects [C,H,W], got " + shape_to_string(x.shape()));
  const std::size_t channels = x.dim(0);
  if (channels == 1) return mean(ssim_map(x, y, p));
  Tensor total;
  for (std::size_t c = 0; c < channels; ++c) {
    const Tensor m = mean(ssim_map(slice(x, 0, c, c + 1), slice(y, 0, c, c + 1), p));
    total = total.defined() ? add(total, m) : m;
  }
  return scale(total, 1.0 / static_cast<double>(channels));
}

Tensor bce_loss(const Tensor& y_hat, const Tensor& y, double eps) {
  require_same_shape(y_hat, y, "bce_loss");
  const Tensor p = clamp(y_hat, eps, 1.0 - eps);
  const Tensor pos = mul(y, log(p));
  const Tensor neg = mul(add_scalar(scale(y, -1.0), 1.0), log(add_scalar(scale(p, -1.0), 1.0)));
  return scale(mean(add(pos, neg)), -1.0);
}

Tensor mse_loss(const Tensor& y_hat, const Tensor& y) {
  require_same_shape(y_hat, y, "mse_loss");
  return mean(square(sub(y_hat, y)));
}

Tensor ssim_loss(const Tensor& y_hat, const Tensor& y, const SSIMParams& p) {
  return add_scalar(scale(ssim_mean(y_hat, y, p), -1.0), 1.0);
}

FeatureExtractor::FeatureExtractor(std::vector<FeatureLayer> layers, NamedTensorStore weights)
    : layers_(std::move(layers)), weights_(std::move(weights)) {
  if (layers_.empty()) throw Error("FeatureExtractor needs at least one layer");
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    if (layers_[i].conv.in_channels != layers_[i - 1].conv.out_channels) {
      throw Error("FeatureExtractor: layer '" + layers_[i].conv.name +
                  "' input channels do not match the previous layer");
    }
  }
  for (const auto& l : layers_) {
    weights_.require(l.conv.name + ".w", l.conv.weight_shape());
    weights_.require(l.conv.name + ".b", {l.conv.out_channels});
  }
}

FeatureExtractor FeatureExtractor::seeded(std::uint64_t seed) {
  SCNetSpec spec{{
      {"features.conv1", 3, 8, 3, 1, 1},
      {"features.conv2", 8, 16, 3, 1, 1},
      {"features.conv3", 16, 16, 3, 1, 1},
  }};
  std::vector<FeatureLayer> layers;
  for (const auto& l : spec.layers) layers.push_back({l, true});
  return FeatureExtractor(std::move(layers), build_default_weights(spec, seed));
}

std::vector<Tensor> FeatureExtractor::features(const Tensor& x) const {
  std::vector<Tensor> out;
  Tensor h = x;
  for (const auto& l : layers_) {
    h = conv2d(h, weights_.get(l.conv.name + ".w"), weights_.get(l.conv.name + ".b"),
               l.conv.stride, l.conv.padding);
    if (l.relu) h = relu(h);
    out.push_back(h);
  }
  return out;
}

Tensor perceptual_loss(const Tensor& y_hat, const Tensor& y, const FeatureExtractor& fx,
                       const std::vector<std::size_t>& taps) {
  require_same_shape(y_hat, y, "perceptual_loss");
  const std::size_t n_layers = fx.layers().size();
  std::vector<std::size_t> use = taps;
  if (use.empty()) {
    for (std::size_t i = 0; i < n_layers; ++i) use.push_back(i);
  }
  for (std::size_t j : use) {
    if (j >= n_layers) {
      throw Error("perceptual_loss: tap " + std::to_string(j) + " out of range (extractor has " +
                  std::to_string(n_layers) + " layers)");
    }
  }
  const std::size_t cin = fx.input_channels();
  const auto fa = fx.features(replicate_channels(y_hat, cin));
  const auto fb = fx.features(replicate_channels(y, cin));
  Tensor total;
  for (std::size_t j : use) {
    const Tensor term = mean(square(sub(fa[j], fb[j])));
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

Tensor loss_local(const Tensor& y_hat, const Tensor& y) { return ssim_loss(y_hat, y); }

Tensor loss_global_or_color(const Tensor& y_hat, const Tensor& y, const FeatureExtractor& fx) {
  return add(add(mse_loss(y_hat, y), ssim_loss(y_hat, y)), perceptual_loss(y_hat, y, fx));
}

}  // namespace alen
