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

#include "alen/estimators.hpp"

#include <cmath>

#include "alen/random.hpp"

namespace alen {

namespace {

ConvLayerSpec conv3(std::string name, std::size_t in, std::size_t out) {
  return {std::move(name), in, out, 3, 1, 1};
}
ConvLayerSpec conv1(std::string name, std::size_t in, std::size_t out) {
  return {std::move(name), in, out, 1, 1, 0};
}

NamedTensorStore init_layers(const std::vector<ConvLayerSpec>& layers, std::uint64_t seed) {
  Rng rng(seed);
  NamedTensorStore store;
  for (const auto& l : layers) {
    const double fan_in = static_cast<double>(l.in_channels * l.kernel * l.kernel);
    const double bound = std::sqrt(6.0 / fan_in);
    Tensor w = Tensor::zeros(l.weight_shape());
    for (double& v : w.mutable_data()) v = rng.uniform(-bound, bound);
    store.add(l.name + ".w", std::move(w));
    store.add(l.name + ".b", Tensor::zeros({l.out_channels}));
  }
  return store;
}

void validate_layers(const std::vector<ConvLayerSpec>& layers, const NamedTensorStore& weights) {
  for (const auto& l : layers) {
    weights.require(l.name + ".w", l.weight_shape());
    weights.require(l.name + ".b", {l.out_channels});
  }
}

Tensor apply(const ConvLayerSpec& l, const NamedTensorStore& w, const Tensor& x) {
  return conv2d(x, w.require(l.name + ".w", l.weight_shape()),
                w.require(l.name + ".b", {l.out_channels}), l.stride, l.padding);
}

}  // namespace

SCNetSpec SCNetSpec::standard() {
  return SCNetSpec{{
      conv3("scnet.conv1", 1, 32),
      conv3("scnet.conv2", 32, 64),
      conv3("scnet.conv3", 64, 128),
      conv3("scnet.conv4", 128, 256),
      conv1("scnet.conv5", 256, 128),
      conv1("scnet.conv6", 256, 64),
      conv1("scnet.conv7", 128, 32),
      conv1("scnet.conv8", 64, 1),
  }};
}

std::size_t SCNetSpec::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.parameter_count();
  return n;
}

MCNetSpec MCNetSpec::standard() {
  return MCNetSpec{{
      conv3("mcnet.initial", 1, 32),
      conv3("mcnet.conv1", 32, 32),
      conv3("mcnet.conv2", 32, 64),
      conv3("mcnet.conv3", 64, 64),
      conv3("mcnet.conv4", 64, 128),
      conv3("mcnet.conv5", 128, 64),
      conv1("mcnet.adapter", 64, 32),
      conv3("mcnet.conv6", 32, 32),
      conv1("mcnet.final", 32, 1),
      conv1("mcnet.ca1", 32, 64),
      conv1("mcnet.ca2", 64, 128),
      conv3("mcnet.fusion", 3, 3),
  }};
}

const ConvLayerSpec& MCNetSpec::layer(const std::string& name) const {
  for (const auto& l : layers)
    if (l.name == name) return l;
  throw Error("MCNet has no layer '" + name + "'");
}

std::size_t MCNetSpec::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.parameter_count();
  return n;
}

NamedTensorStore build_default_weights(const SCNetSpec& spec, std::uint64_t seed) {
  return init_layers(spec.layers, seed);
}

NamedTensorStore build_default_weights(const MCNetSpec& spec, std::uint64_t seed) {
  return init_layers(spec.layers, seed);
}

void validate_weights(const SCNetSpec& spec, const NamedTensorStore& weights) {
  validate_layers(spec.layers, weights);
}

void validate_weights(const MCNetSpec& spec, const NamedTensorStore& weights) {
  validate_layers(spec.layers, weights);
}

Tensor scnet_forward(const Tensor& v, const NamedTensorStore& weights) {
  if (v.rank() != 3 || v.dim(0) != 1) {
    throw ShapeError("SCNet expects a [1,H,W] plane, got " + shape_to_string(v.shape()));
  }
  static const SCNetSpec spec = SCNetSpec::standard();
  const auto& L = spec.layers;
  const Tensor c1 = relu(apply(L[0], weights, v));
  const Tensor c2 = relu(apply(L[1], weights, c1));
  const Tensor c3 = relu(apply(L[2], weights, c2));
  const Tensor c4 = relu(apply(L[3], weights, c3));
  const Tensor c5 = relu(apply(L[4], weights, c4));
  const Tensor c6 = relu(apply(L[5], weights, concat_channels(c5, c3)));
  const Tensor c7 = relu(apply(L[6], weights, concat_channels(c6, c2)));
  const Tensor c8 = apply(L[7], weights, concat_channels(c7, c1));
  return clamp(c8, 0.0, 1.0);
}

Plane scnet_forward(const Plane& v, const NamedTensorStore& weights) {
  return Plane::from_tensor(scnet_forward(v.to_tensor(), weights));
}

Tensor mcnet_branch(const Tensor& channel, const NamedTensorStore& weights) {
  if (channel.rank() != 3 || channel.dim(0) != 1) {
    throw ShapeError("MCNet branch expects a [1,H,W] plane, got " +
                     shape_to_string(channel.shape()));
  }
  static const MCNetSpec spec = MCNetSpec::standard();
  auto layer = [&](const char* name, const Tensor& x) {
    return apply(spec.layer(name), weights, x);
  };
  const Tensor a0 = relu(layer("mcnet.initial", channel));
  const Tensor a1 = relu(layer("mcnet.conv1", a0));
  const Tensor a2 = relu(layer("mcnet.conv2", a1));
  const Tensor a3 = relu(add(layer("mcnet.conv3", a2), layer("mcnet.ca1", a1)));
  const Tensor a4 = relu(add(layer("mcnet.conv4", a3), layer("mcnet.ca2", a3)));
  const Tensor a5 = relu(layer("mcnet.conv5", a4));
  const Tensor a6 = relu(layer("mcnet.adapter", a5));
  const Tensor a7 = relu(layer("mcnet.conv6", a6));
  return layer("mcnet.final", a7);
}

Tensor mcnet_forward(const Tensor& img, const NamedTensorStore& weights) {
  if (img.rank() != 3 || img.dim(0) != 3) {
    throw ShapeError("MCNet expects a [3,H,W] image, got " + shape_to_string(img.shape()));
  }
  static const MCNetSpec spec = MCNetSpec::standard();
  Tensor merged;
  for (std::size_t c = 0; c < 3; ++c) {
    merged = concat_channels(merged, mcnet_branch(slice(img, 0, c, c + 1), weights));
  }
  return sigmoid(apply(spec.layer("mcnet.fusion"), weights, merged));
}

ImageRGB mcnet_forward(const ImageRGB& img, const NamedTensorStore& weights) {
  return ImageRGB::from_tensor(mcnet_forward(img.to_tensor(), weights));
}

}  // namespace alen
