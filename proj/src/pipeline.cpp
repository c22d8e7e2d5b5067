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

#include "alen/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "alen/colorspace.hpp"
#include "alen/estimators.hpp"

namespace alen {

void FusionWeights::validate() const {
  for (double v : {lambda_g, lambda_l, lambda_c}) {
    if (!std::isfinite(v) || v < 0.0) throw Error("fusion weights must be finite and >= 0");
  }
}

ModelBundle ModelBundle::seeded(std::uint64_t seed) {
  ModelBundle b;
  b.scnet_global = build_default_weights(SCNetSpec::standard(), seed * 4 + 1);
  b.scnet_local = build_default_weights(SCNetSpec::standard(), seed * 4 + 2);
  b.mcnet_illum = build_default_weights(MCNetSpec::standard(), seed * 4 + 3);
  b.mcnet_color = build_default_weights(MCNetSpec::standard(), seed * 4 + 4);
  return b;
}

void ModelBundle::validate() const {
  static const SCNetSpec scnet = SCNetSpec::standard();
  static const MCNetSpec mcnet = MCNetSpec::standard();
  validate_weights(scnet, scnet_global);
  validate_weights(scnet, scnet_local);
  validate_weights(mcnet, mcnet_illum);
  validate_weights(mcnet, mcnet_color);
  labeler.validate();
  if (classifier_mode == ClassifierMode::Network) {
    if (!classifier) throw Error("network classifier mode requires classifier weights");
    validate_weights(classifier_config, *classifier);
  }
}

ImageRGB enhance_global(const ImageRGB& img, const ModelBundle& bundle) {
  ImageHSV hsv = rgb_to_hsv(img);
  const Plane v_prime = scnet_forward(hsv.value, bundle.scnet_global);
  hsv.value = average_v(hsv.value, v_prime);
  return mcnet_forward(hsv_to_rgb(hsv), bundle.mcnet_illum);
}

ImageRGB enhance_local(const ImageRGB& img, const ModelBundle& bundle) {
  ImageHSV hsv = rgb_to_hsv(img);
  hsv.value = scnet_forward(hsv.value, bundle.scnet_local);
  return hsv_to_rgb(hsv);
}

ImageRGB enhance_color(const ImageRGB& img, const ModelBundle& bundle) {
  return mcnet_forward(img, bundle.mcnet_color);
}

ImageRGB fuse_unclamped(const ImageRGB& branch, const ImageRGB& color, const FusionWeights& w,
                        Illumination route) {
  if (!branch.same_size(color)) throw ShapeError("fuse: branch and color sizes differ");
  const double lb = w.branch(route);
  const double lc = w.lambda_c;
  ImageRGB out = branch;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = branch.data[i] * lb + color.data[i] * lc;
  }
  return out;
}

ImageRGB fuse(const ImageRGB& branch, const ImageRGB& color, const FusionWeights& w,
              Illumination route) {
  ImageRGB out = fuse_unclamped(branch, color, w, route);
  for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
  return out;
}

RouteDecision decide_route(const ImageRGB& img, const ModelBundle& bundle) {
  if (bundle.classifier_mode == ClassifierMode::Network) {
    if (!bundle.classifier) throw Error("network classifier mode requires classifier weights");
    return {classify(img, *bundle.classifier, bundle.classifier_config), std::nullopt};
  }
  const GliLabel g = label(img, bundle.labeler);
  const double p = g.label == Illumination::Global ? 1.0 : 0.0;
  return {{g.label, p}, g.i_thr};
}

EnhancementResult enhance(const ImageRGB& img, const ModelBundle& bundle,
                          const FusionWeights& w, std::optional<Illumination> forced) {
  img.validate();
  w.validate();
  bundle.validate();
  EnhancementResult r;
  if (forced) {
    r.label = {*forced, *forced == Illumination::Global ? 1.0 : 0.0};
  } else {
    const RouteDecision d = decide_route(img, bundle);
    r.label = d.label;
    r.i_thr = d.i_thr;
  }
  r.branch_output = r.label.label == Illumination::Global ? enhance_global(img, bundle)
                                                          : enhance_local(img, bundle);
  r.color_output = enhance_color(img, bundle);
  r.weights_used = w;
  r.output = fuse(r.branch_output, r.color_output, w, r.label.label);
  return r;
}

}  // namespace alen
