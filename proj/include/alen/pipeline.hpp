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
#include <optional>

#include "alen/gli.hpp"
#include "alen/image.hpp"
#include "alen/slcformer.hpp"
#include "alen/store.hpp"

namespace alen {

struct FusionWeights {
  double lambda_g = 0.5;
  double lambda_l = 0.5;
  double lambda_c = 0.5;

  double branch(Illumination route) const {
    return route == Illumination::Global ? lambda_g : lambda_l;
  }
  /// Throws alen::Error on a negative or non-finite weight.
  void validate() const;
};

enum class ClassifierMode { Network, Histogram };

struct ModelBundle {
  ClassifierMode classifier_mode = ClassifierMode::Histogram;
  std::optional<NamedTensorStore> classifier;
  SLCformerConfig classifier_config;
  LabelerConfig labeler;
  NamedTensorStore scnet_global;
  NamedTensorStore scnet_local;
  NamedTensorStore mcnet_illum;
  NamedTensorStore mcnet_color;

  /// Histogram-rule classifier and freshly initialized estimators, each from
  /// its own seed derived from `seed`.
  static ModelBundle seeded(std::uint64_t seed);
  /// Checks every store against its network; network mode requires
  /// classifier weights.
  void validate() const;
};

struct EnhancementResult {
  ImageRGB output;
  IlluminationLabel label;
  std::optional<int> i_thr;  // histogram mode only
  ImageRGB branch_output;
  ImageRGB color_output;
  FusionWeights weights_used;
};

/// MCNet_illum(RGB(H, S, (V + SCNet(V)) / 2)).
ImageRGB enhance_global(const ImageRGB& img, const ModelBundle& bundle);
/// RGB(H, S, SCNet(V)).
ImageRGB enhance_local(const ImageRGB& img, const ModelBundle& bundle);
/// MCNet_color(img).
ImageRGB enhance_color(const ImageRGB& img, const ModelBundle& bundle);

/// branch * lambda_branch + color * lambda_c, before clamping.
ImageRGB fuse_unclamped(const ImageRGB& branch, const ImageRGB& color, const FusionWeights& w,
                        Illumination route);
/// fuse_unclamped clamped to [0,1].
ImageRGB fuse(const ImageRGB& branch, const ImageRGB& color, const FusionWeights& w,
              Illumination route);

struct RouteDecision {
  IlluminationLabel label;
  std::optional<int> i_thr;
};
RouteDecision decide_route(const ImageRGB& img, const ModelBundle& bundle);

/// Classifies (unless `forced`), runs exactly one of the global/local
/// branches plus the color branch, and fuses.
EnhancementResult enhance(const ImageRGB& img, const ModelBundle& bundle,
                          const FusionWeights& w = {},
                          std::optional<Illumination> forced = std::nullopt);

}  // namespace alen
