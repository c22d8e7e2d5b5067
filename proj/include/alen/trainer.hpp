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
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "alen/random.hpp"
#include "alen/slcformer.hpp"
#include "alen/store.hpp"
#include "alen/synthetic.hpp"

namespace alen {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update of `params` in place. Moment buffers are
/// created on the first call.
void adam_step(std::vector<Tensor>& params, const std::vector<std::vector<double>>& grads,
               AdamState& state, double lr);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 1;
  std::size_t batch_size = 1;
  std::optional<std::size_t> crop;
  std::optional<std::size_t> halve_after;
  std::uint64_t seed = 0;
  /// Stops after this many optimizer steps when set.
  std::optional<std::size_t> max_steps;
  /// Writes `<checkpoint_prefix>_epoch<N>.store` every N epochs when both are set.
  std::size_t checkpoint_every = 0;
  std::filesystem::path checkpoint_prefix;

  void validate() const;
};

/// Base rate before `halve_after`, half of it from then on.
double lr_schedule(const TrainConfig& cfg, std::size_t epoch);

struct CropWindow {
  std::size_t y = 0;
  std::size_t x = 0;
  std::size_t size = 0;
};
/// Offset uniform over every valid position.
CropWindow random_crop_window(std::size_t height, std::size_t width, std::size_t size, Rng& rng);
ImagePair random_crop(const ImagePair& pair, std::size_t size, Rng& rng);
/// [C,H,W] -> [C,size,size] at `w`.
Tensor crop_tensor(const Tensor& t, const CropWindow& w);

struct Sample {
  Tensor input;
  Tensor target;
};

/// Scalar loss of the network under `weights` on one sample.
using SampleLoss =
    std::function<Tensor(const Tensor& input, const Tensor& target, const NamedTensorStore&)>;

struct EpochRecord {
  std::size_t epoch;
  double mean_loss;
  double lr;
};

struct TrainResult {
  NamedTensorStore weights;
  std::vector<EpochRecord> history;
  std::size_t steps = 0;
};

/// Mini-batch Adam over shuffled samples. Batch gradients are the mean of
/// per-sample gradients; spatial crops (when configured) are drawn per sample
/// draw. Throws alen::Error on an empty dataset or a non-finite loss.
TrainResult train_network(const SampleLoss& loss, const NamedTensorStore& initial,
                          const std::vector<Sample>& data, const TrainConfig& cfg);

/// Mean loss over `data` without recording gradients.
double evaluate_loss(const SampleLoss& loss, const NamedTensorStore& weights,
                     const std::vector<Sample>& data);

std::string history_csv(const std::vector<EpochRecord>& history);

enum class TrainTarget { Classifier, ScnetGlobal, ScnetLocal, McnetIllum, McnetColor };

struct TrainPreset {
  std::string name;
  TrainTarget target;
  TrainConfig config;
};

/// classifier, scnet-global, scnet-local, mcnet-global (alias mcnet-illum),
/// mcnet-color.
TrainPreset train_preset(const std::string& name);
std::vector<std::string> preset_names();

/// Loss used for each target; the perceptual term uses the seeded extractor.
SampleLoss target_loss(TrainTarget target, const SLCformerConfig& classifier_cfg = {});
NamedTensorStore initial_weights(TrainTarget target, std::uint64_t seed,
                                 const SLCformerConfig& classifier_cfg = {});

/// V planes for SCNet targets, RGB tensors for MCNet targets.
std::vector<Sample> make_samples(TrainTarget target, const std::vector<ImagePair>& pairs);
/// Images resized to the classifier resolution; Global -> 1, Local -> 0.
std::vector<Sample> make_classifier_samples(const std::vector<LabeledImage>& images,
                                            const SLCformerConfig& cfg);

}  // namespace alen
