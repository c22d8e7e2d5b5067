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
#include <optional>
#include <string>

#include "alen/gli.hpp"
#include "alen/pipeline.hpp"

namespace alen::cli {

enum ExitCode : int { kSuccess = 0, kFatal = 1, kPartial = 2 };

struct ModelOptions {
  std::optional<std::filesystem::path> bundle_dir;
  ClassifierMode classifier = ClassifierMode::Histogram;
  std::string classifier_config = "standard";
  LabelerConfig labeler;
  std::uint64_t seed = 0;
};

struct EnhanceOptions {
  ModelOptions model;
  std::filesystem::path input;
  std::filesystem::path output_dir;
  FusionWeights weights;
  std::optional<Illumination> force_route;
  std::size_t jobs = 1;
};

struct ClassifyOptions {
  ModelOptions model;
  std::filesystem::path input;
  std::optional<std::filesystem::path> output;
  std::size_t jobs = 1;
};

struct LabelOptions {
  std::filesystem::path dir;
  std::filesystem::path output;
  LabelerConfig labeler;
};

struct TrainOptions {
  std::string preset;
  std::optional<std::filesystem::path> data_dir;
  std::size_t synthetic = 0;
  std::size_t synthetic_size = 32;
  std::filesystem::path output;
  std::optional<std::filesystem::path> history;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> learning_rate;
  std::size_t checkpoint_every = 0;
  std::string classifier_config = "standard";
  std::uint64_t seed = 0;
};

struct EvaluateOptions {
  std::filesystem::path enhanced_dir;
  std::optional<std::filesystem::path> reference_dir;
  std::optional<std::filesystem::path> original_dir;
  std::filesystem::path output_prefix;
  std::size_t loe_grid = 50;
};

struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t seeds = 10;
  bool inject_fault = false;
};

int cmd_enhance(const EnhanceOptions& opts);
int cmd_classify(const ClassifyOptions& opts);
int cmd_label_dataset(const LabelOptions& opts);
int cmd_train(const TrainOptions& opts);
int cmd_evaluate(const EvaluateOptions& opts);
int cmd_gradcheck(const GradcheckOptions& opts);

}  // namespace alen::cli
