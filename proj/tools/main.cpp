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

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "alen/error.hpp"
#include "commands.hpp"

namespace {

using namespace alen;
using namespace alen::cli;

void add_labeler_flags(CLI::App* cmd, LabelerConfig& cfg, std::string& threshold) {
  cmd->add_option("--threshold", threshold,
                  "Pixel count T (integer) or fraction of the pixel count (e.g. 0.001)");
  cmd->add_option("--cutoff", cfg.intensity_cutoff, "Intensity cutoff for the Global label")
      ->check(CLI::Range(0, 255));
}

void add_model_flags(CLI::App* cmd, ModelOptions& m, std::string& threshold) {
  cmd->add_option("--bundle", m.bundle_dir, "Directory holding the *.store weight files");
  cmd->add_option("--classifier", m.classifier, "Illumination classifier")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, ClassifierMode>{{"network", ClassifierMode::Network},
                                                {"histogram", ClassifierMode::Histogram}}));
  cmd->add_option("--classifier-config", m.classifier_config, "Classifier shape")
      ->check(CLI::IsMember({"standard", "toy"}));
  cmd->add_option("--seed", m.seed, "Seed for weights absent from the bundle");
  add_labeler_flags(cmd, m.labeler, threshold);
}

void apply_threshold(const std::string& text, LabelerConfig& cfg) {
  if (!text.empty()) cfg.threshold = PixelThreshold::parse(text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive low-light image enhancement"};
  app.require_subcommand(1);

  EnhanceOptions enh;
  std::string enh_threshold;
  std::string enh_route;
  auto* enhance = app.add_subcommand("enhance", "Enhance an image or every image in a directory");
  enhance->add_option("input", enh.input, "Image file or directory")->required();
  enhance->add_option("-o,--out", enh.output_dir, "Output directory")->required();
  add_model_flags(enhance, enh.model, enh_threshold);
  enhance->add_option("--lambda-g", enh.weights.lambda_g, "Global branch fusion weight");
  enhance->add_option("--lambda-l", enh.weights.lambda_l, "Local branch fusion weight");
  enhance->add_option("--lambda-c", enh.weights.lambda_c, "Color branch fusion weight");
  enhance->add_option("--route", enh_route, "Force the branch instead of classifying")
      ->check(CLI::IsMember({"global", "local"}));
  enhance->add_option("-j,--jobs", enh.jobs, "Images processed in parallel")
      ->check(CLI::PositiveNumber);

  ClassifyOptions cls;
  std::string cls_threshold;
  auto* classify = app.add_subcommand("classify", "Print path,label,probability|i_thr lines");
  classify->add_option("input", cls.input, "Image file or directory")->required();
  classify->add_option("-o,--out", cls.output, "Write the lines to a file instead of stdout");
  add_model_flags(classify, cls.model, cls_threshold);
  classify->add_option("-j,--jobs", cls.jobs, "Images processed in parallel")
      ->check(CLI::PositiveNumber);

  LabelOptions lab;
  std::string lab_threshold;
  auto* label = app.add_subcommand("label-dataset", "Write a global/local manifest CSV");
  label->add_option("dir", lab.dir, "Image directory (searched recursively)")->required();
  label->add_option("-o,--out", lab.output, "Manifest CSV path")->required();
  add_labeler_flags(label, lab.labeler, lab_threshold);

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "Train one network from a preset");
  train->add_option("--preset", tr.preset, "Training preset")
      ->required()
      ->check(CLI::IsMember({"classifier", "scnet-global", "scnet-local", "mcnet-global",
                             "mcnet-illum", "mcnet-color"}));
  train->add_option("--data", tr.data_dir,
                    "Data directory (low/ and high/ pairs, or images for the classifier)");
  train->add_option("--synthetic", tr.synthetic, "Generate N synthetic training images");
  train->add_option("--synthetic-size", tr.synthetic_size, "Side of synthetic images")
      ->check(CLI::PositiveNumber);
  train->add_option("-o,--out", tr.output, "Output weight store")->required();
  train->add_option("--history", tr.history, "Loss history CSV (default <out>_history.csv)");
  train->add_option("--steps", tr.steps, "Stop after this many optimizer steps");
  train->add_option("--epochs", tr.epochs, "Override the preset epoch count");
  train->add_option("--batch", tr.batch_size, "Override the preset batch size")
      ->check(CLI::PositiveNumber);
  train->add_option("--lr", tr.learning_rate, "Override the preset learning rate");
  train->add_option("--checkpoint-every", tr.checkpoint_every,
                    "Write <out>_epoch<N>.store every N epochs");
  train->add_option("--classifier-config", tr.classifier_config, "Classifier shape")
      ->check(CLI::IsMember({"standard", "toy"}));
  train->add_option("--seed", tr.seed, "Seed for initialization, data and shuffling");

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Compute quality metrics over a directory");
  evaluate->add_option("enhanced", ev.enhanced_dir, "Directory of enhanced images")->required();
  evaluate->add_option("--reference", ev.reference_dir, "Ground-truth directory");
  evaluate->add_option("--original", ev.original_dir, "Unenhanced input directory (for LOE)");
  evaluate->add_option("-o,--out", ev.output_prefix, "Writes PREFIX.csv and PREFIX.md")
      ->required();
  evaluate->add_option("--loe-grid", ev.loe_grid, "LOE sampling grid side")
      ->check(CLI::PositiveNumber);

  GradcheckOptions gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--seed", gc.seed, "First seed");
  gradcheck->add_option("--seeds", gc.seeds, "Number of seeds")->check(CLI::PositiveNumber);
  gradcheck->add_flag("--inject-fault", gc.inject_fault)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kFatal;
  }

  try {
    if (*enhance) {
      apply_threshold(enh_threshold, enh.model.labeler);
      if (!enh_route.empty()) {
        enh.force_route = enh_route == "global" ? Illumination::Global : Illumination::Local;
      }
      return cmd_enhance(enh);
    }
    if (*classify) {
      apply_threshold(cls_threshold, cls.model.labeler);
      return cmd_classify(cls);
    }
    if (*label) {
      apply_threshold(lab_threshold, lab.labeler);
      return cmd_label_dataset(lab);
    }
    if (*train) return cmd_train(tr);
    if (*evaluate) return cmd_evaluate(ev);
    if (*gradcheck) return cmd_gradcheck(gc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFatal;
  }
  return kFatal;
}
