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

#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <iostream>
#include <map>
#include <thread>
#include <variant>
#include <vector>

#include "alen/error.hpp"
#include "alen/gradsuite.hpp"
#include "alen/metrics.hpp"
#include "alen/persistence.hpp"
#include "alen/synthetic.hpp"
#include "alen/trainer.hpp"
#include "json.hpp"

namespace alen::cli {

namespace fs = std::filesystem;

namespace {

const char* const kEstimatorStores[] = {"scnet_global", "scnet_local", "mcnet_illum",
                                        "mcnet_color"};

void warn(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

SLCformerConfig classifier_config(const std::string& name) {
  if (name == "standard") return SLCformerConfig::standard();
  if (name == "toy") return SLCformerConfig::toy();
  throw Error("unknown classifier config '" + name + "' (expected standard or toy)");
}

struct LoadedBundle {
  ModelBundle bundle;
  std::map<std::string, std::string> digests;
};

LoadedBundle load_bundle(const ModelOptions& opts) {
  LoadedBundle out;
  ModelBundle& b = out.bundle;
  b = ModelBundle::seeded(opts.seed);
  b.classifier_mode = opts.classifier;
  b.classifier_config = classifier_config(opts.classifier_config);
  b.labeler = opts.labeler;
  b.labeler.validate();

  if (!opts.bundle_dir) {
    warn("no --bundle given; using seeded untrained estimator weights");
  } else if (!fs::is_directory(*opts.bundle_dir)) {
    throw Error("bundle directory not found: " + opts.bundle_dir->string());
  }
  NamedTensorStore* slots[] = {&b.scnet_global, &b.scnet_local, &b.mcnet_illum, &b.mcnet_color};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!opts.bundle_dir) continue;
    const fs::path p = *opts.bundle_dir / (std::string(kEstimatorStores[i]) + ".store");
    if (fs::exists(p)) {
      *slots[i] = load_store(p);
    } else {
      warn(p.string() + " missing; using seeded weights");
    }
  }
  if (b.classifier_mode == ClassifierMode::Network) {
    std::optional<fs::path> p;
    if (opts.bundle_dir) p = *opts.bundle_dir / "classifier.store";
    if (!p || !fs::exists(*p)) {
      throw Error("--classifier network needs classifier.store in --bundle");
    }
    b.classifier = load_store(*p);
    out.digests["classifier"] = store_digest(*b.classifier);
  }
  b.validate();
  out.digests["scnet_global"] = store_digest(b.scnet_global);
  out.digests["scnet_local"] = store_digest(b.scnet_local);
  out.digests["mcnet_illum"] = store_digest(b.mcnet_illum);
  out.digests["mcnet_color"] = store_digest(b.mcnet_color);
  return out;
}

std::vector<fs::path> list_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<fs::path> list_inputs(const fs::path& input) {
  if (fs::is_directory(input)) return list_files(input);
  if (fs::is_regular_file(input)) return {input};
  throw Error("input not found: " + input.string());
}

/// Runs fn(i) for i in [0,n) on up to `jobs` threads.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  for (std::size_t j = 0; j < jobs; ++j) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& w : workers) w.join();
}

template <typename T>
using Outcome = std::variant<T, std::string>;

template <typename T, typename Fn>
std::vector<Outcome<T>> map_files(const std::vector<fs::path>& files, std::size_t jobs, Fn fn) {
  std::vector<Outcome<T>> results(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    try {
      results[i] = fn(files[i]);
    } catch (const std::exception& e) {
      results[i] = std::string(e.what());
    }
  });
  return results;
}

void report_failure(const fs::path& p, const std::string& message) {
  if (message.find(p.string()) != std::string::npos) {
    std::cerr << "error: " << message << '\n';
  } else {
    std::cerr << "error: " << p.string() << ": " << message << '\n';
  }
}

bool is_image_name(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".ppm";
}

std::string sidecar_json(const fs::path& input, const fs::path& output, const EnhancementResult& r,
                         const LoadedBundle& lb, bool forced) {
  nlohmann::ordered_json j;
  j["input"] = input.filename().string();
  j["output"] = output.filename().string();
  j["label"] = to_string(r.label.label);
  j["route_forced"] = forced;
  j["classifier"] =
      lb.bundle.classifier_mode == ClassifierMode::Network ? "network" : "histogram";
  if (lb.bundle.classifier_mode == ClassifierMode::Network) {
    j["probability"] = r.label.probability;
  } else if (r.i_thr) {
    j["i_thr"] = *r.i_thr;
  } else {
    j["i_thr"] = nullptr;
  }
  j["lambda"] = {{"g", r.weights_used.lambda_g},
                 {"l", r.weights_used.lambda_l},
                 {"c", r.weights_used.lambda_c}};
  j["branch_weight"] = r.weights_used.branch(r.label.label);
  nlohmann::ordered_json stores;
  for (const auto& [name, digest] : lb.digests) stores[name] = digest;
  j["stores"] = stores;
  return j.dump(2) + "\n";
}

std::optional<fs::path> find_counterpart(const fs::path& dir, const fs::path& enhanced) {
  const fs::path same = dir / enhanced.filename();
  if (fs::is_regular_file(same)) return same;
  std::string stem = enhanced.stem().string();
  const std::string suffix = "_alen";
  if (stem.size() > suffix.size() &&
      stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0) {
    stem.resize(stem.size() - suffix.size());
  }
  for (const char* ext : {".png", ".ppm", ".PNG", ".PPM"}) {
    const fs::path p = dir / (stem + ext);
    if (fs::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

}  // namespace

int cmd_enhance(const EnhanceOptions& opts) {
  opts.weights.validate();
  const LoadedBundle lb = load_bundle(opts.model);
  const std::vector<fs::path> files = list_inputs(opts.input);
  fs::create_directories(opts.output_dir);

  auto results = map_files<EnhancementResult>(files, opts.jobs, [&](const fs::path& p) {
    return enhance(load_image(p), lb.bundle, opts.weights, opts.force_route);
  });

  std::size_t failures = 0;
  std::map<std::string, fs::path> claimed;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (auto* err = std::get_if<std::string>(&results[i])) {
      report_failure(files[i], *err);
      ++failures;
      continue;
    }
    const auto& r = std::get<EnhancementResult>(results[i]);
    const std::string stem = files[i].stem().string() + "_alen";
    if (auto [it, fresh] = claimed.emplace(stem, files[i]); !fresh) {
      report_failure(files[i], "output name " + stem + ".png already produced by " +
                                   it->second.filename().string());
      ++failures;
      continue;
    }
    const fs::path image_out = opts.output_dir / (stem + ".png");
    const fs::path json_out = opts.output_dir / (stem + ".json");
    try {
      save_image(r.output, image_out);
      write_file_atomic(json_out, sidecar_json(files[i], image_out, r, lb,
                                               opts.force_route.has_value()));
      std::cout << files[i].string() << " -> " << image_out.string() << " ("
                << to_string(r.label.label) << ")\n";
    } catch (const std::exception& e) {
      report_failure(files[i], e.what());
      ++failures;
    }
  }
  return failures ? kPartial : kSuccess;
}

int cmd_classify(const ClassifyOptions& opts) {
  const LoadedBundle lb = load_bundle(opts.model);
  const std::vector<fs::path> files = list_inputs(opts.input);
  auto results = map_files<RouteDecision>(files, opts.jobs, [&](const fs::path& p) {
    return decide_route(load_image(p), lb.bundle);
  });

  std::string out;
  std::size_t failures = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (auto* err = std::get_if<std::string>(&results[i])) {
      report_failure(files[i], *err);
      ++failures;
      continue;
    }
    const auto& d = std::get<RouteDecision>(results[i]);
    out += files[i].string() + "," + to_string(d.label.label) + ",";
    if (lb.bundle.classifier_mode == ClassifierMode::Network) {
      out += format_double(d.label.probability);
    } else if (d.i_thr) {
      out += std::to_string(*d.i_thr);
    }
    out += '\n';
  }
  if (opts.output) {
    write_file_atomic(*opts.output, out);
  } else {
    std::cout << out;
  }
  return failures ? kPartial : kSuccess;
}

int cmd_label_dataset(const LabelOptions& opts) {
  opts.labeler.validate();
  if (!fs::is_directory(opts.dir)) throw Error("dataset directory not found: " + opts.dir.string());
  const LabelingResult result = label_dataset(opts.dir, opts.labeler);
  for (const auto& f : result.failures) std::cerr << "error: " << f << '\n';
  write_file_atomic(opts.output, manifest_csv(result.rows));
  std::size_t global = 0;
  for (const auto& r : result.rows) global += r.label == Illumination::Global;
  std::cout << result.rows.size() << " labeled (" << global << " global, "
            << result.rows.size() - global << " local), " << result.failures.size()
            << " failed\n";
  return result.failures.empty() ? kSuccess : kPartial;
}

namespace {

std::vector<ImagePair> load_pairs(const fs::path& dir) {
  const fs::path low = dir / "low";
  const fs::path high = dir / "high";
  if (!fs::is_directory(low) || !fs::is_directory(high)) {
    throw Error("paired data directory needs low/ and high/ subdirectories: " + dir.string());
  }
  std::vector<ImagePair> pairs;
  for (const fs::path& p : list_files(low)) {
    const fs::path q = high / p.filename();
    if (!fs::is_regular_file(q)) throw Error("no target for " + p.string());
    ImagePair pair{load_image(p), load_image(q)};
    if (!pair.input.same_size(pair.target)) throw Error("size mismatch for " + p.string());
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::vector<LabeledImage> load_labeled(const fs::path& dir, const LabelerConfig& labeler) {
  const LabelingResult result = label_dataset(dir, labeler);
  if (!result.failures.empty()) throw Error("undecodable training image: " + result.failures[0]);
  std::vector<LabeledImage> images;
  for (const auto& row : result.rows) images.push_back({load_image(row.path), row.label});
  return images;
}

}  // namespace

int cmd_train(const TrainOptions& opts) {
  TrainPreset preset = train_preset(opts.preset);
  TrainConfig cfg = preset.config;
  cfg.seed = opts.seed;
  if (opts.learning_rate) cfg.learning_rate = *opts.learning_rate;
  if (opts.batch_size) cfg.batch_size = *opts.batch_size;
  if (opts.epochs) cfg.epochs = *opts.epochs;
  const SLCformerConfig cls_cfg = classifier_config(opts.classifier_config);

  if (opts.data_dir.has_value() == (opts.synthetic > 0)) {
    throw Error("exactly one of --data and --synthetic is required");
  }
  std::vector<Sample> samples;
  if (preset.target == TrainTarget::Classifier) {
    const auto images = opts.data_dir
                            ? load_labeled(*opts.data_dir, LabelerConfig{})
                            : synthetic_illumination_set(opts.synthetic, opts.synthetic_size,
                                                         opts.seed);
    samples = make_classifier_samples(images, cls_cfg);
  } else {
    const auto pairs = opts.data_dir
                           ? load_pairs(*opts.data_dir)
                           : synthetic_pairs(opts.synthetic, opts.synthetic_size, opts.seed);
    samples = make_samples(preset.target, pairs);
  }
  if (samples.empty()) throw Error("training set is empty");

  if (opts.steps) {
    cfg.max_steps = *opts.steps;
    if (!opts.epochs) {
      const std::size_t per_epoch = (samples.size() + cfg.batch_size - 1) / cfg.batch_size;
      cfg.epochs = std::max(cfg.epochs, (*opts.steps + per_epoch - 1) / per_epoch);
    }
  }
  fs::path stem = opts.output;
  stem.replace_extension();
  if (opts.checkpoint_every > 0) {
    cfg.checkpoint_every = opts.checkpoint_every;
    cfg.checkpoint_prefix = stem;
  }
  cfg.validate();

  const SampleLoss loss = target_loss(preset.target, cls_cfg);
  const NamedTensorStore initial = initial_weights(preset.target, opts.seed, cls_cfg);
  const double initial_loss = evaluate_loss(loss, initial, samples);
  const TrainResult result = train_network(loss, initial, samples, cfg);
  const double final_loss = evaluate_loss(loss, result.weights, samples);

  if (opts.output.has_parent_path()) fs::create_directories(opts.output.parent_path());
  save_store(result.weights, opts.output);
  const fs::path history =
      opts.history ? *opts.history : fs::path(stem.string() + "_history.csv");
  write_file_atomic(history, history_csv(result.history));
  std::cout << "preset " << preset.name << ": " << result.steps << " steps, "
            << result.history.size() << " epochs\n"
            << "initial_loss " << format_double(initial_loss) << "\n"
            << "final_loss " << format_double(final_loss) << "\n"
            << "weights " << opts.output.string() << "\n"
            << "history " << history.string() << "\n";
  return kSuccess;
}

int cmd_evaluate(const EvaluateOptions& opts) {
  if (!fs::is_directory(opts.enhanced_dir)) {
    throw Error("enhanced directory not found: " + opts.enhanced_dir.string());
  }
  for (const auto& d : {opts.reference_dir, opts.original_dir}) {
    if (d && !fs::is_directory(*d)) throw Error("directory not found: " + d->string());
  }
  if (!opts.reference_dir && !opts.original_dir) {
    throw Error("need --reference and/or --original");
  }
  MetricReport report;
  report.full_reference = opts.reference_dir.has_value();
  std::size_t failures = 0;
  for (const fs::path& p : list_files(opts.enhanced_dir)) {
    if (!is_image_name(p)) continue;
    try {
      const ImageRGB enhanced = load_image(p);
      std::optional<ImageRGB> reference;
      std::optional<ImageRGB> original;
      if (opts.reference_dir) {
        const auto q = find_counterpart(*opts.reference_dir, p);
        if (!q) throw Error("no reference image");
        reference = load_image(*q);
      }
      if (opts.original_dir) {
        const auto q = find_counterpart(*opts.original_dir, p);
        if (!q) throw Error("no original image");
        original = load_image(*q);
      }
      report.rows.push_back(evaluate_pair(p.filename().string(), enhanced,
                                          reference ? &*reference : nullptr,
                                          original ? &*original : nullptr, opts.loe_grid));
    } catch (const std::exception& e) {
      report_failure(p, e.what());
      ++failures;
    }
  }
  const fs::path csv = opts.output_prefix.string() + ".csv";
  const fs::path md = opts.output_prefix.string() + ".md";
  if (opts.output_prefix.has_parent_path()) fs::create_directories(opts.output_prefix.parent_path());
  write_file_atomic(csv, report.to_csv());
  write_file_atomic(md, report.to_markdown());
  std::cout << report.to_markdown();
  return failures ? kPartial : kSuccess;
}

int cmd_gradcheck(const GradcheckOptions& opts) {
  GradSuiteOptions suite;
  suite.first_seed = opts.seed;
  suite.seeds = opts.seeds;
  suite.inject_fault = opts.inject_fault;
  const auto rows = run_gradient_suite(suite);
  bool ok = true;
  std::printf("%-28s %-6s %-12s %-10s %8s %8s\n", "case", "result", "max_rel_err", "tolerance",
              "checked", "skipped");
  for (const auto& r : rows) {
    std::printf("%-28s %-6s %-12.3e %-10.0e %8zu %8zu\n", r.name.c_str(),
                r.pass() ? "PASS" : "FAIL", r.max_rel_error, r.tolerance, r.checked, r.skipped);
    ok = ok && r.pass();
  }
  return ok ? kSuccess : kFatal;
}

}  // namespace alen::cli
