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

#include "alen/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <sstream>

#include "alen/colorspace.hpp"
#include "alen/estimators.hpp"
#include "alen/losses.hpp"
#include "alen/persistence.hpp"

namespace alen {

void adam_step(std::vector<Tensor>& params, const std::vector<std::vector<double>>& grads,
               AdamState& state, double lr) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: parameter/gradient count differ");
  if (state.m.empty()) {
    for (const Tensor& p : params) {
      state.m.emplace_back(p.numel(), 0.0);
      state.v.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i].numel() || state.m[i].size() != params[i].numel()) {
      throw ShapeError("adam_step: shape mismatch at parameter " + std::to_string(i));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = grads[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error("learning rate must be finite and non-negative");
  }
  if (batch_size == 0) throw Error("batch size must be at least 1");
  if (crop && *crop == 0) throw Error("crop size must be positive");
}

double lr_schedule(const TrainConfig& cfg, std::size_t epoch) {
  if (cfg.halve_after && epoch >= *cfg.halve_after) return cfg.learning_rate / 2.0;
  return cfg.learning_rate;
}

CropWindow random_crop_window(std::size_t height, std::size_t width, std::size_t size, Rng& rng) {
  if (size == 0 || size > height || size > width) {
    throw Error("crop " + std::to_string(size) + " does not fit a " + std::to_string(height) +
                "x" + std::to_string(width) + " image");
  }
  CropWindow w;
  w.size = size;
  w.y = static_cast<std::size_t>(rng.below(height - size + 1));
  w.x = static_cast<std::size_t>(rng.below(width - size + 1));
  return w;
}

namespace {

ImageRGB crop_image(const ImageRGB& img, const CropWindow& w) {
  ImageRGB out = ImageRGB::filled(w.size, w.size, 0.0);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < w.size; ++y)
      for (std::size_t x = 0; x < w.size; ++x) out.at(c, y, x) = img.at(c, w.y + y, w.x + x);
  return out;
}

}  // namespace

ImagePair random_crop(const ImagePair& pair, std::size_t size, Rng& rng) {
  if (!pair.input.same_size(pair.target)) throw ShapeError("random_crop: pair sizes differ");
  const CropWindow w = random_crop_window(pair.input.height, pair.input.width, size, rng);
  return {crop_image(pair.input, w), crop_image(pair.target, w)};
}

Tensor crop_tensor(const Tensor& t, const CropWindow& w) {
  if (t.rank() != 3 || w.y + w.size > t.dim(1) || w.x + w.size > t.dim(2)) {
    throw ShapeError("crop_tensor: window outside " + shape_to_string(t.shape()));
  }
  const std::size_t c = t.dim(0);
  const std::size_t h = t.dim(1);
  const std::size_t wd = t.dim(2);
  std::vector<double> out(c * w.size * w.size);
  auto d = t.data();
  std::size_t k = 0;
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < w.size; ++y)
      for (std::size_t x = 0; x < w.size; ++x) out[k++] = d[(ch * h + w.y + y) * wd + w.x + x];
  return Tensor::from({c, w.size, w.size}, std::move(out));
}

double evaluate_loss(const SampleLoss& loss, const NamedTensorStore& weights,
                     const std::vector<Sample>& data) {
  if (data.empty()) throw Error("evaluate_loss: empty dataset");
  double acc = 0.0;
  for (const Sample& s : data) acc += loss(s.input, s.target, weights).item();
  return acc / static_cast<double>(data.size());
}

TrainResult train_network(const SampleLoss& loss, const NamedTensorStore& initial,
                          const std::vector<Sample>& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw Error("train_network: empty dataset");
  TrainResult result;
  result.weights = initial.clone();
  std::vector<Tensor> params = result.weights.tensors();
  for (Tensor& p : params) p.set_requires_grad(true);

  Rng rng(cfg.seed);
  AdamState adam;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> grads(params.size());

  bool done = false;
  for (std::size_t epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
    const double lr = lr_schedule(cfg, epoch);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
    }
    double epoch_loss = 0.0;
    std::size_t epoch_samples = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      if (cfg.max_steps && result.steps >= *cfg.max_steps) {
        done = true;
        break;
      }
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (Tensor& p : params) p.zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const Sample& s = data[order[b]];
        Tensor input = s.input;
        Tensor target = s.target;
        if (cfg.crop && input.rank() == 3 && input.dim(1) >= *cfg.crop &&
            input.dim(2) >= *cfg.crop &&
            (input.dim(1) > *cfg.crop || input.dim(2) > *cfg.crop)) {
          const CropWindow w = random_crop_window(input.dim(1), input.dim(2), *cfg.crop, rng);
          input = crop_tensor(input, w);
          target = crop_tensor(target, w);
        }
        Tape tape;
        Tensor l;
        {
          TapeScope scope(tape);
          l = loss(input, target, result.weights);
        }
        const double value = l.item();
        if (!std::isfinite(value)) {
          throw Error("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                      std::to_string(result.steps) + ", sample " + std::to_string(order[b]));
        }
        backward(l, tape);
        epoch_loss += value;
        ++epoch_samples;
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = 0; i < params.size(); ++i) {
        grads[i] = params[i].gradient();
        for (double& g : grads[i]) g *= inv;
      }
      adam_step(params, grads, adam, lr);
      ++result.steps;
    }
    if (epoch_samples > 0) {
      result.history.push_back({epoch, epoch_loss / static_cast<double>(epoch_samples), lr});
    }
    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_prefix.empty() &&
        (epoch + 1) % cfg.checkpoint_every == 0) {
      save_store(result.weights, cfg.checkpoint_prefix.string() + "_epoch" +
                                     std::to_string(epoch + 1) + ".store");
    }
  }
  result.weights = result.weights.clone();
  return result;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream out;
  out << "epoch,mean_loss,lr\n";
  char buf[96];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", r.epoch, r.mean_loss, r.lr);
    out << buf;
  }
  return out.str();
}

TrainPreset train_preset(const std::string& name) {
  TrainPreset p;
  p.name = name;
  if (name == "classifier") {
    p.target = TrainTarget::Classifier;
    p.config.learning_rate = 1e-4;
    p.config.epochs = 75;
    p.config.batch_size = 32;
  } else if (name == "scnet-local") {
    p.target = TrainTarget::ScnetLocal;
    p.config.learning_rate = 1e-3;
    p.config.batch_size = 8;
    p.config.epochs = 40;
  } else if (name == "scnet-global") {
    p.target = TrainTarget::ScnetGlobal;
    p.config.learning_rate = 1e-3;
    p.config.halve_after = 20;
    p.config.crop = 128;
    p.config.epochs = 40;
    p.config.batch_size = 8;
  } else if (name == "mcnet-global" || name == "mcnet-illum") {
    p.target = TrainTarget::McnetIllum;
    p.config.learning_rate = 1e-3;
    p.config.halve_after = 20;
    p.config.crop = 128;
    p.config.epochs = 40;
    p.config.batch_size = 8;
  } else if (name == "mcnet-color") {
    p.target = TrainTarget::McnetColor;
    p.config.learning_rate = 1e-4;
    p.config.halve_after = 20;
    p.config.crop = 128;
    p.config.epochs = 40;
    p.config.batch_size = 8;
  } else {
    throw Error("unknown preset '" + name + "'");
  }
  return p;
}

std::vector<std::string> preset_names() {
  return {"classifier", "scnet-global", "scnet-local", "mcnet-global", "mcnet-color"};
}

SampleLoss target_loss(TrainTarget target, const SLCformerConfig& classifier_cfg) {
  switch (target) {
    case TrainTarget::Classifier:
      return [classifier_cfg](const Tensor& in, const Tensor& y, const NamedTensorStore& w) {
        return bce_loss(sigmoid(slcformer_logit(in, w, classifier_cfg)), y);
      };
    case TrainTarget::ScnetLocal:
      return [](const Tensor& in, const Tensor& y, const NamedTensorStore& w) {
        return loss_local(scnet_forward(in, w), y);
      };
    case TrainTarget::ScnetGlobal: {
      auto fx = std::make_shared<FeatureExtractor>(FeatureExtractor::seeded());
      return [fx](const Tensor& in, const Tensor& y, const NamedTensorStore& w) {
        return loss_global_or_color(scnet_forward(in, w), y, *fx);
      };
    }
    case TrainTarget::McnetIllum:
    case TrainTarget::McnetColor: {
      auto fx = std::make_shared<FeatureExtractor>(FeatureExtractor::seeded());
      return [fx](const Tensor& in, const Tensor& y, const NamedTensorStore& w) {
        return loss_global_or_color(mcnet_forward(in, w), y, *fx);
      };
    }
  }
  throw Error("unknown training target");
}

NamedTensorStore initial_weights(TrainTarget target, std::uint64_t seed,
                                 const SLCformerConfig& classifier_cfg) {
  switch (target) {
    case TrainTarget::Classifier:
      return build_default_weights(classifier_cfg, seed);
    case TrainTarget::ScnetGlobal:
    case TrainTarget::ScnetLocal:
      return build_default_weights(SCNetSpec::standard(), seed);
    case TrainTarget::McnetIllum:
    case TrainTarget::McnetColor:
      return build_default_weights(MCNetSpec::standard(), seed);
  }
  throw Error("unknown training target");
}

std::vector<Sample> make_samples(TrainTarget target, const std::vector<ImagePair>& pairs) {
  std::vector<Sample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (!p.input.same_size(p.target)) throw ShapeError("training pair sizes differ");
    switch (target) {
      case TrainTarget::ScnetGlobal:
      case TrainTarget::ScnetLocal:
        out.push_back({rgb_to_hsv(p.input).value.to_tensor(),
                       rgb_to_hsv(p.target).value.to_tensor()});
        break;
      case TrainTarget::McnetIllum:
      case TrainTarget::McnetColor:
        out.push_back({p.input.to_tensor(), p.target.to_tensor()});
        break;
      case TrainTarget::Classifier:
        throw Error("classifier samples come from labelled images");
    }
  }
  return out;
}

std::vector<Sample> make_classifier_samples(const std::vector<LabeledImage>& images,
                                            const SLCformerConfig& cfg) {
  std::vector<Sample> out;
  out.reserve(images.size());
  const std::size_t r = cfg.input_resolution;
  for (const auto& li : images) {
    const ImageRGB sized = (li.image.height == r && li.image.width == r)
                               ? li.image
                               : resize_bilinear(li.image, r, r);
    const double y = li.label == Illumination::Global ? 1.0 : 0.0;
    out.push_back({sized.to_tensor(), Tensor::from({1}, {y})});
  }
  return out;
}

}  // namespace alen
