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

#include "alen/gradsuite.hpp"

#include <algorithm>
#include <functional>
#include <memory>

#include "alen/estimators.hpp"
#include "alen/gradcheck.hpp"
#include "alen/losses.hpp"
#include "alen/random.hpp"
#include "alen/slcformer.hpp"

namespace alen {

namespace {

constexpr double kOpTolerance = 1e-6;
constexpr double kNetworkTolerance = 1e-5;

struct Problem {
  std::function<Tensor()> closure;
  std::vector<Tensor> inputs;
  std::size_t coords = 0;  // 0 = every coordinate
  std::function<bool(std::size_t, std::size_t)> exclude = {};
};

using Builder = std::function<Problem(Rng&)>;

Tensor uniform(Rng& rng, Shape shape, double lo, double hi) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.mutable_data()) v = rng.uniform(lo, hi);
  return t;
}

/// Magnitudes in [lo, hi] with random sign.
Tensor signed_away(Rng& rng, Shape shape, double lo, double hi) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.mutable_data()) {
    const double m = rng.uniform(lo, hi);
    v = rng.below(2) == 0 ? m : -m;
  }
  return t;
}

/// Fixed random projection to a scalar, so every output element matters.
Tensor readout(const Tensor& out) {
  Rng rng(0x5eed + out.numel());
  Tensor r = Tensor::zeros(out.shape());
  for (double& v : r.mutable_data()) v = rng.uniform(-1.0, 1.0);
  return sum(mul(out, r));
}

Problem unary(Rng& rng, Shape shape, double lo, double hi, Tensor (*op)(const Tensor&)) {
  Tensor x = uniform(rng, std::move(shape), lo, hi);
  return {[x, op] { return readout(op(x)); }, {x}};
}

NamedTensorStore random_store(const std::vector<std::pair<std::string, Shape>>& shapes, Rng& rng,
                              double spread) {
  NamedTensorStore s;
  for (const auto& [name, shape] : shapes) {
    Tensor t = uniform(rng, shape, -spread, spread);
    const bool norm_gain = (name.find(".ln") != std::string::npos ||
                            name.find(".norm.") != std::string::npos) &&
                           name.compare(name.size() - 2, 2, ".w") == 0;
    if (norm_gain) {
      for (double& v : t.mutable_data()) v += 1.0;
    }
    s.add(name, std::move(t));
  }
  return s;
}

/// Key-bias entries of every qkv bias in `inputs`: softmax is invariant to
/// adding q.b_k to a whole row, so their gradient is identically zero.
std::function<bool(std::size_t, std::size_t)> key_bias_exclusion(const NamedTensorStore& w) {
  auto ranges = std::make_shared<std::vector<std::pair<std::size_t, std::size_t>>>(
      w.size(), std::pair<std::size_t, std::size_t>{0, 0});
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto& e = w.entries()[i];
    if (e.name.size() > 6 && e.name.compare(e.name.size() - 6, 6, ".qkv.b") == 0) {
      const std::size_t c = e.tensor.numel() / 3;
      (*ranges)[i] = {c, 2 * c};
    }
  }
  return [ranges](std::size_t input, std::size_t coord) {
    if (input >= ranges->size()) return false;
    const auto [lo, hi] = (*ranges)[input];
    return coord >= lo && coord < hi;
  };
}

/// A product whose backward pass scales the true gradient by 1.5.
Tensor faulty_square(const Tensor& x) {
  std::vector<double> out(x.numel());
  auto d = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = d[i] * d[i];
  return record_op(Tensor::from(x.shape(), std::move(out)), {x},
                   [x](std::span<const double> g) {
                     auto gx = x.grad_buffer();
                     auto xd = x.data();
                     for (std::size_t i = 0; i < g.size(); ++i) gx[i] += 3.0 * xd[i] * g[i];
                   });
}

std::vector<std::pair<std::string, Builder>> op_cases() {
  std::vector<std::pair<std::string, Builder>> c;
  c.emplace_back("add", [](Rng& r) {
    Tensor a = uniform(r, {4, 4}, -1, 1), b = uniform(r, {1, 4}, -1, 1);
    return Problem{[a, b] { return readout(add(a, b)); }, {a, b}};
  });
  c.emplace_back("sub", [](Rng& r) {
    Tensor a = uniform(r, {4, 1}, -1, 1), b = uniform(r, {4, 4}, -1, 1);
    return Problem{[a, b] { return readout(sub(a, b)); }, {a, b}};
  });
  c.emplace_back("mul", [](Rng& r) {
    Tensor a = uniform(r, {2, 3, 4}, -1, 1), b = uniform(r, {3, 1}, -1, 1);
    return Problem{[a, b] { return readout(mul(a, b)); }, {a, b}};
  });
  c.emplace_back("div", [](Rng& r) {
    Tensor a = uniform(r, {3, 4}, -1, 1), b = uniform(r, {3, 4}, 0.5, 2.0);
    return Problem{[a, b] { return readout(div(a, b)); }, {a, b}};
  });
  c.emplace_back("scale", [](Rng& r) {
    Tensor x = uniform(r, {16}, -1, 1);
    return Problem{[x] { return readout(scale(x, -1.7)); }, {x}};
  });
  c.emplace_back("add_scalar", [](Rng& r) {
    Tensor x = uniform(r, {16}, -1, 1);
    return Problem{[x] { return readout(add_scalar(x, 0.3)); }, {x}};
  });
  c.emplace_back("square", [](Rng& r) { return unary(r, {4, 4}, -1, 1, square); });
  c.emplace_back("log", [](Rng& r) { return unary(r, {4, 4}, 0.2, 2.0, log); });
  c.emplace_back("relu", [](Rng& r) {
    Tensor x = signed_away(r, {4, 4}, 0.1, 1.0);
    return Problem{[x] { return readout(relu(x)); }, {x}};
  });
  c.emplace_back("sigmoid", [](Rng& r) { return unary(r, {4, 4}, -3, 3, sigmoid); });
  c.emplace_back("gelu", [](Rng& r) { return unary(r, {4, 4}, -3, 3, gelu); });
  c.emplace_back("clamp", [](Rng& r) {
    Tensor x = Tensor::zeros({16});
    auto d = x.mutable_data();
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] = i % 3 == 0 ? r.uniform(-1.0, -0.1) : i % 3 == 1 ? r.uniform(0.1, 0.9) : r.uniform(1.1, 2.0);
    }
    return Problem{[x] { return readout(clamp(x, 0.0, 1.0)); }, {x}};
  });
  c.emplace_back("sum", [](Rng& r) {
    Tensor x = uniform(r, {4, 4}, -1, 1);
    return Problem{[x] { return scale(sum(x), 0.7); }, {x}};
  });
  c.emplace_back("mean", [](Rng& r) {
    Tensor x = uniform(r, {4, 4}, -1, 1);
    return Problem{[x] { return mean(square(x)); }, {x}};
  });
  c.emplace_back("mean_axis", [](Rng& r) {
    Tensor x = uniform(r, {2, 3, 4}, -1, 1);
    return Problem{[x] { return readout(mean_axis(x, 1)); }, {x}};
  });
  c.emplace_back("reshape", [](Rng& r) {
    Tensor x = uniform(r, {2, 8}, -1, 1);
    return Problem{[x] { return readout(square(reshape(x, {4, 4}))); }, {x}};
  });
  c.emplace_back("permute", [](Rng& r) {
    Tensor x = uniform(r, {2, 3, 4}, -1, 1);
    return Problem{[x] { return readout(permute(x, {2, 0, 1})); }, {x}};
  });
  c.emplace_back("slice", [](Rng& r) {
    Tensor x = uniform(r, {3, 4, 4}, -1, 1);
    return Problem{[x] { return readout(slice(x, 1, 1, 3)); }, {x}};
  });
  c.emplace_back("concat", [](Rng& r) {
    Tensor a = uniform(r, {2, 3}, -1, 1), b = uniform(r, {2, 5}, -1, 1);
    return Problem{[a, b] { return readout(concat(a, b, 1)); }, {a, b}};
  });
  c.emplace_back("concat_channels", [](Rng& r) {
    Tensor a = uniform(r, {2, 3, 3}, -1, 1), b = uniform(r, {1, 3, 3}, -1, 1);
    return Problem{[a, b] { return readout(concat_channels(a, b)); }, {a, b}};
  });
  c.emplace_back("gather_rows", [](Rng& r) {
    Tensor t = uniform(r, {5, 3}, -1, 1);
    auto rows = std::make_shared<const std::vector<std::size_t>>(
        std::vector<std::size_t>{4, 0, 0, 2, 4, 1});
    return Problem{[t, rows] { return readout(gather_rows(t, rows)); }, {t}};
  });
  c.emplace_back("window_partition", [](Rng& r) {
    Tensor x = uniform(r, {4, 4, 2}, -1, 1);
    return Problem{[x] { return readout(window_partition(x, 2)); }, {x}};
  });
  c.emplace_back("window_reverse", [](Rng& r) {
    Tensor w = uniform(r, {4, 4, 2}, -1, 1);
    return Problem{[w] { return readout(window_reverse(w, 4, 4)); }, {w}};
  });
  c.emplace_back("cyclic_shift", [](Rng& r) {
    Tensor x = uniform(r, {4, 4, 2}, -1, 1);
    return Problem{[x] { return readout(cyclic_shift(x, -1, 3)); }, {x}};
  });
  c.emplace_back("conv2d_3x3", [](Rng& r) {
    Tensor x = uniform(r, {2, 5, 5}, -1, 1), k = uniform(r, {2, 2, 3, 3}, -1, 1),
           b = uniform(r, {2}, -1, 1);
    return Problem{[x, k, b] { return readout(conv2d(x, k, b, 1, 1)); }, {x, k, b}};
  });
  c.emplace_back("conv2d_1x1", [](Rng& r) {
    Tensor x = uniform(r, {3, 4, 4}, -1, 1), k = uniform(r, {2, 3, 1, 1}, -1, 1),
           b = uniform(r, {2}, -1, 1);
    return Problem{[x, k, b] { return readout(conv2d(x, k, b, 1, 0)); }, {x, k, b}};
  });
  c.emplace_back("conv2d_strided", [](Rng& r) {
    Tensor x = uniform(r, {2, 5, 5}, -1, 1), k = uniform(r, {2, 2, 3, 3}, -1, 1);
    return Problem{[x, k] { return readout(conv2d(x, k, Tensor(), 2, 1)); }, {x, k}};
  });
  c.emplace_back("linear", [](Rng& r) {
    Tensor x = uniform(r, {2, 3, 4}, -1, 1), w = uniform(r, {5, 4}, -1, 1),
           b = uniform(r, {5}, -1, 1);
    return Problem{[x, w, b] { return readout(linear(x, w, b)); }, {x, w, b}};
  });
  c.emplace_back("matmul", [](Rng& r) {
    Tensor a = uniform(r, {2, 3, 4}, -1, 1), b = uniform(r, {2, 4, 3}, -1, 1);
    return Problem{[a, b] { return readout(matmul(a, b)); }, {a, b}};
  });
  c.emplace_back("matmul_transposed", [](Rng& r) {
    Tensor a = uniform(r, {2, 3, 4}, -1, 1), b = uniform(r, {2, 5, 4}, -1, 1);
    return Problem{[a, b] { return readout(matmul(a, b, true)); }, {a, b}};
  });
  c.emplace_back("layer_norm", [](Rng& r) {
    Tensor x = uniform(r, {3, 6}, -1, 1), g = uniform(r, {6}, 0.5, 1.5),
           b = uniform(r, {6}, -1, 1);
    return Problem{[x, g, b] { return readout(layer_norm(x, g, b, 1e-5)); }, {x, g, b}};
  });
  c.emplace_back("softmax", [](Rng& r) {
    Tensor x = uniform(r, {3, 5}, -2, 2);
    return Problem{[x] { return readout(softmax(x)); }, {x}};
  });
  return c;
}

std::vector<std::pair<std::string, Builder>> loss_cases() {
  std::vector<std::pair<std::string, Builder>> c;
  c.emplace_back("bce_loss", [](Rng& r) {
    Tensor p = uniform(r, {6}, 0.05, 0.95);
    Tensor y = Tensor::zeros({6});
    for (double& v : y.mutable_data()) v = static_cast<double>(r.below(2));
    return Problem{[p, y] { return bce_loss(p, y); }, {p}};
  });
  c.emplace_back("mse_loss", [](Rng& r) {
    Tensor a = uniform(r, {3, 4, 4}, 0, 1), b = uniform(r, {3, 4, 4}, 0, 1);
    return Problem{[a, b] { return mse_loss(a, b); }, {a, b}};
  });
  c.emplace_back("ssim_loss", [](Rng& r) {
    Tensor a = uniform(r, {1, 8, 8}, 0, 1), b = uniform(r, {1, 8, 8}, 0, 1);
    return Problem{[a, b] { return ssim_loss(a, b); }, {a, b}};
  });
  c.emplace_back("perceptual_loss", [](Rng& r) {
    auto fx = std::make_shared<FeatureExtractor>(FeatureExtractor::seeded());
    Tensor a = uniform(r, {3, 4, 4}, 0, 1), b = uniform(r, {3, 4, 4}, 0, 1);
    return Problem{[a, b, fx] { return perceptual_loss(a, b, *fx); }, {a}};
  });
  c.emplace_back("loss_global_or_color", [](Rng& r) {
    auto fx = std::make_shared<FeatureExtractor>(FeatureExtractor::seeded());
    Tensor a = uniform(r, {3, 4, 4}, 0, 1), b = uniform(r, {3, 4, 4}, 0, 1);
    return Problem{[a, b, fx] { return loss_global_or_color(a, b, *fx); }, {a}};
  });
  return c;
}

std::vector<std::pair<std::string, Builder>> network_cases(std::size_t coords) {
  std::vector<std::pair<std::string, Builder>> c;
  c.emplace_back("scnet_8x8", [coords](Rng& r) {
    auto w = std::make_shared<NamedTensorStore>(
        build_default_weights(SCNetSpec::standard(), r.next()));
    for (Tensor t : w->tensors()) {
      for (double& v : t.mutable_data()) v += r.uniform(-0.02, 0.02);
    }
    Tensor v = uniform(r, {1, 8, 8}, 0, 1);
    std::vector<Tensor> inputs = w->tensors();
    inputs.push_back(v);
    return Problem{[w, v] { return readout(scnet_forward(v, *w)); }, inputs, coords};
  });
  c.emplace_back("mcnet_8x8", [coords](Rng& r) {
    auto w = std::make_shared<NamedTensorStore>(
        build_default_weights(MCNetSpec::standard(), r.next()));
    for (Tensor t : w->tensors()) {
      for (double& v : t.mutable_data()) v += r.uniform(-0.02, 0.02);
    }
    Tensor img = uniform(r, {3, 8, 8}, 0, 1);
    std::vector<Tensor> inputs = w->tensors();
    inputs.push_back(img);
    return Problem{[w, img] { return readout(mcnet_forward(img, *w)); }, inputs, coords};
  });
  c.emplace_back("swin_block_pair_4x4", [](Rng& r) {
    const std::size_t ch = 8, heads = 2, window = 2;
    std::vector<std::pair<std::string, Shape>> shapes;
    for (int b = 0; b < 2; ++b) {
      const std::string p = "blk.block" + std::to_string(b);
      shapes.push_back({p + ".ln1.w", {ch}});
      shapes.push_back({p + ".ln1.b", {ch}});
      shapes.push_back({p + ".qkv.w", {3 * ch, ch}});
      shapes.push_back({p + ".qkv.b", {3 * ch}});
      shapes.push_back({p + ".rpb.w", {(2 * window - 1) * (2 * window - 1), heads}});
      shapes.push_back({p + ".proj.w", {ch, ch}});
      shapes.push_back({p + ".proj.b", {ch}});
      shapes.push_back({p + ".ln2.w", {ch}});
      shapes.push_back({p + ".ln2.b", {ch}});
      shapes.push_back({p + ".mlp1.w", {4 * ch, ch}});
      shapes.push_back({p + ".mlp1.b", {4 * ch}});
      shapes.push_back({p + ".mlp2.w", {ch, 4 * ch}});
      shapes.push_back({p + ".mlp2.b", {ch}});
    }
    auto w = std::make_shared<NamedTensorStore>(random_store(shapes, r, 0.4));
    Tensor x = uniform(r, {4, 4, ch}, -1, 1);
    std::vector<Tensor> inputs = w->tensors();
    inputs.push_back(x);
    const BlockGeometry g{4, 4, ch, heads, window};
    return Problem{[w, x, g] { return readout(swin_block_pair(x, *w, "blk", 0, g)); }, inputs,
                   16, key_bias_exclusion(*w)};
  });
  c.emplace_back("patch_merging", [](Rng& r) {
    auto w = std::make_shared<NamedTensorStore>(random_store(
        {{"m.norm.w", {8}}, {"m.norm.b", {8}}, {"m.reduce.w", {4, 8}}}, r, 0.5));
    Tensor x = uniform(r, {4, 4, 2}, -1, 1);
    std::vector<Tensor> inputs = w->tensors();
    inputs.push_back(x);
    return Problem{[w, x] { return readout(patch_merging(x, *w, "m")); }, inputs};
  });
  c.emplace_back("slcformer_toy", [](Rng& r) {
    SLCformerConfig cfg = SLCformerConfig::toy();
    cfg.input_resolution = 16;
    cfg.patch_size = 2;
    cfg.stage_depths = {2, 2, 0, 0};
    auto w = std::make_shared<NamedTensorStore>(random_store(parameter_shapes(cfg), r, 0.3));
    Tensor img = uniform(r, {3, 16, 16}, 0, 1);
    std::vector<Tensor> inputs = w->tensors();
    inputs.push_back(img);
    return Problem{[w, img, cfg] { return sum(sigmoid(slcformer_logit(img, *w, cfg))); },
                   inputs, 3, key_bias_exclusion(*w)};
  });
  return c;
}

GradSuiteRow run_case(const std::string& name, const Builder& build, double tolerance,
                      const GradSuiteOptions& options) {
  GradSuiteRow row{name, 0.0, tolerance, 0, 0};
  for (std::size_t s = 0; s < options.seeds; ++s) {
    const std::uint64_t seed = options.first_seed + s;
    Rng rng(seed * 7919 + 17);
    Problem p = build(rng);
    GradCheckOptions gc;
    gc.max_coords_per_input = p.coords;
    gc.seed = seed;
    gc.exclude = p.exclude;
    const GradCheckResult r = grad_check(p.closure, p.inputs, gc);
    row.max_rel_error = std::max(row.max_rel_error, r.max_rel_error);
    row.checked += r.checked;
    row.skipped += r.skipped_near_kink;
  }
  return row;
}

}  // namespace

std::vector<GradSuiteRow> run_gradient_suite(const GradSuiteOptions& options) {
  std::vector<GradSuiteRow> rows;
  for (const auto& [name, build] : op_cases()) {
    rows.push_back(run_case(name, build, kOpTolerance, options));
  }
  for (const auto& [name, build] : loss_cases()) {
    rows.push_back(run_case(name, build, kNetworkTolerance, options));
  }
  for (const auto& [name, build] : network_cases(options.network_coords)) {
    rows.push_back(run_case(name, build, kNetworkTolerance, options));
  }
  if (options.inject_fault) {
    const Builder faulty = [](Rng& r) {
      Tensor x = uniform(r, {4, 4}, -1, 1);
      return Problem{[x] { return readout(faulty_square(x)); }, {x}};
    };
    rows.push_back(run_case("injected_fault", faulty, kOpTolerance, options));
  }
  return rows;
}

}  // namespace alen
