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

#include "alen/slcformer.hpp"

#include <cmath>
#include <memory>

#include "alen/random.hpp"

namespace alen {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kMaskValue = -1e9;

using IndexMap = std::shared_ptr<const std::vector<std::size_t>>;

std::string block_prefix(std::size_t stage, std::size_t block) {
  return "slc.stage" + std::to_string(stage) + ".block" + std::to_string(block);
}

std::string merge_prefix(std::size_t i) { return "slc.merge" + std::to_string(i); }

Tensor apply_linear(const NamedTensorStore& w, const std::string& name, const Tensor& x,
                    bool bias = true) {
  const Tensor& weight = w.get(name + ".w");
  return linear(x, weight, bias ? w.get(name + ".b") : Tensor());
}

Tensor apply_norm(const NamedTensorStore& w, const std::string& name, const Tensor& x) {
  return layer_norm(x, w.get(name + ".w"), w.get(name + ".b"), kLayerNormEps);
}

}  // namespace

SLCformerConfig SLCformerConfig::toy() {
  SLCformerConfig cfg;
  cfg.stage_channels = {8, 16, 32, 64};
  cfg.stage_heads = {1, 2, 4, 8};
  cfg.stage_depths = {2, 2, 2, 2};
  cfg.patch_size = 4;
  cfg.window_size = 2;
  cfg.mlp_ratio = 4.0;
  cfg.input_resolution = 32;
  return cfg;
}

std::size_t SLCformerConfig::stage_resolution(std::size_t stage) const {
  return (input_resolution / patch_size) >> stage;
}

std::size_t SLCformerConfig::stage_window(std::size_t stage) const {
  const std::size_t r = stage_resolution(stage);
  return r <= window_size ? r : window_size;
}

std::size_t SLCformerConfig::mlp_hidden(std::size_t stage) const {
  return static_cast<std::size_t>(std::lround(mlp_ratio * stage_channels[stage]));
}

void SLCformerConfig::validate() const {
  if (patch_size == 0 || window_size == 0 || input_resolution == 0) {
    throw Error("SLCformer config: patch, window and resolution must be positive");
  }
  if (!(mlp_ratio > 0.0)) throw Error("SLCformer config: mlp_ratio must be positive");
  if (input_resolution % patch_size != 0) {
    throw Error("SLCformer config: resolution " + std::to_string(input_resolution) +
                " not divisible by patch size " + std::to_string(patch_size));
  }
  for (std::size_t s = 0; s < 4; ++s) {
    const std::string tag = "SLCformer stage " + std::to_string(s) + ": ";
    if (stage_channels[s] == 0 || stage_heads[s] == 0) {
      throw Error(tag + "channels and heads must be positive");
    }
    if (s > 0 && stage_channels[s] != 2 * stage_channels[s - 1]) {
      throw Error(tag + "channels must double at each stage");
    }
    if (stage_channels[s] % stage_heads[s] != 0) {
      throw Error(tag + "channels not divisible by heads");
    }
    if (stage_depths[s] % 2 != 0) throw Error(tag + "depth must be even");
    const std::size_t r = (input_resolution / patch_size) >> s;
    if (r == 0 || (s < 3 && r % 2 != 0)) {
      throw Error(tag + "token grid cannot be merged");
    }
    if (r % stage_window(s) != 0) {
      throw Error(tag + "token grid " + std::to_string(r) + " not divisible by window " +
                  std::to_string(stage_window(s)));
    }
  }
}

std::vector<std::pair<std::string, Shape>> parameter_shapes(const SLCformerConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::string, Shape>> out;
  const std::size_t p = cfg.patch_size;
  const std::size_t c1 = cfg.stage_channels[0];
  out.emplace_back("slc.embed.proj.w", Shape{c1, 3 * p * p});
  out.emplace_back("slc.embed.proj.b", Shape{c1});
  out.emplace_back("slc.embed.norm.w", Shape{c1});
  out.emplace_back("slc.embed.norm.b", Shape{c1});
  for (std::size_t s = 0; s < 4; ++s) {
    const std::size_t c = cfg.stage_channels[s];
    const std::size_t h = cfg.stage_heads[s];
    const std::size_t m = cfg.stage_window(s);
    const std::size_t hidden = cfg.mlp_hidden(s);
    for (std::size_t n = 0; n < cfg.stage_depths[s]; ++n) {
      const std::string b = block_prefix(s, n);
      out.emplace_back(b + ".ln1.w", Shape{c});
      out.emplace_back(b + ".ln1.b", Shape{c});
      out.emplace_back(b + ".qkv.w", Shape{3 * c, c});
      out.emplace_back(b + ".qkv.b", Shape{3 * c});
      out.emplace_back(b + ".rpb.w", Shape{(2 * m - 1) * (2 * m - 1), h});
      out.emplace_back(b + ".proj.w", Shape{c, c});
      out.emplace_back(b + ".proj.b", Shape{c});
      out.emplace_back(b + ".ln2.w", Shape{c});
      out.emplace_back(b + ".ln2.b", Shape{c});
      out.emplace_back(b + ".mlp1.w", Shape{hidden, c});
      out.emplace_back(b + ".mlp1.b", Shape{hidden});
      out.emplace_back(b + ".mlp2.w", Shape{c, hidden});
      out.emplace_back(b + ".mlp2.b", Shape{c});
    }
    if (s < 3) {
      const std::string m_prefix = merge_prefix(s);
      out.emplace_back(m_prefix + ".norm.w", Shape{4 * c});
      out.emplace_back(m_prefix + ".norm.b", Shape{4 * c});
      out.emplace_back(m_prefix + ".reduce.w", Shape{2 * c, 4 * c});
    }
  }
  const std::size_t c4 = cfg.stage_channels[3];
  out.emplace_back("slc.head.norm.w", Shape{c4});
  out.emplace_back("slc.head.norm.b", Shape{c4});
  out.emplace_back("slc.head.fc.w", Shape{1, c4});
  out.emplace_back("slc.head.fc.b", Shape{1});
  return out;
}

NamedTensorStore build_default_weights(const SLCformerConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  NamedTensorStore store;
  for (auto& [name, shape] : parameter_shapes(cfg)) {
    Tensor t = Tensor::zeros(shape);
    const bool is_norm = name.find(".ln") != std::string::npos ||
                         name.find(".norm.") != std::string::npos;
    const bool is_gain = name.size() > 2 && name.compare(name.size() - 2, 2, ".w") == 0;
    if (is_norm) {
      if (is_gain) {
        for (double& v : t.mutable_data()) v = 1.0;
      }
    } else if (is_gain) {
      for (double& v : t.mutable_data()) {
        double z = rng.normal();
        while (std::abs(z) > 2.0) z = rng.normal();
        v = 0.02 * z;
      }
    }
    store.add(name, std::move(t));
  }
  return store;
}

void validate_weights(const SLCformerConfig& cfg, const NamedTensorStore& weights) {
  for (const auto& [name, shape] : parameter_shapes(cfg)) weights.require(name, shape);
}

std::vector<std::size_t> relative_position_index(std::size_t window) {
  const std::size_t m = window;
  const std::size_t n = m * m;
  std::vector<std::size_t> index(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t dy = i / m + (m - 1) - j / m;
      const std::size_t dx = i % m + (m - 1) - j % m;
      index[i * n + j] = dy * (2 * m - 1) + dx;
    }
  }
  return index;
}

Tensor shifted_window_mask(std::size_t height, std::size_t width, std::size_t window,
                           std::size_t shift) {
  auto region = [&](std::size_t v, std::size_t extent) -> std::size_t {
    if (v < extent - window) return 0;
    if (v < extent - shift) return 1;
    return 2;
  };
  std::vector<std::size_t> label(height * width);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      label[y * width + x] = region(y, height) * 3 + region(x, width);
    }
  }
  const std::size_t wy = height / window;
  const std::size_t wx = width / window;
  const std::size_t n = window * window;
  Tensor mask = Tensor::zeros({wy * wx, 1, n, n});
  auto md = mask.mutable_data();
  std::vector<std::size_t> ids(n);
  for (std::size_t w = 0; w < wy * wx; ++w) {
    const std::size_t oy = (w / wx) * window;
    const std::size_t ox = (w % wx) * window;
    for (std::size_t t = 0; t < n; ++t) {
      ids[t] = label[(oy + t / window) * width + ox + t % window];
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (ids[i] != ids[j]) md[(w * n + i) * n + j] = kMaskValue;
      }
    }
  }
  return mask;
}

Tensor patch_embed(const Tensor& img, const NamedTensorStore& weights,
                   const SLCformerConfig& cfg) {
  if (img.rank() != 3 || img.dim(0) != 3) {
    throw ShapeError("patch_embed expects [3,H,W], got " + shape_to_string(img.shape()));
  }
  const std::size_t h = img.dim(1);
  const std::size_t w = img.dim(2);
  const std::size_t p = cfg.patch_size;
  if (h % p != 0 || w % p != 0) {
    throw ShapeError("patch_embed: " + std::to_string(h) + "x" + std::to_string(w) +
                     " not divisible by patch size " + std::to_string(p));
  }
  const std::size_t gh = h / p;
  const std::size_t gw = w / p;
  const std::size_t d = 3 * p * p;
  auto map = std::make_shared<std::vector<std::size_t>>(gh * gw * d);
  std::size_t k = 0;
  for (std::size_t ty = 0; ty < gh; ++ty) {
    for (std::size_t tx = 0; tx < gw; ++tx) {
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t ky = 0; ky < p; ++ky) {
          for (std::size_t kx = 0; kx < p; ++kx) {
            (*map)[k++] = (c * h + ty * p + ky) * w + tx * p + kx;
          }
        }
      }
    }
  }
  const Tensor patches = gather_flat(img, {gh * gw, d}, std::move(map));
  return apply_norm(weights, "slc.embed.norm", apply_linear(weights, "slc.embed.proj", patches));
}

Tensor window_attention(const Tensor& x, const NamedTensorStore& weights,
                        const std::string& prefix, const BlockGeometry& g,
                        const AttentionOptions& options) {
  const std::size_t m = g.window;
  if (g.heads == 0 || g.channels % g.heads != 0) {
    throw ShapeError("window_attention: channels " + std::to_string(g.channels) +
                     " not divisible by heads " + std::to_string(g.heads));
  }
  if (m == 0 || g.height % m != 0 || g.width % m != 0) {
    throw ShapeError("window_attention: grid " + std::to_string(g.height) + "x" +
                     std::to_string(g.width) + " not divisible by window " + std::to_string(m));
  }
  if (x.shape() != Shape{g.height, g.width, g.channels}) {
    throw ShapeError("window_attention: expected tokens [" + std::to_string(g.height) + "," +
                     std::to_string(g.width) + "," + std::to_string(g.channels) + "], got " +
                     shape_to_string(x.shape()));
  }
  const std::size_t c = g.channels;
  const std::size_t heads = g.heads;
  const std::size_t d = c / heads;
  const std::size_t n = m * m;
  const std::size_t nw = (g.height / m) * (g.width / m);
  const bool shift_active = options.shifted && m < g.height && m < g.width;
  const std::size_t shift = m / 2;
  const long s = static_cast<long>(shift);

  Tensor grid = shift_active ? cyclic_shift(x, -s, -s) : x;
  const Tensor windows = window_partition(grid, m);                        // [nW, n, C]
  const Tensor qkv = apply_linear(weights, prefix + ".qkv", windows);     // [nW, n, 3C]
  const Tensor split = permute(reshape(qkv, {nw, n, 3, heads, d}), {2, 0, 3, 1, 4});
  auto part = [&](std::size_t i) {
    return reshape(slice(split, 0, i, i + 1), {nw * heads, n, d});
  };
  const Tensor q = part(0);
  const Tensor k = part(1);
  const Tensor v = part(2);

  Tensor attn = scale(matmul(q, k, true), 1.0 / std::sqrt(static_cast<double>(d)));
  attn = reshape(attn, {nw, heads, n, n});

  const Tensor& table =
      weights.require(prefix + ".rpb.w", {(2 * m - 1) * (2 * m - 1), heads});
  auto index = std::make_shared<const std::vector<std::size_t>>(relative_position_index(m));
  const Tensor bias = permute(reshape(gather_rows(table, index), {n, n, heads}), {2, 0, 1});
  attn = add(attn, bias);
  if (shift_active && options.mask) {
    attn = add(attn, shifted_window_mask(g.height, g.width, m, shift));
  }
  attn = softmax(attn);

  Tensor out = matmul(reshape(attn, {nw * heads, n, n}), v);              // [nW*h, n, d]
  out = reshape(permute(reshape(out, {nw, heads, n, d}), {0, 2, 1, 3}), {nw, n, c});
  out = apply_linear(weights, prefix + ".proj", out);
  out = window_reverse(out, g.height, g.width);
  return shift_active ? cyclic_shift(out, s, s) : out;
}

Tensor swin_block(const Tensor& x, const NamedTensorStore& weights, const std::string& prefix,
                  const BlockGeometry& g, bool shifted) {
  const Tensor attn = window_attention(apply_norm(weights, prefix + ".ln1", x), weights, prefix,
                                       g, AttentionOptions{shifted, true});
  const Tensor mid = add(attn, x);
  Tensor mlp = gelu(apply_linear(weights, prefix + ".mlp1", apply_norm(weights, prefix + ".ln2", mid)));
  mlp = apply_linear(weights, prefix + ".mlp2", mlp);
  return add(mlp, mid);
}

Tensor swin_block_pair(const Tensor& x, const NamedTensorStore& weights,
                       const std::string& stage_prefix, std::size_t first,
                       const BlockGeometry& g) {
  if (first % 2 != 0) throw Error("swin_block_pair: pair must start at an even block index");
  const std::string a = stage_prefix + ".block" + std::to_string(first);
  const std::string b = stage_prefix + ".block" + std::to_string(first + 1);
  return swin_block(swin_block(x, weights, a, g, false), weights, b, g, true);
}

Tensor patch_merging(const Tensor& x, const NamedTensorStore& weights,
                     const std::string& prefix) {
  if (x.rank() != 3) throw ShapeError("patch_merging expects [H,W,C]");
  const std::size_t h = x.dim(0);
  const std::size_t w = x.dim(1);
  const std::size_t c = x.dim(2);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("patch_merging: odd resolution " + std::to_string(h) + "x" +
                     std::to_string(w));
  }
  const std::size_t oh = h / 2;
  const std::size_t ow = w / 2;
  static constexpr std::size_t kDy[4] = {0, 1, 0, 1};
  static constexpr std::size_t kDx[4] = {0, 0, 1, 1};
  auto map = std::make_shared<std::vector<std::size_t>>(oh * ow * 4 * c);
  std::size_t k = 0;
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t xx = 0; xx < ow; ++xx) {
      for (std::size_t q = 0; q < 4; ++q) {
        const std::size_t base = ((2 * y + kDy[q]) * w + 2 * xx + kDx[q]) * c;
        for (std::size_t ch = 0; ch < c; ++ch) (*map)[k++] = base + ch;
      }
    }
  }
  const Tensor merged = gather_flat(x, {oh, ow, 4 * c}, std::move(map));
  return apply_linear(weights, prefix + ".reduce", apply_norm(weights, prefix + ".norm", merged),
                      false);
}

Tensor slcformer_logit(const Tensor& img, const NamedTensorStore& weights,
                       const SLCformerConfig& cfg) {
  cfg.validate();
  const std::size_t r = cfg.input_resolution;
  if (img.shape() != Shape{3, r, r}) {
    throw ShapeError("SLCformer expects [3," + std::to_string(r) + "," + std::to_string(r) +
                     "], got " + shape_to_string(img.shape()));
  }
  Tensor tokens = patch_embed(img, weights, cfg);
  std::size_t res = cfg.stage_resolution(0);
  tokens = reshape(tokens, {res, res, cfg.stage_channels[0]});
  for (std::size_t s = 0; s < 4; ++s) {
    const BlockGeometry g{res, res, cfg.stage_channels[s], cfg.stage_heads[s],
                          cfg.stage_window(s)};
    const std::string stage = "slc.stage" + std::to_string(s);
    for (std::size_t n = 0; n < cfg.stage_depths[s]; n += 2) {
      tokens = swin_block_pair(tokens, weights, stage, n, g);
    }
    if (s < 3) {
      tokens = patch_merging(tokens, weights, merge_prefix(s));
      res /= 2;
    }
  }
  const std::size_t c4 = cfg.stage_channels[3];
  tokens = apply_norm(weights, "slc.head.norm", reshape(tokens, {res * res, c4}));
  const Tensor pooled = mean_axis(tokens, 0);  // [C]
  return apply_linear(weights, "slc.head.fc", pooled);
}

Illumination label_from_probability(double p) {
  return p >= 0.5 ? Illumination::Global : Illumination::Local;
}

IlluminationLabel classify(const ImageRGB& img, const NamedTensorStore& weights,
                           const SLCformerConfig& cfg) {
  validate_weights(cfg, weights);
  const std::size_t r = cfg.input_resolution;
  const ImageRGB sized =
      (img.height == r && img.width == r) ? img : resize_bilinear(img, r, r);
  const double p = sigmoid(slcformer_logit(sized.to_tensor(), weights, cfg)).item();
  return {label_from_probability(p), p};
}

std::size_t count_parameters(const SLCformerConfig& cfg) {
  std::size_t total = 0;
  for (const auto& [name, shape] : parameter_shapes(cfg)) total += shape_numel(shape);
  return total;
}

std::uint64_t count_flops(const SLCformerConfig& cfg, std::size_t resolution) {
  SLCformerConfig at = cfg;
  at.input_resolution = resolution;
  at.validate();
  const std::uint64_t p = at.patch_size;
  std::uint64_t res = at.stage_resolution(0);
  std::uint64_t macs = res * res * (3 * p * p) * at.stage_channels[0];
  for (std::size_t s = 0; s < 4; ++s) {
    const std::uint64_t c = at.stage_channels[s];
    const std::uint64_t n = res * res;
    const std::uint64_t win = at.stage_window(s);
    const std::uint64_t hidden = at.mlp_hidden(s);
    const std::uint64_t block = n * c * 3 * c           // qkv
                                + 2 * n * win * win * c  // QK^T and AV
                                + n * c * c              // output projection
                                + 2 * n * c * hidden;    // MLP
    macs += block * at.stage_depths[s];
    if (s < 3) {
      macs += (n / 4) * (4 * c) * (2 * c);
      res /= 2;
    }
  }
  macs += at.stage_channels[3];
  return macs;
}

}  // namespace alen
