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

#include "alen/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace alen {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  auto node = std::make_shared<detail::TensorNode>();
  node->data.assign(shape_numel(shape), value);
  node->shape = std::move(shape);
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<double> data) {
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("tensor shape " + shape_to_string(shape) + " does not match " +
                     std::to_string(data.size()) + " elements");
  }
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) { return from({}, {value}); }

const Shape& Tensor::shape() const {
  if (!node_) throw Error("use of undefined tensor");
  return node_->shape;
}

std::size_t Tensor::dim(int i) const {
  const auto& s = shape();
  const int r = static_cast<int>(s.size());
  const int idx = i < 0 ? r + i : i;
  if (idx < 0 || idx >= r) throw ShapeError("dimension index out of range");
  return s[static_cast<std::size_t>(idx)];
}

std::size_t Tensor::numel() const { return node_ ? node_->data.size() : 0; }

std::span<const double> Tensor::data() const {
  if (!node_) throw Error("use of undefined tensor");
  return node_->data;
}

std::span<double> Tensor::mutable_data() {
  if (!node_) throw Error("use of undefined tensor");
  return node_->data;
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_to_string(shape()));
  return node_->data[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  if (!node_) throw Error("use of undefined tensor");
  node_->requires_grad = on;
  return *this;
}

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::vector<double> Tensor::gradient() const {
  if (!node_) return {};
  if (node_->grad.empty()) return std::vector<double>(node_->data.size(), 0.0);
  return node_->grad;
}

std::span<double> Tensor::grad_buffer() const {
  if (node_->grad.empty()) node_->grad.assign(node_->data.size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}

Tensor Tensor::clone() const { return from(shape(), node_->data); }

// ---------------------------------------------------------------------------
// Tape

namespace {
thread_local Tape* g_active_tape = nullptr;
thread_local KinkMonitor* g_active_monitor = nullptr;
}  // namespace

void Tape::record(std::function<void()> backward_step) {
  if (consumed_) throw Error("tape already consumed");
  steps_.push_back(std::move(backward_step));
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw Error("tape already consumed");
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward requires a scalar loss");
  }
  consumed_ = true;
  auto& node = *loss.node();
  if (node.grad.empty()) node.grad.assign(1, 0.0);
  node.grad[0] += 1.0;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
  steps_.clear();
}

Tape* Tape::active() { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

void backward(const Tensor& loss, Tape& tape) { tape.backward(loss); }

bool any_requires_grad(std::initializer_list<Tensor> inputs) {
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor& t) { return t.requires_grad(); });
}

Tensor record_op(Tensor output, std::initializer_list<Tensor> inputs, BackwardFn backward) {
  Tape* tape = Tape::active();
  if (tape == nullptr || !any_requires_grad(inputs)) return output;
  output.set_requires_grad(true);
  std::shared_ptr<detail::TensorNode> node = output.node();
  tape->record([node, fn = std::move(backward)] {
    if (node->grad.empty()) return;
    fn(node->grad);
  });
  return output;
}

void accumulate_grad(const Tensor& t, std::span<const double> values) {
  if (!t.requires_grad()) return;
  auto g = t.grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += values[i];
}

// ---------------------------------------------------------------------------
// KinkMonitor

KinkMonitor::KinkMonitor() : previous_(g_active_monitor) { g_active_monitor = this; }
KinkMonitor::~KinkMonitor() { g_active_monitor = previous_; }

void KinkMonitor::note(std::span<const double> values, double lo, double hi) {
  KinkMonitor* m = g_active_monitor;
  if (m == nullptr) return;
  std::uint64_t h = m->hash_;
  for (double v : values) {
    const std::uint64_t code = v < lo ? 1 : (v > hi ? 2 : 0);
    h = (h ^ code) * 1099511628211ULL;
  }
  m->hash_ = h;
}

// ---------------------------------------------------------------------------
// Elementwise

namespace {

using IndexMap = std::shared_ptr<const std::vector<std::size_t>>;

struct BroadcastPlan {
  Shape out;
  IndexMap a_index;  // null when a maps 1:1 onto out
  IndexMap b_index;
};

IndexMap broadcast_index(const Shape& in, const Shape& out) {
  if (in == out) return nullptr;
  const std::size_t r = out.size();
  const std::size_t offset = r - in.size();
  // Strides of `in` aligned to `out`, zero on broadcast dimensions.
  std::vector<std::size_t> stride(r, 0);
  std::size_t s = 1;
  for (std::size_t i = in.size(); i-- > 0;) {
    stride[i + offset] = in[i] == 1 ? 0 : s;
    s *= in[i];
  }
  auto map = std::make_shared<std::vector<std::size_t>>(shape_numel(out));
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t flat = 0; flat < map->size(); ++flat) {
    std::size_t src = 0;
    for (std::size_t d = 0; d < r; ++d) src += idx[d] * stride[d];
    (*map)[flat] = src;
    for (std::size_t d = r; d-- > 0;) {
      if (++idx[d] < out[d]) break;
      idx[d] = 0;
    }
  }
  return map;
}

BroadcastPlan plan_broadcast(const Shape& a, const Shape& b) {
  BroadcastPlan plan;
  const std::size_t r = std::max(a.size(), b.size());
  plan.out.assign(r, 1);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    const std::size_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError("cannot broadcast " + shape_to_string(a) + " with " +
                       shape_to_string(b));
    }
    plan.out[i] = std::max(da, db);
  }
  plan.a_index = broadcast_index(a, plan.out);
  plan.b_index = broadcast_index(b, plan.out);
  return plan;
}

inline std::size_t map_at(const IndexMap& m, std::size_t i) { return m ? (*m)[i] : i; }

// f(a, b) -> value; da(a, b) and db(a, b) -> local partial derivatives.
template <class F, class DA, class DB>
Tensor binary_op(const Tensor& a, const Tensor& b, F f, DA da, DB db) {
  BroadcastPlan plan = plan_broadcast(a.shape(), b.shape());
  const std::size_t n = shape_numel(plan.out);
  std::vector<double> out(n);
  auto ad = a.data();
  auto bd = b.data();
  if (!plan.a_index && !plan.b_index) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(ad[i], bd[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = f(ad[map_at(plan.a_index, i)], bd[map_at(plan.b_index, i)]);
    }
  }
  return record_op(Tensor::from(plan.out, std::move(out)), {a, b},
                   [a, b, plan, da, db](std::span<const double> g) mutable {
                     auto ad = a.data();
                     auto bd = b.data();
                     if (a.requires_grad()) {
                       auto ga = a.grad_buffer();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         const std::size_t ia = map_at(plan.a_index, i);
                         const std::size_t ib = map_at(plan.b_index, i);
                         ga[ia] += g[i] * da(ad[ia], bd[ib]);
                       }
                     }
                     if (b.requires_grad()) {
                       auto gb = b.grad_buffer();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         const std::size_t ia = map_at(plan.a_index, i);
                         const std::size_t ib = map_at(plan.b_index, i);
                         gb[ib] += g[i] * db(ad[ia], bd[ib]);
                       }
                     }
                   });
}

// f(x) -> y; df(x, y) -> dy/dx.
template <class F, class DF>
Tensor unary_op(const Tensor& x, F f, DF df) {
  auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) out[i] = f(xd[i]);
  Tensor y = Tensor::from(x.shape(), std::move(out));
  std::shared_ptr<detail::TensorNode> yn = y.node();
  return record_op(std::move(y), {x}, [x, yn, df](std::span<const double> g) mutable {
    auto xd = x.data();
    auto gx = x.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xd[i], yn->data[i]);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x / y; }, [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Tensor scale(const Tensor& x, double factor) {
  return unary_op(
      x, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double value) {
  return unary_op(
      x, [value](double v) { return v + value; }, [](double, double) { return 1.0; });
}

Tensor square(const Tensor& x) {
  return unary_op(
      x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor log(const Tensor& x) {
  return unary_op(
      x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor relu(const Tensor& x) {
  KinkMonitor::note(x.data(), std::numeric_limits<double>::denorm_min(),
                    std::numeric_limits<double>::infinity());
  return unary_op(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor gelu(const Tensor& x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return unary_op(
      x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
      [](double v, double) {
        const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
        return cdf + v * kInvSqrt2Pi * std::exp(-0.5 * v * v);
      });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  KinkMonitor::note(x.data(), lo, hi);
  return unary_op(
      x, [lo, hi](double v) { return std::min(hi, std::max(lo, v)); },
      [lo, hi](double v, double) { return (v < lo || v > hi) ? 0.0 : 1.0; });
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return record_op(Tensor::scalar(acc), {x}, [x](std::span<const double> g) mutable {
    auto gx = x.grad_buffer();
    for (double& v : gx) v += g[0];
  });
}

Tensor mean(const Tensor& x) {
  const double n = static_cast<double>(x.numel());
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return record_op(Tensor::scalar(acc / n), {x}, [x, n](std::span<const double> g) mutable {
    auto gx = x.grad_buffer();
    const double share = g[0] / n;
    for (double& v : gx) v += share;
  });
}

Tensor mean_axis(const Tensor& x, std::size_t axis) {
  const Shape& s = x.shape();
  if (axis >= s.size()) throw ShapeError("mean_axis: axis out of range");
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = s[axis];
  Shape out_shape;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i != axis) out_shape.push_back(s[i]);
  std::vector<double> out(outer * inner, 0.0);
  auto xd = x.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t k = 0; k < len; ++k)
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += xd[(o * len + k) * inner + i];
  const double n = static_cast<double>(len);
  for (double& v : out) v /= n;
  return record_op(Tensor::from(out_shape, std::move(out)), {x},
                   [x, outer, inner, len, n](std::span<const double> g) mutable {
                     auto gx = x.grad_buffer();
                     for (std::size_t o = 0; o < outer; ++o)
                       for (std::size_t k = 0; k < len; ++k)
                         for (std::size_t i = 0; i < inner; ++i)
                           gx[(o * len + k) * inner + i] += g[o * inner + i] / n;
                   });
}

// ---------------------------------------------------------------------------
// Layout

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape " + shape_to_string(x.shape()) + " -> " + shape_to_string(shape));
  }
  std::vector<double> copy(x.data().begin(), x.data().end());
  return record_op(Tensor::from(std::move(shape), std::move(copy)), {x},
                   [x](std::span<const double> g) mutable { accumulate_grad(x, g); });
}

Tensor gather_flat(const Tensor& x, Shape out_shape, IndexMap source) {
  if (shape_numel(out_shape) != source->size()) {
    throw ShapeError("gather_flat: index map size does not match output shape");
  }
  auto xd = x.data();
  std::vector<double> out(source->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t s = (*source)[i];
    if (s >= xd.size()) throw ShapeError("gather_flat: source index out of range");
    out[i] = xd[s];
  }
  return record_op(Tensor::from(std::move(out_shape), std::move(out)), {x},
                   [x, source](std::span<const double> g) mutable {
                     auto gx = x.grad_buffer();
                     for (std::size_t i = 0; i < g.size(); ++i) gx[(*source)[i]] += g[i];
                   });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
  const Shape& s = x.shape();
  const std::size_t r = s.size();
  if (axes.size() != r) throw ShapeError("permute: axes rank mismatch");
  std::vector<bool> seen(r, false);
  for (std::size_t a : axes) {
    if (a >= r || seen[a]) throw ShapeError("permute: invalid axes");
    seen[a] = true;
  }
  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * s[i];
  Shape out_shape(r);
  std::vector<std::size_t> stride(r);
  for (std::size_t i = 0; i < r; ++i) {
    out_shape[i] = s[axes[i]];
    stride[i] = in_stride[axes[i]];
  }
  auto map = std::make_shared<std::vector<std::size_t>>(x.numel());
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t flat = 0; flat < map->size(); ++flat) {
    std::size_t src = 0;
    for (std::size_t d = 0; d < r; ++d) src += idx[d] * stride[d];
    (*map)[flat] = src;
    for (std::size_t d = r; d-- > 0;) {
      if (++idx[d] < out_shape[d]) break;
      idx[d] = 0;
    }
  }
  return gather_flat(x, std::move(out_shape), std::move(map));
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& s = x.shape();
  if (axis >= s.size() || begin >= end || end > s[axis]) {
    throw ShapeError("slice: invalid range on " + shape_to_string(s));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = end - begin;
  Shape out_shape = s;
  out_shape[axis] = len;
  auto map = std::make_shared<std::vector<std::size_t>>();
  map->reserve(outer * len * inner);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t k = begin; k < end; ++k)
      for (std::size_t i = 0; i < inner; ++i) map->push_back((o * s[axis] + k) * inner + i);
  return gather_flat(x, std::move(out_shape), std::move(map));
}

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != sb.size() || axis >= sa.size()) {
    throw ShapeError("concat: rank mismatch " + shape_to_string(sa) + " vs " + shape_to_string(sb));
  }
  for (std::size_t i = 0; i < sa.size(); ++i) {
    if (i != axis && sa[i] != sb[i]) {
      throw ShapeError("concat: shape mismatch " + shape_to_string(sa) + " vs " +
                       shape_to_string(sb));
    }
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= sa[i];
  for (std::size_t i = axis + 1; i < sa.size(); ++i) inner *= sa[i];
  const std::size_t block_a = sa[axis] * inner;
  const std::size_t block_b = sb[axis] * inner;
  Shape out_shape = sa;
  out_shape[axis] = sa[axis] + sb[axis];
  std::vector<double> out;
  out.reserve(outer * (block_a + block_b));
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t o = 0; o < outer; ++o) {
    out.insert(out.end(), ad.begin() + o * block_a, ad.begin() + (o + 1) * block_a);
    out.insert(out.end(), bd.begin() + o * block_b, bd.begin() + (o + 1) * block_b);
  }
  return record_op(Tensor::from(std::move(out_shape), std::move(out)), {a, b},
                   [a, b, outer, block_a, block_b](std::span<const double> g) mutable {
                     const std::size_t stride = block_a + block_b;
                     if (a.requires_grad()) {
                       auto ga = a.grad_buffer();
                       for (std::size_t o = 0; o < outer; ++o)
                         for (std::size_t i = 0; i < block_a; ++i)
                           ga[o * block_a + i] += g[o * stride + i];
                     }
                     if (b.requires_grad()) {
                       auto gb = b.grad_buffer();
                       for (std::size_t o = 0; o < outer; ++o)
                         for (std::size_t i = 0; i < block_b; ++i)
                           gb[o * block_b + i] += g[o * stride + block_a + i];
                     }
                   });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (!b.defined()) return a;
  if (!a.defined()) return b;
  if (a.rank() != 3 || b.rank() != 3) throw ShapeError("concat_channels expects [C,H,W] tensors");
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
    throw ShapeError("concat_channels: spatial mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
  return concat(a, b, 0);
}

Tensor gather_rows(const Tensor& table, IndexMap rows) {
  if (table.rank() != 2) throw ShapeError("gather_rows expects a [N,D] table");
  const std::size_t n = table.dim(0);
  const std::size_t d = table.dim(1);
  auto map = std::make_shared<std::vector<std::size_t>>();
  map->reserve(rows->size() * d);
  for (std::size_t r : *rows) {
    if (r >= n) throw ShapeError("gather_rows: row index out of range");
    for (std::size_t j = 0; j < d; ++j) map->push_back(r * d + j);
  }
  return gather_flat(table, {rows->size(), d}, std::move(map));
}

Tensor window_partition(const Tensor& x, std::size_t window) {
  if (x.rank() != 3) throw ShapeError("window_partition expects [H,W,C]");
  const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  if (window == 0 || h % window != 0 || w % window != 0) {
    throw ShapeError("window_partition: " + shape_to_string(x.shape()) +
                     " not divisible by window " + std::to_string(window));
  }
  const std::size_t nwy = h / window, nwx = w / window;
  auto map = std::make_shared<std::vector<std::size_t>>();
  map->reserve(x.numel());
  for (std::size_t wy = 0; wy < nwy; ++wy)
    for (std::size_t wx = 0; wx < nwx; ++wx)
      for (std::size_t ty = 0; ty < window; ++ty)
        for (std::size_t tx = 0; tx < window; ++tx)
          for (std::size_t k = 0; k < c; ++k)
            map->push_back(((wy * window + ty) * w + wx * window + tx) * c + k);
  return gather_flat(x, {nwy * nwx, window * window, c}, std::move(map));
}

Tensor window_reverse(const Tensor& windows, std::size_t height, std::size_t width) {
  if (windows.rank() != 3) throw ShapeError("window_reverse expects [nW, M*M, C]");
  const std::size_t nw = windows.dim(0), tokens = windows.dim(1), c = windows.dim(2);
  const auto window = static_cast<std::size_t>(std::llround(std::sqrt(double(tokens))));
  if (window * window != tokens || nw * tokens != height * width || height % window != 0 ||
      width % window != 0) {
    throw ShapeError("window_reverse: " + shape_to_string(windows.shape()) +
                     " does not tile a " + std::to_string(height) + "x" + std::to_string(width) +
                     " grid");
  }
  const std::size_t nwx = width / window;
  auto map = std::make_shared<std::vector<std::size_t>>();
  map->reserve(windows.numel());
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t xx = 0; xx < width; ++xx) {
      const std::size_t win = (y / window) * nwx + xx / window;
      const std::size_t tok = (y % window) * window + xx % window;
      for (std::size_t k = 0; k < c; ++k) map->push_back((win * tokens + tok) * c + k);
    }
  return gather_flat(windows, {height, width, c}, std::move(map));
}

Tensor cyclic_shift(const Tensor& x, long dy, long dx) {
  if (x.rank() != 3) throw ShapeError("cyclic_shift expects [H,W,C]");
  const auto h = static_cast<long>(x.dim(0));
  const auto w = static_cast<long>(x.dim(1));
  const std::size_t c = x.dim(2);
  auto mod = [](long v, long m) { return ((v % m) + m) % m; };
  auto map = std::make_shared<std::vector<std::size_t>>();
  map->reserve(x.numel());
  for (long y = 0; y < h; ++y)
    for (long xx = 0; xx < w; ++xx) {
      const auto sy = static_cast<std::size_t>(mod(y - dy, h));
      const auto sx = static_cast<std::size_t>(mod(xx - dx, w));
      for (std::size_t k = 0; k < c; ++k)
        map->push_back((sy * static_cast<std::size_t>(w) + sx) * c + k);
    }
  return gather_flat(x, x.shape(), std::move(map));
}

// ---------------------------------------------------------------------------
// conv2d

namespace {

// Fixed-order dot product with eight interleaved partial sums.
double dot8(const double* a, const double* b, std::size_t n) {
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (std::size_t j = 0; j < 8; ++j) acc[j] += a[i + j] * b[i + j];
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

struct ConvGeometry {
  std::size_t cin, h, w, cout, k, stride, pad, ho, wo, hp, wp;
};

ConvGeometry conv_geometry(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                           std::size_t stride, std::size_t padding) {
  if (input.rank() != 3) throw ShapeError("conv2d: input must be [C,H,W], got " +
                                          shape_to_string(input.shape()));
  if (kernel.rank() != 4 || kernel.dim(2) != kernel.dim(3)) {
    throw ShapeError("conv2d: kernel must be [C_out,C_in,k,k], got " +
                     shape_to_string(kernel.shape()));
  }
  ConvGeometry g{};
  g.cin = input.dim(0);
  g.h = input.dim(1);
  g.w = input.dim(2);
  g.cout = kernel.dim(0);
  g.k = kernel.dim(2);
  g.stride = stride;
  g.pad = padding;
  if (kernel.dim(1) != g.cin) {
    throw ShapeError("conv2d: input has " + std::to_string(g.cin) + " channels, kernel expects " +
                     std::to_string(kernel.dim(1)));
  }
  if (g.k < 1 || stride < 1) throw ShapeError("conv2d: kernel and stride must be >= 1");
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != g.cout)) {
    throw ShapeError("conv2d: bias shape " + shape_to_string(bias.shape()) + " for " +
                     std::to_string(g.cout) + " output channels");
  }
  g.hp = g.h + 2 * padding;
  g.wp = g.w + 2 * padding;
  if (g.hp < g.k || g.wp < g.k) throw ShapeError("conv2d: non-positive output size");
  g.ho = (g.hp - g.k) / stride + 1;
  g.wo = (g.wp - g.k) / stride + 1;
  return g;
}

std::vector<double> pad_planes(std::span<const double> x, const ConvGeometry& g) {
  std::vector<double> out(g.cin * g.hp * g.wp, 0.0);
  for (std::size_t c = 0; c < g.cin; ++c)
    for (std::size_t y = 0; y < g.h; ++y)
      std::copy_n(&x[(c * g.h + y) * g.w], g.w, &out[(c * g.hp + y + g.pad) * g.wp + g.pad]);
  return out;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  const ConvGeometry g = conv_geometry(input, kernel, bias, stride, padding);
  auto padded = std::make_shared<std::vector<double>>(pad_planes(input.data(), g));
  auto kd = kernel.data();
  const std::size_t kk = g.k * g.k;
  std::vector<double> out(g.cout * g.ho * g.wo, 0.0);

  if (g.stride == 1) {
    // Accumulate each output plane in padded-row layout so the innermost loop
    // runs over one contiguous span; columns >= wo are scratch.
    const std::size_t span = (g.ho - 1) * g.wp + g.wo;
    std::vector<double> acc(g.ho * g.wp);
    for (std::size_t oc = 0; oc < g.cout; ++oc) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t ic = 0; ic < g.cin; ++ic) {
        const double* plane = padded->data() + ic * g.hp * g.wp;
        const double* wrow = &kd[(oc * g.cin + ic) * kk];
        for (std::size_t ky = 0; ky < g.k; ++ky)
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            const double wv = wrow[ky * g.k + kx];
            const double* src = plane + ky * g.wp + kx;
            double* dst = acc.data();
            for (std::size_t i = 0; i < span; ++i) dst[i] += wv * src[i];
          }
      }
      double* o = &out[oc * g.ho * g.wo];
      for (std::size_t y = 0; y < g.ho; ++y)
        for (std::size_t x = 0; x < g.wo; ++x) o[y * g.wo + x] = acc[y * g.wp + x];
    }
  } else {
    for (std::size_t oc = 0; oc < g.cout; ++oc)
      for (std::size_t ic = 0; ic < g.cin; ++ic) {
        const double* plane = padded->data() + ic * g.hp * g.wp;
        for (std::size_t ky = 0; ky < g.k; ++ky)
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            const double wv = kd[((oc * g.cin + ic) * g.k + ky) * g.k + kx];
            for (std::size_t y = 0; y < g.ho; ++y)
              for (std::size_t x = 0; x < g.wo; ++x)
                out[(oc * g.ho + y) * g.wo + x] +=
                    wv * plane[(y * g.stride + ky) * g.wp + x * g.stride + kx];
          }
      }
  }
  if (bias.defined()) {
    auto bd = bias.data();
    for (std::size_t oc = 0; oc < g.cout; ++oc)
      for (std::size_t i = 0; i < g.ho * g.wo; ++i) out[oc * g.ho * g.wo + i] += bd[oc];
  }

  return record_op(
      Tensor::from({g.cout, g.ho, g.wo}, std::move(out)), {input, kernel, bias},
      [input, kernel, bias, padded, g](std::span<const double> grad) mutable {
        const std::size_t kk = g.k * g.k;
        const std::size_t plane_out = g.ho * g.wo;
        // Output gradient laid out like the padded accumulation buffer with
        // zeroed scratch columns (stride-1), or sampled directly otherwise.
        std::vector<double> gpad;
        if (g.stride == 1) {
          gpad.assign(g.cout * g.ho * g.wp, 0.0);
          for (std::size_t oc = 0; oc < g.cout; ++oc)
            for (std::size_t y = 0; y < g.ho; ++y)
              std::copy_n(&grad[(oc * g.ho + y) * g.wo], g.wo, &gpad[(oc * g.ho + y) * g.wp]);
        }
        const std::size_t span = (g.ho - 1) * g.wp + g.wo;

        if (bias.requires_grad()) {
          auto gb = bias.grad_buffer();
          for (std::size_t oc = 0; oc < g.cout; ++oc) {
            double acc = 0.0;
            for (std::size_t i = 0; i < plane_out; ++i) acc += grad[oc * plane_out + i];
            gb[oc] += acc;
          }
        }
        if (kernel.requires_grad()) {
          auto gk = kernel.grad_buffer();
          for (std::size_t oc = 0; oc < g.cout; ++oc)
            for (std::size_t ic = 0; ic < g.cin; ++ic) {
              const double* plane = padded->data() + ic * g.hp * g.wp;
              for (std::size_t ky = 0; ky < g.k; ++ky)
                for (std::size_t kx = 0; kx < g.k; ++kx) {
                  double acc = 0.0;
                  if (g.stride == 1) {
                    acc = dot8(&gpad[oc * g.ho * g.wp], plane + ky * g.wp + kx, span);
                  } else {
                    for (std::size_t y = 0; y < g.ho; ++y)
                      for (std::size_t x = 0; x < g.wo; ++x)
                        acc += grad[(oc * g.ho + y) * g.wo + x] *
                               plane[(y * g.stride + ky) * g.wp + x * g.stride + kx];
                  }
                  gk[(oc * g.cin + ic) * kk + ky * g.k + kx] += acc;
                }
            }
        }
        if (input.requires_grad()) {
          auto kd = kernel.data();
          std::vector<double> dpad(g.cin * g.hp * g.wp, 0.0);
          for (std::size_t oc = 0; oc < g.cout; ++oc)
            for (std::size_t ic = 0; ic < g.cin; ++ic) {
              double* plane = dpad.data() + ic * g.hp * g.wp;
              for (std::size_t ky = 0; ky < g.k; ++ky)
                for (std::size_t kx = 0; kx < g.k; ++kx) {
                  const double wv = kd[(oc * g.cin + ic) * kk + ky * g.k + kx];
                  if (g.stride == 1) {
                    const double* src = &gpad[oc * g.ho * g.wp];
                    double* dst = plane + ky * g.wp + kx;
                    for (std::size_t i = 0; i < span; ++i) dst[i] += wv * src[i];
                  } else {
                    for (std::size_t y = 0; y < g.ho; ++y)
                      for (std::size_t x = 0; x < g.wo; ++x)
                        plane[(y * g.stride + ky) * g.wp + x * g.stride + kx] +=
                            wv * grad[(oc * g.ho + y) * g.wo + x];
                  }
                }
            }
          auto gi = input.grad_buffer();
          for (std::size_t c = 0; c < g.cin; ++c)
            for (std::size_t y = 0; y < g.h; ++y)
              for (std::size_t x = 0; x < g.w; ++x)
                gi[(c * g.h + y) * g.w + x] += dpad[(c * g.hp + y + g.pad) * g.wp + x + g.pad];
        }
      });
}

// ---------------------------------------------------------------------------
// linear / matmul

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2) throw ShapeError("linear: weight must be [D_out,D_in]");
  const std::size_t din = weight.dim(1);
  const std::size_t dout = weight.dim(0);
  if (x.rank() == 0 || x.dim(-1) != din) {
    throw ShapeError("linear: input " + shape_to_string(x.shape()) + " vs weight " +
                     shape_to_string(weight.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != dout)) {
    throw ShapeError("linear: bias shape " + shape_to_string(bias.shape()));
  }
  const std::size_t rows = x.numel() / din;
  auto xd = x.data();
  auto wd = weight.data();
  std::vector<double> wt(din * dout);
  for (std::size_t o = 0; o < dout; ++o)
    for (std::size_t k = 0; k < din; ++k) wt[k * dout + o] = wd[o * din + k];
  std::vector<double> out(rows * dout, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double* orow = &out[r * dout];
    for (std::size_t k = 0; k < din; ++k) {
      const double xv = xd[r * din + k];
      const double* wrow = &wt[k * dout];
      for (std::size_t o = 0; o < dout; ++o) orow[o] += xv * wrow[o];
    }
    if (bias.defined()) {
      auto bd = bias.data();
      for (std::size_t o = 0; o < dout; ++o) orow[o] += bd[o];
    }
  }
  Shape out_shape = x.shape();
  out_shape.back() = dout;
  return record_op(Tensor::from(std::move(out_shape), std::move(out)), {x, weight, bias},
                   [x, weight, bias, rows, din, dout](std::span<const double> g) mutable {
                     if (x.requires_grad()) {
                       auto wd = weight.data();
                       auto gx = x.grad_buffer();
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t o = 0; o < dout; ++o) {
                           const double gv = g[r * dout + o];
                           const double* wrow = &wd[o * din];
                           double* dst = &gx[r * din];
                           for (std::size_t k = 0; k < din; ++k) dst[k] += gv * wrow[k];
                         }
                     }
                     if (weight.requires_grad()) {
                       auto xd = x.data();
                       auto gw = weight.grad_buffer();
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t o = 0; o < dout; ++o) {
                           const double gv = g[r * dout + o];
                           const double* xrow = &xd[r * din];
                           double* dst = &gw[o * din];
                           for (std::size_t k = 0; k < din; ++k) dst[k] += gv * xrow[k];
                         }
                     }
                     if (bias.requires_grad()) {
                       auto gb = bias.grad_buffer();
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t o = 0; o < dout; ++o) gb[o] += g[r * dout + o];
                     }
                   });
}

Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_b) {
  if (a.rank() < 2 || b.rank() != a.rank()) throw ShapeError("matmul: rank mismatch");
  for (std::size_t i = 0; i + 2 < a.rank(); ++i) {
    if (a.shape()[i] != b.shape()[i]) throw ShapeError("matmul: batch dims differ");
  }
  const std::size_t m = a.dim(-2), kdim = a.dim(-1);
  const std::size_t bk = transpose_b ? b.dim(-1) : b.dim(-2);
  const std::size_t n = transpose_b ? b.dim(-2) : b.dim(-1);
  if (bk != kdim) {
    throw ShapeError("matmul: inner dims " + shape_to_string(a.shape()) + " x " +
                     shape_to_string(b.shape()));
  }
  const std::size_t batch = a.numel() / (m * kdim);
  auto ad = a.data();
  auto bd = b.data();
  std::vector<double> out(batch * m * n, 0.0);
  for (std::size_t p = 0; p < batch; ++p) {
    const double* A = &ad[p * m * kdim];
    const double* B = &bd[p * kdim * n];
    double* C = &out[p * m * n];
    for (std::size_t i = 0; i < m; ++i) {
      if (transpose_b) {
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t k = 0; k < kdim; ++k) acc += A[i * kdim + k] * B[j * kdim + k];
          C[i * n + j] = acc;
        }
      } else {
        for (std::size_t k = 0; k < kdim; ++k) {
          const double av = A[i * kdim + k];
          for (std::size_t j = 0; j < n; ++j) C[i * n + j] += av * B[k * n + j];
        }
      }
    }
  }
  Shape out_shape = a.shape();
  out_shape.back() = n;
  return record_op(
      Tensor::from(std::move(out_shape), std::move(out)), {a, b},
      [a, b, batch, m, kdim, n, transpose_b](std::span<const double> g) mutable {
        auto ad = a.data();
        auto bd = b.data();
        if (a.requires_grad()) {
          auto ga = a.grad_buffer();
          for (std::size_t p = 0; p < batch; ++p) {
            const double* B = &bd[p * kdim * n];
            const double* G = &g[p * m * n];
            double* dA = &ga[p * m * kdim];
            for (std::size_t i = 0; i < m; ++i)
              for (std::size_t j = 0; j < n; ++j) {
                const double gv = G[i * n + j];
                if (transpose_b) {
                  for (std::size_t k = 0; k < kdim; ++k) dA[i * kdim + k] += gv * B[j * kdim + k];
                } else {
                  for (std::size_t k = 0; k < kdim; ++k) dA[i * kdim + k] += gv * B[k * n + j];
                }
              }
          }
        }
        if (b.requires_grad()) {
          auto gb = b.grad_buffer();
          for (std::size_t p = 0; p < batch; ++p) {
            const double* A = &ad[p * m * kdim];
            const double* G = &g[p * m * n];
            double* dB = &gb[p * kdim * n];
            for (std::size_t i = 0; i < m; ++i)
              for (std::size_t j = 0; j < n; ++j) {
                const double gv = G[i * n + j];
                if (transpose_b) {
                  for (std::size_t k = 0; k < kdim; ++k) dB[j * kdim + k] += gv * A[i * kdim + k];
                } else {
                  for (std::size_t k = 0; k < kdim; ++k) dB[k * n + j] += gv * A[i * kdim + k];
                }
              }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// layer_norm / softmax

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (eps <= 0.0) throw Error("layer_norm: eps must be positive");
  const std::size_t d = x.rank() ? x.dim(-1) : 0;
  if (d == 0 || gamma.numel() != d || beta.numel() != d) {
    throw ShapeError("layer_norm: last dim of " + shape_to_string(x.shape()) +
                     " does not match gamma/beta");
  }
  const std::size_t rows = x.numel() / d;
  auto xd = x.data();
  auto gd = gamma.data();
  auto bd = beta.data();
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto rstd = std::make_shared<std::vector<double>>(rows);
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = &xd[r * d];
    double mu = 0.0;
    for (std::size_t i = 0; i < d; ++i) mu += row[i];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (row[i] - mu) * (row[i] - mu);
    var /= static_cast<double>(d);
    const double rs = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t i = 0; i < d; ++i) {
      const double h = (row[i] - mu) * rs;
      (*xhat)[r * d + i] = h;
      out[r * d + i] = gd[i] * h + bd[i];
    }
  }
  return record_op(Tensor::from(x.shape(), std::move(out)), {x, gamma, beta},
                   [x, gamma, beta, xhat, rstd, rows, d](std::span<const double> g) mutable {
                     auto gd = gamma.data();
                     if (gamma.requires_grad() || beta.requires_grad()) {
                       std::vector<double> dg(d, 0.0), db(d, 0.0);
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t i = 0; i < d; ++i) {
                           dg[i] += g[r * d + i] * (*xhat)[r * d + i];
                           db[i] += g[r * d + i];
                         }
                       accumulate_grad(gamma, dg);
                       accumulate_grad(beta, db);
                     }
                     if (x.requires_grad()) {
                       auto gx = x.grad_buffer();
                       const double inv_d = 1.0 / static_cast<double>(d);
                       for (std::size_t r = 0; r < rows; ++r) {
                         double mean_g = 0.0, mean_gx = 0.0;
                         for (std::size_t i = 0; i < d; ++i) {
                           const double gh = g[r * d + i] * gd[i];
                           mean_g += gh;
                           mean_gx += gh * (*xhat)[r * d + i];
                         }
                         mean_g *= inv_d;
                         mean_gx *= inv_d;
                         for (std::size_t i = 0; i < d; ++i) {
                           const double gh = g[r * d + i] * gd[i];
                           gx[r * d + i] +=
                               (*rstd)[r] * (gh - mean_g - (*xhat)[r * d + i] * mean_gx);
                         }
                       }
                     }
                   });
}

Tensor softmax(const Tensor& x) {
  const std::size_t d = x.rank() ? x.dim(-1) : 1;
  const std::size_t rows = x.numel() / d;
  auto xd = x.data();
  auto y = std::make_shared<std::vector<double>>(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = &xd[r * d];
    double mx = row[0];
    for (std::size_t i = 1; i < d; ++i) mx = std::max(mx, row[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double e = std::exp(row[i] - mx);
      (*y)[r * d + i] = e;
      z += e;
    }
    for (std::size_t i = 0; i < d; ++i) (*y)[r * d + i] /= z;
  }
  return record_op(Tensor::from(x.shape(), *y), {x}, [x, y, rows, d](std::span<const double> g) mutable {
    auto gx = x.grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      double dotp = 0.0;
      for (std::size_t i = 0; i < d; ++i) dotp += g[r * d + i] * (*y)[r * d + i];
      for (std::size_t i = 0; i < d; ++i)
        gx[r * d + i] += (*y)[r * d + i] * (g[r * d + i] - dotp);
    }
  });
}

}  // namespace alen
