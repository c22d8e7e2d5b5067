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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "alen/error.hpp"

namespace alen {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {
struct TensorNode {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
};
}  // namespace detail

/// Dense row-major f64 array with an optional gradient buffer.
///
/// Tensor is a cheap handle: copies share storage. Operations never mutate
/// their inputs; only optimizers write parameter data in place through
/// mutable_data().
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor from(Shape shape, std::vector<double> data);
  static Tensor scalar(double value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  /// Dimension `i`; negative values index from the back.
  std::size_t dim(int i) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t flat_index) const { return data()[flat_index]; }

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);

  bool has_grad() const;
  /// Accumulated gradient, or zeros when nothing has flowed into this tensor.
  std::vector<double> gradient() const;
  std::span<double> grad_buffer() const;
  void zero_grad();

  /// Deep copy without gradient state.
  Tensor clone() const;
  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

  const std::shared_ptr<detail::TensorNode>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;
};

/// Ordered record of differentiable operations executed while the tape is the
/// thread's active tape (see TapeScope). One tape per thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::function<void()> backward_step);
  std::size_t size() const { return steps_.size(); }
  bool consumed() const { return consumed_; }

  /// Seeds d(loss)/d(loss) = 1 and replays the recorded steps in reverse.
  void backward(const Tensor& loss);

  static Tape* active();

 private:
  friend class TapeScope;
  std::vector<std::function<void()>> steps_;
  bool consumed_ = false;
};

/// Makes `tape` the active tape of the calling thread for the scope lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

void backward(const Tensor& loss, Tape& tape);

/// Receives the output gradient of a recorded op; must accumulate into the
/// gradients of whichever inputs require them.
using BackwardFn = std::function<void(std::span<const double> grad_output)>;

/// Registers `output` as produced from `inputs`. When a tape is active and any
/// input requires a gradient, `output` is marked as requiring one and
/// `backward` is appended to the tape. Returns `output`.
Tensor record_op(Tensor output, std::initializer_list<Tensor> inputs, BackwardFn backward);
bool any_requires_grad(std::initializer_list<Tensor> inputs);
/// grad(t) += values; no-op when t does not require a gradient.
void accumulate_grad(const Tensor& t, std::span<const double> values);

/// Observes branch decisions of piecewise ops (relu, clamp) so gradient
/// checking can tell when a finite-difference probe crossed a kink.
class KinkMonitor {
 public:
  KinkMonitor();
  ~KinkMonitor();
  KinkMonitor(const KinkMonitor&) = delete;
  KinkMonitor& operator=(const KinkMonitor&) = delete;

  std::uint64_t signature() const { return hash_; }
  void reset() { hash_ = kSeed; }

  static void note(std::span<const double> values, double lo, double hi);

 private:
  static constexpr std::uint64_t kSeed = 1469598103934665603ULL;
  std::uint64_t hash_ = kSeed;
  KinkMonitor* previous_;
};

// ---------------------------------------------------------------------------
// Elementwise arithmetic. Binary ops broadcast numpy-style: shapes are
// right-aligned and each dimension must match or be 1.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
Tensor square(const Tensor& x);
Tensor log(const Tensor& x);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
/// Exact (erf-based) GELU.
Tensor gelu(const Tensor& x);
/// Gradient passes where lo <= x <= hi and is zero outside.
Tensor clamp(const Tensor& x, double lo, double hi);

// Reductions, sequential in row-major order.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor mean_axis(const Tensor& x, std::size_t axis);

// ---------------------------------------------------------------------------
// Layout.

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis);
/// [C_a,H,W] ++ [C_b,H,W] -> [C_a+C_b,H,W]. An undefined `b` returns `a`.
Tensor concat_channels(const Tensor& a, const Tensor& b);
/// out.flat[i] = x.flat[source[i]]; the backward pass scatter-adds.
Tensor gather_flat(const Tensor& x, Shape out_shape,
                   std::shared_ptr<const std::vector<std::size_t>> source);
/// Rows of a [N,D] table selected by `rows` -> [rows.size(), D].
Tensor gather_rows(const Tensor& table, std::shared_ptr<const std::vector<std::size_t>> rows);

/// [H,W,C] -> [nW, window*window, C], windows and tokens in row-major order.
Tensor window_partition(const Tensor& x, std::size_t window);
/// Inverse of window_partition.
Tensor window_reverse(const Tensor& windows, std::size_t height, std::size_t width);
/// Toroidal roll: out[(y+dy) mod H][(x+dx) mod W] = in[y][x].
Tensor cyclic_shift(const Tensor& x, long dy, long dx);

// ---------------------------------------------------------------------------
// Network primitives.

/// Cross-correlation with zero padding. input [C_in,H,W], kernel
/// [C_out,C_in,k,k], bias [C_out] (may be undefined).
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              std::size_t stride, std::size_t padding);
/// x [...,D_in] * W[D_out,D_in]^T + b. `bias` may be undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
/// Batched matrix product over the last two dims; leading dims must agree.
/// With transpose_b, b is [...,N,K] and the product is a * b^T.
Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_b = false);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);
/// Softmax over the last dimension, stabilized by max subtraction.
Tensor softmax(const Tensor& x);

}  // namespace alen
