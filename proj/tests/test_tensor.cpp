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

#include <gtest/gtest.h>

#include <cmath>

#include "alen/error.hpp"
#include "alen/tensor.hpp"
#include "test_util.hpp"

namespace alen {
namespace {

using test::max_abs_diff;
using test::random_tensor;
using test::values;

TEST(Tensor, FactoriesAndShape) {
  Tensor t = Tensor::zeros({2, 3});
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.dim(-1), 3u);
  EXPECT_EQ(shape_to_string(t.shape()), "[2,3]");
  EXPECT_THROW(Tensor::from({2, 2}, {1.0, 2.0}), ShapeError);
  EXPECT_DOUBLE_EQ(Tensor::scalar(4.5).item(), 4.5);
}

TEST(Tensor, CopiesShareStorageCloneDoesNot) {
  Tensor a = Tensor::full({3}, 1.0);
  Tensor b = a;
  Tensor c = a.clone();
  a.mutable_data()[0] = 7.0;
  EXPECT_EQ(b.at(0), 7.0);
  EXPECT_EQ(c.at(0), 1.0);
}

TEST(Tensor, BroadcastAdd) {
  Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::from({3}, {10, 20, 30});
  EXPECT_EQ(values(add(a, b)), (std::vector<double>{11, 22, 33, 14, 25, 36}));
  Tensor col = Tensor::from({2, 1}, {100, 200});
  EXPECT_EQ(values(add(a, col)), (std::vector<double>{101, 102, 103, 204, 205, 206}));
  EXPECT_THROW(add(a, Tensor::zeros({2})), ShapeError);
}

TEST(Tensor, MatmulMatchesTripleLoop) {
  Rng rng(1);
  Tensor a = random_tensor({2, 3, 4}, rng);
  Tensor b = random_tensor({2, 4, 5}, rng);
  Tensor c = matmul(a, b);
  ASSERT_EQ(c.shape(), (Shape{2, 3, 5}));
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 5; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 4; ++k) acc += a.at((n * 3 + i) * 4 + k) * b.at((n * 4 + k) * 5 + j);
        EXPECT_NEAR(c.at((n * 3 + i) * 5 + j), acc, 1e-14);
      }
  Tensor bt = permute(b, {0, 2, 1});
  EXPECT_LT(max_abs_diff(values(matmul(a, bt, true)), values(c)), 1e-14);
}

TEST(Tensor, Conv2dMatchesDirectLoop) {
  Rng rng(2);
  const std::size_t cin = 2, cout = 3, h = 5, w = 6, k = 3;
  for (std::size_t stride : {1u, 2u}) {
    Tensor x = random_tensor({cin, h, w}, rng);
    Tensor kern = random_tensor({cout, cin, k, k}, rng);
    Tensor bias = random_tensor({cout}, rng);
    Tensor y = conv2d(x, kern, bias, stride, 1);
    const std::size_t oh = (h + 2 - k) / stride + 1, ow = (w + 2 - k) / stride + 1;
    ASSERT_EQ(y.shape(), (Shape{cout, oh, ow}));
    for (std::size_t o = 0; o < cout; ++o)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          double acc = bias.at(o);
          for (std::size_t c = 0; c < cin; ++c)
            for (std::size_t u = 0; u < k; ++u)
              for (std::size_t v = 0; v < k; ++v) {
                const long yy = static_cast<long>(i * stride + u) - 1;
                const long xx = static_cast<long>(j * stride + v) - 1;
                if (yy < 0 || xx < 0 || yy >= long(h) || xx >= long(w)) continue;
                acc += kern.at(((o * cin + c) * k + u) * k + v) * x.at((c * h + yy) * w + xx);
              }
          EXPECT_NEAR(y.at((o * oh + i) * ow + j), acc, 1e-13);
        }
  }
}

TEST(Tensor, LinearAndLayerNorm) {
  Rng rng(3);
  Tensor x = random_tensor({4, 5}, rng);
  Tensor w = random_tensor({3, 5}, rng);
  Tensor b = random_tensor({3}, rng);
  Tensor y = linear(x, w, b);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t o = 0; o < 3; ++o) {
      double acc = b.at(o);
      for (std::size_t i = 0; i < 5; ++i) acc += x.at(r * 5 + i) * w.at(o * 5 + i);
      EXPECT_NEAR(y.at(r * 3 + o), acc, 1e-14);
    }

  Tensor g = random_tensor({5}, rng);
  Tensor be = random_tensor({5}, rng);
  Tensor ln = layer_norm(x, g, be, 1e-5);
  for (std::size_t r = 0; r < 4; ++r) {
    double mu = 0.0, var = 0.0;
    for (std::size_t i = 0; i < 5; ++i) mu += x.at(r * 5 + i) / 5.0;
    for (std::size_t i = 0; i < 5; ++i) var += std::pow(x.at(r * 5 + i) - mu, 2) / 5.0;
    for (std::size_t i = 0; i < 5; ++i) {
      const double want = (x.at(r * 5 + i) - mu) / std::sqrt(var + 1e-5) * g.at(i) + be.at(i);
      EXPECT_NEAR(ln.at(r * 5 + i), want, 1e-13);
    }
  }
}

TEST(Tensor, SoftmaxRowsAndShiftInvariance) {
  Rng rng(4);
  Tensor x = random_tensor({3, 6}, rng, -5, 5);
  Tensor s = softmax(x);
  Tensor s2 = softmax(add_scalar(x, 1000.0));
  for (std::size_t r = 0; r < 3; ++r) {
    double total = 0.0;
    for (std::size_t i = 0; i < 6; ++i) total += s.at(r * 6 + i);
    EXPECT_NEAR(total, 1.0, 1e-15);
  }
  EXPECT_LT(max_abs_diff(values(s), values(s2)), 1e-12);
}

TEST(Tensor, ActivationsPointwise) {
  Tensor x = Tensor::from({5}, {-2.0, -0.5, 0.0, 0.5, 2.0});
  const auto g = values(gelu(x));
  const auto s = values(sigmoid(x));
  const auto r = values(relu(x));
  const auto c = values(clamp(x, -1.0, 1.0));
  for (std::size_t i = 0; i < 5; ++i) {
    const double v = x.at(i);
    EXPECT_NEAR(g[i], 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))), 1e-15);
    EXPECT_NEAR(s[i], 1.0 / (1.0 + std::exp(-v)), 1e-15);
    EXPECT_EQ(r[i], std::max(0.0, v));
    EXPECT_EQ(c[i], std::min(1.0, std::max(-1.0, v)));
  }
}

TEST(Tensor, ReductionsAndMeanAxis) {
  Tensor x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(sum(x).item(), 21.0);
  EXPECT_EQ(mean(x).item(), 3.5);
  EXPECT_EQ(values(mean_axis(x, 0)), (std::vector<double>{2.5, 3.5, 4.5}));
  EXPECT_EQ(values(mean_axis(x, 1)), (std::vector<double>{2.0, 5.0}));
}

TEST(Tensor, LayoutOps) {
  Tensor x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(values(permute(x, {1, 0})), (std::vector<double>{1, 4, 2, 5, 3, 6}));
  EXPECT_EQ(values(slice(x, 1, 1, 3)), (std::vector<double>{2, 3, 5, 6}));
  EXPECT_EQ(values(concat(x, x, 0)).size(), 12u);
  EXPECT_EQ(values(concat(x, slice(x, 1, 0, 1), 1)),
            (std::vector<double>{1, 2, 3, 1, 4, 5, 6, 4}));
  EXPECT_EQ(reshape(x, {3, 2}).shape(), (Shape{3, 2}));
  EXPECT_THROW(reshape(x, {4, 2}), ShapeError);
  auto rows = std::make_shared<const std::vector<std::size_t>>(std::vector<std::size_t>{1, 1, 0});
  EXPECT_EQ(values(gather_rows(x, rows)), (std::vector<double>{4, 5, 6, 4, 5, 6, 1, 2, 3}));
}

TEST(Tensor, WindowPartitionRoundTripAndShift) {
  Rng rng(5);
  Tensor x = random_tensor({4, 6, 3}, rng);
  Tensor w = window_partition(x, 2);
  EXPECT_EQ(w.shape(), (Shape{6, 4, 3}));
  // First window holds tokens (0,0),(0,1),(1,0),(1,1).
  EXPECT_EQ(w.at(3 * 3 + 2), x.at((1 * 6 + 1) * 3 + 2));
  EXPECT_EQ(values(window_reverse(w, 4, 6)), values(x));

  Tensor s = cyclic_shift(x, -1, -2);
  EXPECT_EQ(s.at((3 * 6 + 4) * 3 + 1), x.at((0 * 6 + 0) * 3 + 1));
  EXPECT_EQ(values(cyclic_shift(s, 1, 2)), values(x));
}

TEST(Tensor, BackwardAccumulatesAcrossUses) {
  Tensor x = Tensor::from({3}, {1.0, -2.0, 3.0}).set_requires_grad(true);
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = sum(add(square(x), x));
  }
  backward(loss, tape);
  EXPECT_EQ(x.gradient(), (std::vector<double>{3.0, -3.0, 7.0}));
}

TEST(Tensor, NoTapeRecordsNothing) {
  Tensor x = Tensor::from({2}, {1.0, 2.0}).set_requires_grad(true);
  Tensor y = square(x);
  EXPECT_FALSE(y.requires_grad());
  EXPECT_FALSE(x.has_grad());
}

TEST(Tensor, TapeCannotReplayTwice) {
  Tensor x = Tensor::from({1}, {2.0}).set_requires_grad(true);
  Tape tape;
  Tensor y;
  {
    TapeScope scope(tape);
    y = sum(square(x));
  }
  backward(y, tape);
  EXPECT_TRUE(tape.consumed());
  EXPECT_THROW(backward(y, tape), Error);
}

}  // namespace
}  // namespace alen
