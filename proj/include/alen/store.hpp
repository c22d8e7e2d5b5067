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

#include <string>
#include <unordered_map>
#include <vector>

#include "alen/tensor.hpp"

namespace alen {

/// Ordered name -> tensor map; the unit in which network weights are built,
/// validated, trained and serialized.
class NamedTensorStore {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
  };

  /// Throws alen::Error on a duplicate name.
  void add(std::string name, Tensor tensor);
  bool contains(const std::string& name) const;
  /// Throws alen::Error naming the missing parameter.
  const Tensor& get(const std::string& name) const;
  /// As get(), and additionally checks the shape.
  const Tensor& require(const std::string& name, const Shape& shape) const;

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Tensor> tensors() const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t total_elements() const;

  /// Deep copy (fresh storage, no gradients).
  NamedTensorStore clone() const;
  /// Same names, order, shapes and bit patterns.
  bool bit_equal(const NamedTensorStore& other) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace alen
