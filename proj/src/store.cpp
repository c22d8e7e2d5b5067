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

#include "alen/store.hpp"

#include <cstring>

namespace alen {

void NamedTensorStore::add(std::string name, Tensor tensor) {
  if (!tensor.defined()) throw Error("parameter '" + name + "' is undefined");
  if (index_.count(name)) throw Error("duplicate parameter name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(tensor)});
}

bool NamedTensorStore::contains(const std::string& name) const { return index_.count(name) > 0; }

const Tensor& NamedTensorStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("missing parameter '" + name + "'");
  return entries_[it->second].tensor;
}

const Tensor& NamedTensorStore::require(const std::string& name, const Shape& shape) const {
  const Tensor& t = get(name);
  if (t.shape() != shape) {
    throw ShapeError("parameter '" + name + "' has shape " + shape_to_string(t.shape()) +
                     ", expected " + shape_to_string(shape));
  }
  return t;
}

std::vector<Tensor> NamedTensorStore::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.tensor);
  return out;
}

std::size_t NamedTensorStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

NamedTensorStore NamedTensorStore::clone() const {
  NamedTensorStore out;
  for (const auto& e : entries_) out.add(e.name, e.tensor.clone());
  return out;
}

bool NamedTensorStore::bit_equal(const NamedTensorStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.tensor.shape() != b.tensor.shape()) return false;
    if (std::memcmp(a.tensor.data().data(), b.tensor.data().data(),
                    a.tensor.numel() * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace alen
