// sercl/tensor.cc

// Copyright 2026  The sercl authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sercl/tensor.h"

#include <cmath>
#include <cstdint>
#include <sstream>

#include "sercl/error.h"

namespace sercl {

namespace {
std::int64_t product(const std::vector<int> &shape) {
  std::int64_t p = 1;
  for (int d : shape) p *= d;
  return p;
}
}  // namespace

Tensor Tensor::zeros(std::vector<int> shape) {
  Tensor t;
  for (int d : shape) {
    if (d <= 0) throw Error("Tensor::zeros: non-positive dimension");
  }
  std::int64_t n = product(shape);
  t.shape = std::move(shape);
  t.v.assign(static_cast<size_t>(n), 0.0);
  return t;
}

Tensor Tensor::full(std::vector<int> shape, double value) {
  Tensor t = zeros(std::move(shape));
  for (double &x : t.v) x = value;
  return t;
}

Tensor Tensor::scalar(double value) {
  Tensor t;
  t.shape = {1};
  t.v = {value};
  return t;
}

Tensor Tensor::vec(std::vector<double> values) {
  Tensor t;
  t.shape = {static_cast<int>(values.size())};
  t.v = std::move(values);
  return t;
}

Tensor Tensor::mat(int rows, int cols, std::vector<double> values) {
  if (static_cast<std::int64_t>(values.size()) !=
      static_cast<std::int64_t>(rows) * cols) {
    throw Error("Tensor::mat: value count does not match rows*cols");
  }
  Tensor t;
  t.shape = {rows, cols};
  t.v = std::move(values);
  return t;
}

bool Tensor::all_finite() const {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

void check_tensor(const Tensor &t, const std::string &what) {
  if (product(t.shape) != t.numel()) {
    throw Error(what + ": shape " + t.shape_str() +
                " does not match value count");
  }
  if (!t.all_finite()) {
    throw Error(what + ": non-finite values");
  }
}

}  // namespace sercl
