// sercl/tensor.h

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

#ifndef SERCL_TENSOR_H_
#define SERCL_TENSOR_H_

#include <cstdint>
#include <string>
#include <vector>

namespace sercl {

// Dense row-major tensor of 64-bit floats. Small, value-semantic; every
// numeric object in the toolkit (spectrograms, weights, gradients) is one
// of these.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;
  bool requires_grad = false;

  Tensor() = default;

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double value);
  static Tensor scalar(double value);
  static Tensor vec(std::vector<double> values);
  static Tensor mat(int rows, int cols, std::vector<double> values);

  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(v.size()); }
  bool empty() const { return v.empty(); }

  double &at(int i) { return v[static_cast<size_t>(i)]; }
  double at(int i) const { return v[static_cast<size_t>(i)]; }

  // rank-2 access, row-major
  double &at(int i, int j) { return v[static_cast<size_t>(i) * shape[1] + j]; }
  double at(int i, int j) const {
    return v[static_cast<size_t>(i) * shape[1] + j];
  }

  // rank-3 access (c, h, w)
  double &at(int c, int h, int w) {
    return v[(static_cast<size_t>(c) * shape[1] + h) * shape[2] + w];
  }
  double at(int c, int h, int w) const {
    return v[(static_cast<size_t>(c) * shape[1] + h) * shape[2] + w];
  }

  // rank-4 access (a, b, c, d)
  double &at(int a, int b, int c, int d) {
    return v[((static_cast<size_t>(a) * shape[1] + b) * shape[2] + c) *
                 shape[3] +
             d];
  }
  double at(int a, int b, int c, int d) const {
    return v[((static_cast<size_t>(a) * shape[1] + b) * shape[2] + c) *
                 shape[3] +
             d];
  }

  bool same_shape(const Tensor &other) const { return shape == other.shape; }
  bool all_finite() const;
  std::string shape_str() const;
};

// Verifies product(shape) matches the value count and that the values are
// finite; throws Error otherwise.
void check_tensor(const Tensor &t, const std::string &what);

}  // namespace sercl

#endif  // SERCL_TENSOR_H_
