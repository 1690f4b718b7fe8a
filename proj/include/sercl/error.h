// sercl/error.h

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

#ifndef SERCL_ERROR_H_
#define SERCL_ERROR_H_

#include <stdexcept>
#include <string>

namespace sercl {

// Base for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// Bad or missing input data (files, manifests, labels, shapes of user data).
class DataError : public Error {
 public:
  explicit DataError(const std::string &msg) : Error(msg) {}
};

// Numerical failure during optimization (non-finite loss or gradient).
class NumericError : public Error {
 public:
  explicit NumericError(const std::string &msg) : Error(msg) {}
};

// Bad command line or config usage.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string &msg) : Error(msg) {}
};

}  // namespace sercl

#endif  // SERCL_ERROR_H_
