// Copyright 2026 The polyagg Authors.
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

#include <stdexcept>
#include <string>

namespace polyagg {

/// Base class for all library errors. The category maps onto CLI exit codes.
class Error : public std::runtime_error {
public:
  enum class Kind { Usage = 1, Data = 2, Numerical = 3 };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

/// Bad arguments or preconditions violated by the caller.
class UsageError : public Error {
public:
  explicit UsageError(const std::string& what) : Error(Kind::Usage, what) {}
};

/// Malformed input data: parse failures, invariant violations, shape mismatches.
class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(Kind::Data, what) {}
};

/// Non-finite values, degenerate denominators, diverging training.
class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& what) : Error(Kind::Numerical, what) {}
};

}  // namespace polyagg
