// Copyright 2026 The MIA Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MIA_ERRORS_H_
#define MIA_ERRORS_H_

#include <stdexcept>
#include <string>

namespace mia {

// Caller supplied malformed or inconsistent input (shape mismatch, bad sizes,
// single-class labels, ...). The CLI maps this to exit code 2.
class InvalidInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation produced NaN/Inf or another unusable intermediate.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, int layer = -1)
      : std::runtime_error(what), layer_(layer) {}
  int layer() const { return layer_; }

 private:
  int layer_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, size_t line, size_t column)
      : std::runtime_error(what), line_(line), column_(column) {}
  size_t line() const { return line_; }
  size_t column() const { return column_; }

 private:
  size_t line_;
  size_t column_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mia

#endif  // MIA_ERRORS_H_
