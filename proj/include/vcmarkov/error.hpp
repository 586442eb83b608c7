// Copyright 2026 The vcmarkov Authors.
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
#include <stdexcept>
#include <string>

namespace vcmarkov {

/// Base of every error thrown by the library. The CLI maps DataError to
/// exit code 3 and DomainError to exit code 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or insufficient input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Structural problem in a corpus file; carries the byte offset of the
/// offending line.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : DataError(what + " (at byte " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

/// A numeric quantity fell outside the domain of a formula (zero
/// denominators, poles, rank deficiency).
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace vcmarkov
