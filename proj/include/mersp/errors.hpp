// Copyright 2026 The Authors.
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

namespace mersp {

/// Base class of every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error { using Error::Error; };
struct NumericalFailure : Error { using Error::Error; };
struct NotPositiveDefinite : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct DegenerateInstance : Error { using Error::Error; };
struct IllPosed : Error { using Error::Error; };
struct Infeasible : Error { using Error::Error; };
struct TooLarge : Error { using Error::Error; };
struct GenerationFailed : Error { using Error::Error; };

/// Error while reading a matrix or config file; carries the 1-based line.
struct ParseError : Error {
  ParseError(const std::string& msg, int line_number)
      : Error(msg + " (line " + std::to_string(line_number) + ")"),
        line(line_number) {}
  int line;
};

}  // namespace mersp
