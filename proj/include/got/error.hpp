// Copyright 2026 The gotalign Authors
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

namespace got {

enum class ErrorKind {
  kParse,         // malformed input file
  kDimension,     // size mismatch between operands
  kNumerical,     // non-convergence, non-finite values, divergence
  kParameter,     // invalid configuration or argument
  kPrecondition,  // input violates a mathematical precondition (not PSD, disconnected)
  kGeneration,    // random graph generation gave up
  kPerturbation,  // perturbation could not keep the graph connected
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kDimension: return "dimension error";
    case ErrorKind::kNumerical: return "numerical error";
    case ErrorKind::kParameter: return "parameter error";
    case ErrorKind::kPrecondition: return "precondition error";
    case ErrorKind::kGeneration: return "generation error";
    case ErrorKind::kPerturbation: return "perturbation error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

// Process exit code contract of the command-line tool.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return 2;
    case ErrorKind::kDimension: return 3;
    case ErrorKind::kParameter: return 5;
    default: return 4;
  }
}

}  // namespace got
