// Copyright 2026 The carleson-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace carleson_lab {

enum class ErrorKind {
  argument,
  depth,
  resolution,
  domain,
  degenerate_weight,
  infinite_mass,
  memory_guard,
  parse,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::argument: return "argument";
    case ErrorKind::depth: return "depth";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::domain: return "domain";
    case ErrorKind::degenerate_weight: return "degenerate-weight";
    case ErrorKind::infinite_mass: return "infinite-mass";
    case ErrorKind::memory_guard: return "memory-guard";
    case ErrorKind::parse: return "parse";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the kinds above so
/// callers (the pipeline, the CLI) can report it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace carleson_lab
