// Copyright 2026 The embed-audit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace embed_audit {

// Thrown when a file (CSV, checkpoint) cannot be decoded. `line` is 1-based;
// 0 means the error is not tied to a specific line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line)
      : std::runtime_error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

// Thrown when an iterative procedure produced a non-finite value. `step` is
// the iteration index at which the failure was detected.
class NumericFailure : public std::runtime_error {
 public:
  NumericFailure(const std::string& msg, long step)
      : std::runtime_error(msg + " (step " + std::to_string(step) + ")"), step_(step) {}

  long step() const { return step_; }

 private:
  long step_;
};

inline void check_arg(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace embed_audit
