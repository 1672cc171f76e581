/*
 * Copyright 2026 The gpscore Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace gpscore {

/// Broad failure classes. The CLI maps each one onto its own exit code.
enum class ErrorCategory {
  config,       // bad user input or invalid combination of options
  domain,       // parameter outside the model's domain
  geometry,     // grid / occlusion problems
  shape,        // dimension mismatch
  design,       // probe design problems
  numeric,      // loss of definiteness, non-finite values, failed factorization
  convergence,  // iterative method did not reach its tolerance
  io
};

const char* to_string(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] void fail(ErrorCategory category, const std::string& what);

inline void require(bool condition, ErrorCategory category, const std::string& what) {
  if (!condition) fail(category, what);
}

}  // namespace gpscore
