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

#include "gpscore/error.hpp"

namespace gpscore {

const char* to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::config: return "config";
    case ErrorCategory::domain: return "domain";
    case ErrorCategory::geometry: return "geometry";
    case ErrorCategory::shape: return "shape";
    case ErrorCategory::design: return "design";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::convergence: return "convergence";
    case ErrorCategory::io: return "io";
  }
  return "unknown";
}

void fail(ErrorCategory category, const std::string& what) {
  throw Error(category, what);
}

}  // namespace gpscore
