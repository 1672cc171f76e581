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

#include <cstdint>
#include <random>

namespace gpscore {

/// Independent generator for (seed, stream); streams never overlap in use,
/// so adding streams leaves existing ones untouched.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream,
                                   std::uint64_t purpose = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

/// Uniform +-1 from one raw draw of the engine.
inline double rademacher(std::mt19937_64& rng) { return (rng() >> 63) ? 1.0 : -1.0; }

}  // namespace gpscore
