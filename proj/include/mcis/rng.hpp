// Copyright 2026 The MCIS Authors
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

#ifndef MCIS_RNG_HPP
#define MCIS_RNG_HPP

#include <cstdint>
#include <random>

namespace mcis {

/// Deterministic random stream.
///
/// Backed by std::mt19937_64, whose output sequence is fixed by the C++ standard. Uniform and
/// normal variates are produced here rather than through <random> distributions (whose algorithms
/// are implementation-defined), so that a (seed, stream) pair yields the same draws on every
/// platform. Each uniform() consumes one engine word; each normal() consumes exactly two.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  /// Uniform on the open interval (0, 1).
  double uniform();

  /// Standard normal via Box-Muller (cosine branch only).
  double normal();

  std::uint64_t next_u64() { return engine_(); }

  friend bool operator==(const RngStream& a, const RngStream& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to decorrelate (seed, stream) pairs.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace mcis

#endif  // MCIS_RNG_HPP
