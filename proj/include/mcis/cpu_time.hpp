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

#ifndef MCIS_CPU_TIME_HPP
#define MCIS_CPU_TIME_HPP

#include <chrono>
#include <cstdint>
#include <span>

namespace mcis {

/// CPU time consumed by the calling thread, in nanoseconds.
std::int64_t thread_cpu_ns();

/// Measures the thread CPU time of a region.
class CpuStopwatch {
 public:
  CpuStopwatch() : start_(thread_cpu_ns()) {}
  std::int64_t elapsed_ns() const { return thread_cpu_ns() - start_; }

 private:
  std::int64_t start_;
};

/// Per-step timestamps for tight loops.
///
/// Reading the thread CPU clock costs a system call (a few hundred ns), which would dominate a
/// cheap sampler step. Steps are stamped with the monotonic wall clock instead and the stamps are
/// rescaled in finish() so that the last one equals the thread CPU time spent in the loop.
class StepClock {
 public:
  StepClock();

  std::int64_t now() const {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now() - wall_start_)
        .count();
  }

  /// Converts raw wall stamps (from now()) into cumulative CPU nanoseconds, in place.
  /// The result is nondecreasing.
  void finish(std::span<std::int64_t> stamps) const;

 private:
  std::chrono::steady_clock::time_point wall_start_;
  std::int64_t cpu_start_;
};

}  // namespace mcis

#endif  // MCIS_CPU_TIME_HPP
