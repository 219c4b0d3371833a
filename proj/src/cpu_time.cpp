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

#include "mcis/cpu_time.hpp"

#include <time.h>

#include <algorithm>

namespace mcis {

std::int64_t thread_cpu_ns() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<std::int64_t>(ts.tv_sec) * 1'000'000'000 + ts.tv_nsec;
}

StepClock::StepClock() : wall_start_(std::chrono::steady_clock::now()), cpu_start_(thread_cpu_ns()) {}

void StepClock::finish(std::span<std::int64_t> stamps) const {
  const std::int64_t cpu_total = thread_cpu_ns() - cpu_start_;
  const std::int64_t wall_total = std::max<std::int64_t>(now(), 1);
  const double ratio = static_cast<double>(cpu_total) / static_cast<double>(wall_total);
  std::int64_t last = 0;
  for (auto& s : stamps) {
    s = std::max(last, static_cast<std::int64_t>(static_cast<double>(s) * ratio));
    last = s;
  }
}

}  // namespace mcis
