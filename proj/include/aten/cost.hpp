// Copyright 2026 The ATEN Authors. All Rights Reserved.
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

#include <array>
#include <atomic>
#include <cstdint>
#include <string_view>

namespace aten {

// Function classes of the runtime-cost model.
enum class CostClass : int {
  kFeature = 0,  // backbone
  kFlow,         // flow estimation (incl. scale head)
  kWarp,         // bilinear warping and scale multiply
  kGru,          // temporal encoder
  kParse,        // parsing head
  kOther,
};
inline constexpr int kNumCostClasses = 6;

std::string_view cost_class_name(CostClass c);

// Thread-safe multiply-accumulate counter. Kernels report into the counter
// that is active on the calling thread, attributed to the active class.
class CostCounter {
 public:
  void add_macs(CostClass c, std::uint64_t macs) {
    macs_[static_cast<int>(c)].fetch_add(macs, std::memory_order_relaxed);
  }
  void add_call(CostClass c) {
    calls_[static_cast<int>(c)].fetch_add(1, std::memory_order_relaxed);
  }
  std::uint64_t macs(CostClass c) const {
    return macs_[static_cast<int>(c)].load(std::memory_order_relaxed);
  }
  std::uint64_t calls(CostClass c) const {
    return calls_[static_cast<int>(c)].load(std::memory_order_relaxed);
  }
  std::uint64_t total_macs() const;
  void reset();

 private:
  std::array<std::atomic<std::uint64_t>, kNumCostClasses> macs_{};
  std::array<std::atomic<std::uint64_t>, kNumCostClasses> calls_{};
};

// Installs a counter on the current thread for the lifetime of the guard.
class CounterScope {
 public:
  explicit CounterScope(CostCounter* counter);
  ~CounterScope();
  CounterScope(const CounterScope&) = delete;
  CounterScope& operator=(const CounterScope&) = delete;

 private:
  CostCounter* previous_;
};

// Attributes kernel work on the current thread to one cost class and
// counts one invocation of that class.
class CostScope {
 public:
  explicit CostScope(CostClass c);
  ~CostScope();
  CostScope(const CostScope&) = delete;
  CostScope& operator=(const CostScope&) = delete;

 private:
  CostClass previous_;
};

// Called by kernels.
void record_macs(std::uint64_t macs);

// Counter installed on the current thread, or nullptr.
CostCounter* active_counter();

}  // namespace aten
