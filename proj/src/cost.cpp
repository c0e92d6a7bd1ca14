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

#include "aten/cost.hpp"

namespace aten {

namespace {
thread_local CostCounter* tls_counter = nullptr;
thread_local CostClass tls_class = CostClass::kOther;
}  // namespace

std::string_view cost_class_name(CostClass c) {
  switch (c) {
    case CostClass::kFeature: return "feat";
    case CostClass::kFlow: return "flow";
    case CostClass::kWarp: return "warp";
    case CostClass::kGru: return "gru";
    case CostClass::kParse: return "parse";
    case CostClass::kOther: return "other";
  }
  return "other";
}

std::uint64_t CostCounter::total_macs() const {
  std::uint64_t t = 0;
  for (const auto& m : macs_) t += m.load(std::memory_order_relaxed);
  return t;
}

void CostCounter::reset() {
  for (auto& m : macs_) m.store(0);
  for (auto& c : calls_) c.store(0);
}

CounterScope::CounterScope(CostCounter* counter) : previous_(tls_counter) {
  tls_counter = counter;
}

CounterScope::~CounterScope() { tls_counter = previous_; }

CostScope::CostScope(CostClass c) : previous_(tls_class) {
  tls_class = c;
  if (tls_counter) tls_counter->add_call(c);
}

CostScope::~CostScope() { tls_class = previous_; }

void record_macs(std::uint64_t macs) {
  if (tls_counter) tls_counter->add_macs(tls_class, macs);
}

CostCounter* active_counter() { return tls_counter; }

}  // namespace aten
