// Copyright 2026 The SmoothI Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <string>

namespace smoothi::log {

using Sink = std::function<void(const std::string&)>;

/// Emits a warning through the installed sink (stderr by default).
void Warning(const std::string& message);

/// Replaces the warning sink and returns the previous one. Passing an empty
/// function restores the stderr sink.
Sink SetWarningSink(Sink sink);

/// Installs a sink for the lifetime of the guard.
class ScopedWarningSink {
 public:
  explicit ScopedWarningSink(Sink sink) : previous_(SetWarningSink(std::move(sink))) {}
  ~ScopedWarningSink() { SetWarningSink(std::move(previous_)); }
  ScopedWarningSink(const ScopedWarningSink&) = delete;
  ScopedWarningSink& operator=(const ScopedWarningSink&) = delete;

 private:
  Sink previous_;
};

}  // namespace smoothi::log
