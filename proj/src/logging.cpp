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

#include "smoothi/logging.hpp"

#include <iostream>
#include <mutex>

namespace smoothi::log {
namespace {

std::mutex& SinkMutex() {
  static std::mutex mu;
  return mu;
}

Sink& CurrentSink() {
  static Sink sink;
  return sink;
}

}  // namespace

void Warning(const std::string& message) {
  std::lock_guard<std::mutex> lock(SinkMutex());
  const Sink& sink = CurrentSink();
  if (sink) {
    sink(message);
  } else {
    std::cerr << "[smoothi] warning: " << message << '\n';
  }
}

Sink SetWarningSink(Sink sink) {
  std::lock_guard<std::mutex> lock(SinkMutex());
  Sink previous = std::move(CurrentSink());
  CurrentSink() = std::move(sink);
  return previous;
}

}  // namespace smoothi::log
