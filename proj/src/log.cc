/*
 * Copyright 2026 The raremine Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "raremine/log.h"

#include <iostream>
#include <utility>

namespace raremine::log {
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

void Warn(std::string_view message) {
  Sink sink;
  {
    std::lock_guard lock(SinkMutex());
    sink = CurrentSink();
  }
  if (sink) {
    sink(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

Sink SetWarningSink(Sink sink) {
  std::lock_guard lock(SinkMutex());
  return std::exchange(CurrentSink(), std::move(sink));
}

ScopedWarningCapture::ScopedWarningCapture() {
  previous_ = SetWarningSink([this](std::string_view message) {
    std::lock_guard lock(mu_);
    messages_.emplace_back(message);
  });
}

ScopedWarningCapture::~ScopedWarningCapture() {
  SetWarningSink(std::move(previous_));
}

std::vector<std::string> ScopedWarningCapture::messages() const {
  std::lock_guard lock(mu_);
  return messages_;
}

bool ScopedWarningCapture::Contains(std::string_view fragment) const {
  std::lock_guard lock(mu_);
  for (const auto& m : messages_) {
    if (m.find(fragment) != std::string::npos) return true;
  }
  return false;
}

}  // namespace raremine::log
