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

#ifndef RAREMINE_LOG_H_
#define RAREMINE_LOG_H_

#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace raremine::log {

using Sink = std::function<void(std::string_view)>;

// Emits a warning through the current sink (stderr by default).
void Warn(std::string_view message);

// Installs `sink` process-wide and returns the previous one. An empty sink
// restores the stderr default.
Sink SetWarningSink(Sink sink);

// Collects warnings for the lifetime of the object; used by tests and by the
// pipeline to copy warnings into manifests.
class ScopedWarningCapture {
 public:
  ScopedWarningCapture();
  ~ScopedWarningCapture();
  ScopedWarningCapture(const ScopedWarningCapture&) = delete;
  ScopedWarningCapture& operator=(const ScopedWarningCapture&) = delete;

  std::vector<std::string> messages() const;
  bool Contains(std::string_view fragment) const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> messages_;
  Sink previous_;
};

}  // namespace raremine::log

#endif  // RAREMINE_LOG_H_
