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

#ifndef RAREMINE_HASHING_H_
#define RAREMINE_HASHING_H_

#include <filesystem>
#include <string>
#include <string_view>

namespace raremine {

// Lowercase hex SHA-256 digests.
std::string Sha256Hex(std::string_view bytes);
std::string Sha256File(const std::filesystem::path& path);

}  // namespace raremine

#endif  // RAREMINE_HASHING_H_
