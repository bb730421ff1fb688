/*
 * Copyright 2026 The uadet Authors.
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

#pragma once

#include <string>
#include <vector>

namespace uadet {

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

// Writes <out_dir>/manifest.json listing each artifact (paths relative to
// out_dir, in the given order) with its size and SHA-256.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::vector<std::string>& artifacts);

}  // namespace uadet
