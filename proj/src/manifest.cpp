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

#include "uadet/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "uadet/error.hpp"

namespace uadet {

std::string sha256_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest init failed");
  }
  std::array<char, 1 << 16> buf;
  while (is) {
    is.read(buf.data(), buf.size());
    const auto got = is.gcount();
    if (got > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got)) != 1) {
      throw Error("sha256: digest update failed");
    }
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) throw Error("sha256: digest final failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::vector<std::string>& artifacts) {
  namespace fs = std::filesystem;
  nlohmann::json j;
  j["command"] = command;
  auto& list = j["artifacts"] = nlohmann::json::array();
  for (const auto& rel : artifacts) {
    const fs::path p = fs::path(out_dir) / rel;
    list.push_back({{"path", rel}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p.string())}});
  }
  std::ofstream os(fs::path(out_dir) / "manifest.json", std::ios::trunc);
  if (!os) throw Error("cannot write manifest in " + out_dir);
  os << j.dump(2) << '\n';
}

}  // namespace uadet
