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

#include <stdexcept>
#include <string>

namespace uadet {

// Precondition violated by a caller (bad shape, out-of-range value, ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or unknown configuration field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class NumericalAbort : public Error {
 public:
  NumericalAbort(const std::string& what, long step, double param_norm)
      : Error(what), step_(step), param_norm_(param_norm) {}
  long step() const { return step_; }
  double param_norm() const { return param_norm_; }

 private:
  long step_;
  double param_norm_;
};

}  // namespace uadet
