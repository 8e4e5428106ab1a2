/* Copyright 2026 The dtstereo Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef DTSTEREO_ERRORS_HPP_
#define DTSTEREO_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace dts {

// Inputs that violate a documented precondition (shapes, ranges, invariants).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed or unreadable files and data that cannot be processed.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dts

#endif  // DTSTEREO_ERRORS_HPP_
