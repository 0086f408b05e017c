/*
 * Copyright 2026 The ShapNet Authors.
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

#ifndef SHAPNET_ERROR_H_
#define SHAPNET_ERROR_H_

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace shapnet {

// All recoverable failures in the library surface as this exception type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace internal {

template <typename... Args>
std::string StrCat(Args&&... args) {
  std::ostringstream out;
  (out << ... << std::forward<Args>(args));
  return out.str();
}

}  // namespace internal

template <typename... Args>
[[noreturn]] void Fail(Args&&... args) {
  throw Error(internal::StrCat(std::forward<Args>(args)...));
}

template <typename... Args>
void Require(bool condition, Args&&... args) {
  if (!condition) Fail(std::forward<Args>(args)...);
}

}  // namespace shapnet

#endif  // SHAPNET_ERROR_H_
