// Copyright 2026 The cfbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CFBENCH_ERROR_H_
#define CFBENCH_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace cfbench {

enum class ErrorKind {
  kInvalidInput,
  kGatewayUnavailable,
  // The backend cannot provide what a method needs (e.g. no gradients).
  kCapability,
  kConfiguration,
  kUpstreamUnavailable,
  kIngestion,
  kIo,
  kMalformedOutput,
};

std::string_view ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error InvalidInput(const std::string& msg) {
  return Error(ErrorKind::kInvalidInput, msg);
}
inline Error CapabilityError(const std::string& msg) {
  return Error(ErrorKind::kCapability, msg);
}
inline Error ConfigurationError(const std::string& msg) {
  return Error(ErrorKind::kConfiguration, msg);
}
inline Error IoError(const std::string& msg) {
  return Error(ErrorKind::kIo, msg);
}

}  // namespace cfbench

#endif  // CFBENCH_ERROR_H_
