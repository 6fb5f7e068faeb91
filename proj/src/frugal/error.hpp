// Copyright 2026 The Frugal Cascade Authors. All rights reserved.
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

#pragma once

#include <stdexcept>
#include <string>

namespace frugal {

// Broad failure classes. The numeric values double as CLI exit codes and are
// mirrored by frugal_status in the C API.
enum class ErrorKind : int {
    kInvalidArgument = 1,
    kUsage = 2,
    kData = 3,
    kProvider = 4,
    kIo = 5,
    kInternal = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error data_error(const std::string& what) { return Error(ErrorKind::kData, what); }
inline Error invalid_argument(const std::string& what) { return Error(ErrorKind::kInvalidArgument, what); }
inline Error provider_error(const std::string& what) { return Error(ErrorKind::kProvider, what); }
inline Error io_error(const std::string& what) { return Error(ErrorKind::kIo, what); }

}  // namespace frugal
