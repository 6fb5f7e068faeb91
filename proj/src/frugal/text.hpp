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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace frugal {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
/// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string_view> split_lines(std::string_view s);

/// Case-folds ASCII, collapses whitespace runs to one space, and strips
/// leading/trailing whitespace and trailing punctuation.
std::string normalize_text(std::string_view s);
std::vector<std::string> whitespace_tokens(std::string_view s);

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string to_hex64(std::uint64_t v);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

std::string read_file(const std::string& path);
/// Writes via a temporary sibling and rename.
void write_file(const std::string& path, std::string_view contents);

}  // namespace frugal
