// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace geossl {

// Shortest decimal string that round-trips the exact double value.
std::string format_double(double v);

// Strict numeric parsers: the whole token must be consumed. `what` names
// the field in the error message.
double parse_double(std::string_view text, const char* what);
std::size_t parse_size(std::string_view text, const char* what);
std::int64_t parse_int(std::string_view text, const char* what);

// FNV-1a over the raw bytes; stable across platforms for ASCII input.
std::uint64_t fnv1a64(std::string_view bytes);

// Fixed-width lowercase hex, 16 digits.
std::string hex16(std::uint64_t value);

}  // namespace geossl
