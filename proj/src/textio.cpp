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

#include "geossl/textio.hpp"

#include <array>
#include <charconv>
#include <stdexcept>
#include <system_error>

namespace geossl {

std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

namespace {

template <typename T>
T parse_full(std::string_view text, const char* what, const char* kind) {
    T value{};
    const auto res =
        std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw std::invalid_argument(std::string(what) + ": bad " + kind + " '"
                                    + std::string(text) + "'");
    }
    return value;
}

}  // namespace

double parse_double(std::string_view text, const char* what) {
    return parse_full<double>(text, what, "number");
}

std::size_t parse_size(std::string_view text, const char* what) {
    return parse_full<std::size_t>(text, what, "integer");
}

std::int64_t parse_int(std::string_view text, const char* what) {
    return parse_full<std::int64_t>(text, what, "integer");
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex16(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

}  // namespace geossl
