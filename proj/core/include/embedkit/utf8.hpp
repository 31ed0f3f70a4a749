#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace embedkit {

bool utf8_valid(std::string_view text);

// Decodes to code points. Throws std::runtime_error on malformed input
// (overlong forms, surrogates, out-of-range, truncated sequences).
std::vector<char32_t> utf8_decode(std::string_view text);

std::string utf8_encode(const std::vector<char32_t>& code_points);
void utf8_append(std::string& out, char32_t cp);

}  // namespace embedkit
