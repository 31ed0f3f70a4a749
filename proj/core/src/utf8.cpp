#include "embedkit/utf8.hpp"

#include <stdexcept>

namespace embedkit {

namespace {

// Returns the decoded code point and advances i, or returns -1 on malformed
// input. Rejects overlong encodings, surrogates and values above U+10FFFF.
std::int64_t decode_one(std::string_view s, std::size_t& i) {
    const auto byte = [&](std::size_t k) -> unsigned {
        return static_cast<unsigned char>(s[k]);
    };
    const unsigned b0 = byte(i);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len;
    char32_t cp;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return -1;
    }
    if (i + len > s.size()) return -1;
    for (int k = 1; k < len; ++k) {
        const unsigned bk = byte(i + k);
        if ((bk & 0xC0) != 0x80) return -1;
        cp = (cp << 6) | (bk & 0x3F);
    }
    static constexpr char32_t min_for_len[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < min_for_len[len]) return -1;                 // overlong
    if (cp >= 0xD800 && cp <= 0xDFFF) return -1;          // surrogate
    if (cp > 0x10FFFF) return -1;
    i += len;
    return cp;
}

}  // namespace

bool utf8_valid(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
        if (decode_one(text, i) < 0) return false;
    }
    return true;
}

std::vector<char32_t> utf8_decode(std::string_view text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const std::int64_t cp = decode_one(text, i);
        if (cp < 0) {
            throw std::runtime_error("invalid UTF-8 at byte offset " +
                                     std::to_string(i));
        }
        out.push_back(static_cast<char32_t>(cp));
    }
    return out;
}

void utf8_append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string utf8_encode(const std::vector<char32_t>& code_points) {
    std::string out;
    out.reserve(code_points.size());
    for (char32_t cp : code_points) utf8_append(out, cp);
    return out;
}

}  // namespace embedkit
