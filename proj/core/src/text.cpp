#include "embedkit/text.hpp"

#include <stdexcept>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "embedkit/utf8.hpp"

namespace embedkit {

namespace {

const icu::Normalizer2& nfc_instance() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* inst = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || inst == nullptr) {
        throw std::runtime_error("ICU NFC normalizer unavailable");
    }
    return *inst;
}

std::string nfc_utf8(std::string_view text) {
    if (text.empty()) return {};
    const icu::UnicodeString input =
        icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    UErrorCode status = U_ZERO_ERROR;
    const icu::UnicodeString normalized = nfc_instance().normalize(input, status);
    if (U_FAILURE(status)) {
        throw std::runtime_error("NFC normalization failed");
    }
    std::string out;
    normalized.toUTF8String(out);
    return out;
}

}  // namespace

std::string nfc(std::string_view text) {
    if (!utf8_valid(text)) {
        throw std::runtime_error("nfc: input is not valid UTF-8");
    }
    return nfc_utf8(text);
}

std::string normalize_text(std::string_view text) {
    // Lowercase first, then compose: canonical composition of lowercase
    // sequences yields lowercase precomposed characters, so a second pass
    // is the identity.
    std::vector<char32_t> cps = utf8_decode(text);
    for (char32_t& cp : cps) {
        cp = static_cast<char32_t>(u_tolower(static_cast<UChar32>(cp)));
    }
    const std::string composed = nfc_utf8(utf8_encode(cps));

    std::vector<char32_t> out;
    out.reserve(composed.size());
    bool pending_space = false;
    for (char32_t cp : utf8_decode(composed)) {
        if (u_isUWhiteSpace(static_cast<UChar32>(cp))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(U' ');
            pending_space = false;
        }
        out.push_back(cp);
    }
    return utf8_encode(out);
}

}  // namespace embedkit
