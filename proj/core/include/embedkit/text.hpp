#pragma once

#include <string>
#include <string_view>

namespace embedkit {

// Unicode NFC. Input must be valid UTF-8.
std::string nfc(std::string_view text);

// Canonical text form used for de-duplication and hashing keys:
// simple (1:1) lowercase, Unicode NFC, whitespace runs collapsed to a
// single ASCII space, leading/trailing whitespace stripped. Idempotent.
std::string normalize_text(std::string_view text);

}  // namespace embedkit
