#include <doctest.h>

#include "embedkit/hash.hpp"
#include "embedkit/rng.hpp"
#include "embedkit/text.hpp"
#include "embedkit/utf8.hpp"

#include "support.hpp"

using namespace embedkit;

TEST_CASE("utf8 validation") {
    CHECK(utf8_valid(""));
    CHECK(utf8_valid("plain ascii"));
    CHECK(utf8_valid("\xc3\xa9"));            // é
    CHECK(utf8_valid("\xe2\x82\xac"));        // €
    CHECK(utf8_valid("\xf0\x9f\x99\x82"));    // emoji
    CHECK_FALSE(utf8_valid("\x80"));          // stray continuation
    CHECK_FALSE(utf8_valid("\xc3"));          // truncated
    CHECK_FALSE(utf8_valid("\xc0\xaf"));      // overlong '/'
    CHECK_FALSE(utf8_valid("\xed\xa0\x80"));  // surrogate
    CHECK_FALSE(utf8_valid("\xf4\x90\x80\x80"));  // > U+10FFFF
    CHECK_THROWS(utf8_decode("\xff"));
}

TEST_CASE("utf8 round trip") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const std::string text = testsupport::random_unicode(rng, 40);
        CHECK(utf8_encode(utf8_decode(text)) == text);
    }
}

TEST_CASE("fnv1a64 known vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("nfc composes canonical sequences") {
    // Expected strings computed with an independent Unicode implementation.
    CHECK(nfc("e\xcc\x81") == "\xc3\xa9");                      // e + acute
    CHECK(nfc("A\xcc\x8a") == "\xc3\x85");                      // A + ring
    CHECK(nfc("\xe1\xb8\x8b\xcc\xa3") == "\xe1\xb8\x8d\xcc\x87");
    CHECK(nfc("q\xcc\x87\xcc\xa3") == "q\xcc\xa3\xcc\x87");     // mark reordering
    CHECK(nfc("A\xcc\x81\xcc\xa7") == "\xc3\x81\xcc\xa7");
    CHECK(nfc("\xea\xb0\x80") == "\xea\xb0\x80");               // Hangul stays
    CHECK(nfc("\xe1\x84\x80\xe1\x85\xa1\xe1\x86\xa8") == "\xea\xb0\x81");  // jamo compose
    CHECK(nfc("\xe2\x84\xab") == "\xc3\x85");                   // angstrom sign
    CHECK(nfc("\xe2\x84\xa6") == "\xce\xa9");                   // ohm sign
    CHECK(nfc("s\xcc\xa3\xcc\x87") == "\xe1\xb9\xa9");
    CHECK(nfc("ba\xcc\x88" "c") == "b\xc3\xa4" "c");
    CHECK(nfc("") == "");
    CHECK_THROWS(nfc("\xc3"));
}

TEST_CASE("normalize_text examples") {
    CHECK(normalize_text("  Hello\t WORLD ") == "hello world");
    CHECK(normalize_text("") == "");
    CHECK(normalize_text("   \t\n ") == "");
    CHECK(normalize_text("A  b") == "a b");
    CHECK(normalize_text("Stra\xc3\x9f""e") == "stra\xc3\x9f""e");
    // Composed and decomposed umlaut normalize to the same bytes.
    CHECK(normalize_text("U\xcc\x88""ber") == normalize_text("\xc3\x9c""ber"));
}

TEST_CASE("normalize_text is idempotent on random unicode") {
    Rng rng(23);
    for (int i = 0; i < 500; ++i) {
        const std::string text = testsupport::random_unicode(rng, 32);
        const std::string once = normalize_text(text);
        CHECK(normalize_text(once) == once);
    }
}
