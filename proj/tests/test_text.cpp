#include "doctest.h"
#include "leakscan/document.hpp"
#include "leakscan/errors.hpp"
#include "leakscan/rng.hpp"
#include "leakscan/text.hpp"
#include "testutil.hpp"

using namespace leakscan;

TEST_SUITE("text") {

TEST_CASE("normalize collapses whitespace runs") {
    CHECK(normalize("a\t b\n") == "a b");
    CHECK(normalize("") == "");
    CHECK(normalize("  lead and trail \r\n") == "lead and trail");
    CHECK(normalize("one  two\t\tthree") == "one two three");
}

TEST_CASE("normalize composes NFC") {
    // "Déjà  vu" (decomposed) must become "Déjà vu" with the
    // composed code points U+00E9 / U+00E0; expected bytes derived by hand
    // from the UTF-8 encoding of the composed forms.
    std::string decomposed = "De\xCC\x81j\x61\xCC\x80  vu";
    std::string expected = "D\xC3\xA9j\xC3\xA0 vu";
    CHECK(normalize(decomposed) == expected);
    // Already-composed input is the identity.
    CHECK(normalize(expected) == expected);
}

TEST_CASE("normalize rejects invalid utf-8") {
    CHECK_THROWS_AS(normalize("ok \xFF bad"), InvalidUtf8);
    CHECK_THROWS_AS(normalize("\xC0\xAF"), InvalidUtf8);        // overlong
    CHECK_THROWS_AS(normalize("\xED\xA0\x80"), InvalidUtf8);    // surrogate
    CHECK_THROWS_AS(normalize("\xF4\x90\x80\x80"), InvalidUtf8);  // > U+10FFFF
    CHECK_THROWS_AS(normalize("trunc \xE2\x82"), InvalidUtf8);
}

TEST_CASE("normalize is idempotent") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::string text = testutil::filler_text(rng, 1 + rng.below(40), 50);
        if (rng.below(2)) text = "  " + text + "\t\n";
        std::string once = normalize(text);
        CHECK(normalize(once) == once);
    }
}

TEST_CASE("tokenize_words splits on whitespace, punctuation attached") {
    auto tokens = tokenize_words("Hello, world!");
    REQUIRE(tokens.size() == 2);
    CHECK(tokens[0] == "Hello,");
    CHECK(tokens[1] == "world!");
    CHECK(tokenize_words("").empty());
}

TEST_CASE("300-word fixture tokenizes to 300") {
    Rng rng(7);
    std::string text = testutil::filler_text(rng, 300, 1000);
    // independent oracle: stream extraction word count
    REQUIRE(testutil::stream_word_count(text) == 300);
    CHECK(tokenize_words(text).size() == 300);
    CHECK(count_words(text) == 300);
}

TEST_CASE("document re-tokenization reproduces word_tokens") {
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        std::string raw = testutil::filler_text(rng, 1 + rng.below(60), 30) + "\n extra\t";
        Document doc = Document::make("d" + std::to_string(trial), Source::C4, raw);
        CHECK(doc.word_tokens == tokenize_words(normalize(doc.raw_text)));
        CHECK(normalize(doc.raw_text) == doc.raw_text);
    }
}

}  // TEST_SUITE
