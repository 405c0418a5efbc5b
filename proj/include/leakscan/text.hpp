#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace leakscan {

// True iff s is well-formed UTF-8 (no overlongs, surrogates, or > U+10FFFF).
bool is_valid_utf8(std::string_view s);

// Unicode NFC, whitespace runs collapsed to single spaces, leading/trailing
// whitespace stripped. Case is preserved. Throws InvalidUtf8 on malformed
// input; lossy replacement is never performed.
std::string normalize(std::string_view raw_text);

// Splits normalized text on whitespace. Words keep their punctuation.
std::vector<std::string> tokenize_words(std::string_view text);

// Word count without materializing the token vector.
std::size_t count_words(std::string_view text);

}  // namespace leakscan
