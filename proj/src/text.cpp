#include "leakscan/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <cstdint>

#include "leakscan/errors.hpp"

namespace leakscan {

namespace {

inline bool is_space_byte(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

const icu::Normalizer2& nfc() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* inst = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || inst == nullptr) {
        throw Error("ICU NFC normalizer unavailable");
    }
    return *inst;
}

}  // namespace

bool is_valid_utf8(std::string_view s) {
    std::size_t i = 0;
    const std::size_t n = s.size();
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (c < 0x80) {
            ++i;
            continue;
        }
        int len;
        std::uint32_t cp;
        if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > n) return false;
        for (int k = 1; k < len; ++k) {
            unsigned char cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (len == 2 && cp < 0x80) return false;
        if (len == 3 && cp < 0x800) return false;
        if (len == 4 && cp < 0x10000) return false;
        if (cp > 0x10FFFF) return false;
        if (cp >= 0xD800 && cp <= 0xDFFF) return false;
        i += len;
    }
    return true;
}

std::string normalize(std::string_view raw_text) {
    if (!is_valid_utf8(raw_text)) {
        throw InvalidUtf8("normalize: input is not valid UTF-8");
    }

    // ASCII text is NFC-invariant; skip the ICU round trip for it.
    bool ascii = true;
    for (unsigned char c : raw_text) {
        if (c >= 0x80) {
            ascii = false;
            break;
        }
    }

    std::string composed;
    if (ascii) {
        composed.assign(raw_text);
    } else {
        icu::UnicodeString src = icu::UnicodeString::fromUTF8(
            icu::StringPiece(raw_text.data(), static_cast<int32_t>(raw_text.size())));
        UErrorCode status = U_ZERO_ERROR;
        icu::UnicodeString dst = nfc().normalize(src, status);
        if (U_FAILURE(status)) {
            throw Error("ICU normalization failed");
        }
        dst.toUTF8String(composed);
    }

    std::string out;
    out.reserve(composed.size());
    bool pending_space = false;
    for (unsigned char c : composed) {
        if (is_space_byte(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(c));
        }
    }
    return out;
}

std::vector<std::string> tokenize_words(std::string_view text) {
    std::vector<std::string> words;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && is_space_byte(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < n && !is_space_byte(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) words.emplace_back(text.substr(start, i - start));
    }
    return words;
}

std::size_t count_words(std::string_view text) {
    std::size_t count = 0;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && is_space_byte(static_cast<unsigned char>(text[i]))) ++i;
        if (i < n) {
            ++count;
            while (i < n && !is_space_byte(static_cast<unsigned char>(text[i]))) ++i;
        }
    }
    return count;
}

}  // namespace leakscan
