#include <algorithm>

#include "leakscan/harness.hpp"
#include "leakscan/rng.hpp"

namespace leakscan {

namespace {

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Luhn check digit for prefix+body (the final digit position).
char luhn_check_digit(std::string_view digits_without_check) {
    int sum = 0;
    bool dbl = true;  // position just left of the check digit doubles
    for (std::size_t i = digits_without_check.size(); i-- > 0;) {
        int d = digits_without_check[i] - '0';
        if (dbl) {
            d *= 2;
            if (d > 9) d -= 9;
        }
        sum += d;
        dbl = !dbl;
    }
    return static_cast<char>('0' + (10 - sum % 10) % 10);
}

// Randomizes a card number in place: scheme prefix kept, middle digits
// redrawn, last digit re-balanced so Luhn still holds.
void perturb_card(std::string& span, Rng& rng) {
    const std::size_t keep = std::min<std::size_t>(6, span.size() - 1);
    for (std::size_t i = keep; i + 1 < span.size(); ++i) {
        span[i] = static_cast<char>('0' + rng.digit());
    }
    span.back() = luhn_check_digit(std::string_view(span).substr(0, span.size() - 1));
}

// Randomizes IPv4 octets preserving their digit counts and validity.
void perturb_ip(std::string& span, Rng& rng) {
    std::size_t i = 0;
    while (i < span.size()) {
        if (!is_digit(span[i])) {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < span.size() && is_digit(span[i])) ++i;
        std::size_t len = i - start;
        std::uint64_t value;
        if (len == 1) {
            value = rng.range(0, 9);
        } else if (len == 2) {
            value = rng.range(10, 99);
        } else {
            value = rng.range(100, 255);
        }
        std::string digits = std::to_string(value);
        for (std::size_t k = 0; k < len; ++k) span[start + k] = digits[k];
    }
}

void perturb_digits(std::string& span, Rng& rng) {
    for (char& c : span) {
        if (is_digit(c)) c = static_cast<char>('0' + rng.digit());
    }
}

}  // namespace

std::string perturb_pii(const std::string& text, const PiiScanner& scanner,
                        const PerturbConfig& cfg) {
    std::vector<PiiMatch> matches = scanner.scan_text(text);
    if (matches.empty()) throw NoPiiFound("no PII matches in text");

    // Matches arrive sorted by (start, category); drop spans overlapping an
    // earlier kept one so each byte is rewritten at most once.
    std::vector<const PiiMatch*> kept;
    std::size_t covered_end = 0;
    for (const auto& m : matches) {
        if (m.start < covered_end) continue;
        kept.push_back(&m);
        covered_end = m.end;
    }

    Rng rng(cfg.seed);
    bool changed_anything = false;
    std::string out = text;
    for (std::size_t k = kept.size(); k-- > 0;) {
        const PiiMatch& m = *kept[k];
        if (m.category == PiiCategory::PersonName) {
            if (cfg.name_substitutions.empty()) {
                throw PreconditionError(
                    "PersonName span present but no substitution gazetteer configured");
            }
            const std::string& replacement =
                cfg.name_substitutions[rng.below(cfg.name_substitutions.size())];
            out.replace(m.start, m.end - m.start, replacement);
            changed_anything = true;
            continue;
        }
        std::string span = out.substr(m.start, m.end - m.start);
        bool has_digit = std::any_of(span.begin(), span.end(), [](char c) { return is_digit(c); });
        if (!has_digit) continue;
        if (is_card_category(m.category)) {
            perturb_card(span, rng);
        } else if (m.category == PiiCategory::IpAddress) {
            perturb_ip(span, rng);
        } else {
            perturb_digits(span, rng);
        }
        out.replace(m.start, m.end - m.start, span);
        changed_anything = true;
    }

    if (!changed_anything) {
        throw NoPiiFound("matches contain no digits and no names; nothing to perturb");
    }
    return out;
}

}  // namespace leakscan
