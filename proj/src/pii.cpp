#include "leakscan/pii.hpp"

#include <algorithm>
#include <array>

#include "leakscan/errors.hpp"

namespace leakscan {

namespace {

struct CategoryDef {
    PiiCategory category;
    const char* label;
    const char* pattern;
};

// Published patterns from the personal-information detection literature for
// the paper's 20 categories. Card patterns describe the full digit string of
// each scheme; they are applied to maximal digit runs.
const std::array<CategoryDef, 20> kRegexCategories = {{
    {PiiCategory::IpAddress, "ip_address",
     R"(((25[0-5]|2[0-4][0-9]|[01]?[0-9][0-9]?)\.){3}(25[0-5]|2[0-4][0-9]|[01]?[0-9][0-9]?))"},
    {PiiCategory::IbanCode, "iban_code", R"([A-Z]{2}[0-9]{2}[A-Z0-9]{11,30})"},
    {PiiCategory::UsSsn, "us_ssn", R"([0-9]{3}-[0-9]{2}-[0-9]{4})"},
    {PiiCategory::EmailAddress, "email_address",
     R"([A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,})"},
    {PiiCategory::PhoneNumber, "phone_number",
     R"(\+[0-9]{1,3}([-. ]?[0-9]{2,4}){2,4}|\([0-9]{2,4}\)[-. ]?[0-9]{3,4}[-. ][0-9]{3,4}|[0-9]{3}[-.][0-9]{3}[-.][0-9]{4})"},
    {PiiCategory::AmexCard, "amex_card", R"(3[47][0-9]{13})"},
    {PiiCategory::BcGlobal, "bcglobal", R"((6541|6556)[0-9]{12})"},
    {PiiCategory::CarteBlancheCard, "carte_blanche_card", R"(389[0-9]{11})"},
    {PiiCategory::DinersClubCard, "diners_club_card", R"(3(0[0-5]|[68][0-9])[0-9]{11})"},
    {PiiCategory::DiscoverCard, "discover_card", R"(6(011|5[0-9]{2})[0-9]{12})"},
    {PiiCategory::InstaPaymentCard, "insta_payment_card", R"(63[7-9][0-9]{13})"},
    {PiiCategory::JcbCard, "jcb_card", R"((2131|1800|35[0-9]{3})[0-9]{11})"},
    {PiiCategory::KoreanLocalCard, "korean_local_card", R"(9[0-9]{15})"},
    {PiiCategory::LaserCard, "laser_card", R"((6304|6706|6709|6771)[0-9]{12,15})"},
    {PiiCategory::MaestroCard, "maestro_card",
     R"((5018|5020|5038|6304|6759|6761|6763)[0-9]{8,15})"},
    {PiiCategory::Mastercard, "mastercard", R"(5[1-5][0-9]{14})"},
    {PiiCategory::SoloCard, "solo_card", R"((6334|6767)[0-9]{12}([0-9]{2,3})?)"},
    {PiiCategory::SwitchCard, "switch_card",
     R"((4903|4905|4911|4936|6333|6759)[0-9]{12}([0-9]{2,3})?|(564182|633110)[0-9]{10}([0-9]{2,3})?)"},
    {PiiCategory::UnionPayCard, "union_pay_card", R"(62[0-9]{14,17})"},
    {PiiCategory::VisaCard, "visa_card", R"(4[0-9]{12}([0-9]{3})?)"},
}};

const CategoryDef* find_def(PiiCategory c) {
    for (const auto& def : kRegexCategories) {
        if (def.category == c) return &def;
    }
    return nullptr;
}

const std::array<std::regex, 20>& compiled_regexes() {
    static const std::array<std::regex, 20> regexes = [] {
        std::array<std::regex, 20> out;
        for (std::size_t i = 0; i < kRegexCategories.size(); ++i) {
            out[i] = std::regex(kRegexCategories[i].pattern, std::regex::ECMAScript);
        }
        return out;
    }();
    return regexes;
}

std::size_t regex_index(PiiCategory c) {
    for (std::size_t i = 0; i < kRegexCategories.size(); ++i) {
        if (kRegexCategories[i].category == c) return i;
    }
    throw Error("no regex for category " + pii_category_label(c));
}

inline bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
inline bool is_alnum(unsigned char c) {
    return is_digit(c) || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
}
inline bool is_ssn_char(unsigned char c) { return is_digit(c) || c == '-'; }
inline bool is_ip_char(unsigned char c) { return is_digit(c) || c == '.'; }
inline bool is_phone_char(unsigned char c) {
    return is_digit(c) || c == '(' || c == ')' || c == '+' || c == '-' || c == '.' || c == ' ';
}
inline bool is_email_char(unsigned char c) {
    return is_alnum(c) || c == '.' || c == '_' || c == '%' || c == '+' || c == '-' || c == '@';
}

// Calls fn(start, end) for every maximal run of chars satisfying pred.
template <typename Pred, typename Fn>
void for_each_run(const std::string& text, Pred pred, Fn fn) {
    const std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        if (!pred(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < n && pred(static_cast<unsigned char>(text[i]))) ++i;
        fn(start, i);
    }
}

}  // namespace

std::string pii_category_label(PiiCategory c) {
    if (c == PiiCategory::PersonName) return "person_name";
    const CategoryDef* def = find_def(c);
    return def ? def->label : "unknown";
}

PiiCategory pii_category_from_label(const std::string& label) {
    if (label == "person_name") return PiiCategory::PersonName;
    for (const auto& def : kRegexCategories) {
        if (label == def.label) return def.category;
    }
    throw ConfigError("unknown PII category: " + label);
}

bool is_card_category(PiiCategory c) {
    switch (c) {
        case PiiCategory::AmexCard:
        case PiiCategory::BcGlobal:
        case PiiCategory::CarteBlancheCard:
        case PiiCategory::DinersClubCard:
        case PiiCategory::DiscoverCard:
        case PiiCategory::InstaPaymentCard:
        case PiiCategory::JcbCard:
        case PiiCategory::KoreanLocalCard:
        case PiiCategory::LaserCard:
        case PiiCategory::MaestroCard:
        case PiiCategory::Mastercard:
        case PiiCategory::SoloCard:
        case PiiCategory::SwitchCard:
        case PiiCategory::UnionPayCard:
        case PiiCategory::VisaCard:
            return true;
        default:
            return false;
    }
}

bool luhn_valid(std::string_view digits) {
    if (digits.empty()) return false;
    int sum = 0;
    bool dbl = false;
    for (std::size_t i = digits.size(); i-- > 0;) {
        char c = digits[i];
        if (!is_digit(static_cast<unsigned char>(c))) return false;
        int d = c - '0';
        if (dbl) {
            d *= 2;
            if (d > 9) d -= 9;
        }
        sum += d;
        dbl = !dbl;
    }
    return sum % 10 == 0;
}

const std::regex& PiiScanner::category_regex(PiiCategory c) {
    return compiled_regexes()[regex_index(c)];
}

const std::string& PiiScanner::category_pattern(PiiCategory c) {
    static const std::array<std::string, 20> patterns = [] {
        std::array<std::string, 20> out;
        for (std::size_t i = 0; i < kRegexCategories.size(); ++i) out[i] = kRegexCategories[i].pattern;
        return out;
    }();
    return patterns[regex_index(c)];
}

PiiScanner::PiiScanner() : PiiScanner(Options{}, nullptr) {}

PiiScanner::PiiScanner(Options options, std::shared_ptr<NameDetector> names)
    : options_(std::move(options)), names_(std::move(names)) {
    compiled_regexes();  // compile eagerly
    if (active(PiiCategory::PersonName) && !names_ && !options_.allow_degraded) {
        throw NameDetectorUnavailable(
            "PersonName category active but no name detector configured");
    }
}

bool PiiScanner::active(PiiCategory c) const {
    return options_.active.empty() || options_.active.count(c) > 0;
}

std::vector<PiiMatch> PiiScanner::scan(const Document& doc) const { return scan_text(doc.raw_text); }

std::vector<PiiMatch> PiiScanner::scan_text(const std::string& text) const {
    std::vector<PiiMatch> matches;
    const char* base = text.data();

    auto add = [&](PiiCategory c, std::size_t start, std::size_t end) {
        matches.push_back({c, start, end, text.substr(start, end - start)});
    };

    // Searches within [start, end) with a digit-adjacency guard on both sides.
    auto search_in_run = [&](PiiCategory c, std::size_t start, std::size_t end) {
        const std::regex& re = category_regex(c);
        std::cregex_iterator it(base + start, base + end, re), last;
        for (; it != last; ++it) {
            std::size_t m_start = start + static_cast<std::size_t>(it->position(0));
            std::size_t m_end = m_start + static_cast<std::size_t>(it->length(0));
            if (m_start > start && is_digit(static_cast<unsigned char>(text[m_start - 1]))) continue;
            if (m_end < end && is_digit(static_cast<unsigned char>(text[m_end]))) continue;
            add(c, m_start, m_end);
        }
    };

    // Card schemes: maximal digit runs, full-run match plus Luhn.
    bool any_card = false;
    for (const auto& def : kRegexCategories) {
        if (is_card_category(def.category) && active(def.category)) any_card = true;
    }
    if (any_card) {
        for_each_run(text, is_digit, [&](std::size_t start, std::size_t end) {
            std::size_t len = end - start;
            if (len < 12 || len > 19) return;
            std::string_view run(base + start, len);
            if (!luhn_valid(run)) return;
            for (const auto& def : kRegexCategories) {
                if (!is_card_category(def.category) || !active(def.category)) continue;
                if (std::regex_match(base + start, base + end, category_regex(def.category))) {
                    add(def.category, start, end);
                }
            }
        });
    }

    if (active(PiiCategory::UsSsn)) {
        for_each_run(text, is_ssn_char, [&](std::size_t start, std::size_t end) {
            if (end - start != 11) return;
            if (std::regex_match(base + start, base + end, category_regex(PiiCategory::UsSsn))) {
                add(PiiCategory::UsSsn, start, end);
            }
        });
    }

    if (active(PiiCategory::IpAddress)) {
        for_each_run(text, is_ip_char, [&](std::size_t start, std::size_t end) {
            if (end - start < 7) return;
            bool has_dot = false;
            for (std::size_t i = start; i < end; ++i) {
                if (text[i] == '.') {
                    has_dot = true;
                    break;
                }
            }
            if (has_dot) search_in_run(PiiCategory::IpAddress, start, end);
        });
    }

    if (active(PiiCategory::PhoneNumber)) {
        for_each_run(text, is_phone_char, [&](std::size_t start, std::size_t end) {
            std::size_t digits = 0, others = 0;
            for (std::size_t i = start; i < end; ++i) {
                if (is_digit(static_cast<unsigned char>(text[i]))) {
                    ++digits;
                } else {
                    ++others;
                }
            }
            // Bare digit runs are never phones here; the patterns require
            // country-code or separator structure.
            if (digits >= 7 && others > 0) search_in_run(PiiCategory::PhoneNumber, start, end);
        });
    }

    if (active(PiiCategory::IbanCode)) {
        for_each_run(text, is_alnum, [&](std::size_t start, std::size_t end) {
            std::size_t len = end - start;
            if (len < 15 || len > 34) return;
            unsigned char c0 = text[start], c1 = text[start + 1];
            if (c0 < 'A' || c0 > 'Z' || c1 < 'A' || c1 > 'Z') return;
            if (!is_digit(static_cast<unsigned char>(text[start + 2])) ||
                !is_digit(static_cast<unsigned char>(text[start + 3]))) {
                return;
            }
            if (std::regex_match(base + start, base + end, category_regex(PiiCategory::IbanCode))) {
                add(PiiCategory::IbanCode, start, end);
            }
        });
    }

    if (active(PiiCategory::EmailAddress)) {
        std::size_t i = 0;
        const std::size_t n = text.size();
        while (i < n) {
            if (text[i] != '@') {
                ++i;
                continue;
            }
            std::size_t w_start = i;
            while (w_start > 0 && is_email_char(static_cast<unsigned char>(text[w_start - 1]))) {
                --w_start;
            }
            std::size_t w_end = i + 1;
            while (w_end < n && is_email_char(static_cast<unsigned char>(text[w_end]))) ++w_end;
            search_in_run(PiiCategory::EmailAddress, w_start, w_end);
            i = w_end;
        }
    }

    if (active(PiiCategory::PersonName) && names_) {
        for (const NameSpan& span : names_->detect(text)) {
            if (span.end <= span.start || span.end > text.size()) continue;
            add(PiiCategory::PersonName, span.start, span.end);
        }
    }

    std::sort(matches.begin(), matches.end(), [](const PiiMatch& a, const PiiMatch& b) {
        if (a.start != b.start) return a.start < b.start;
        return static_cast<int>(a.category) < static_cast<int>(b.category);
    });
    return matches;
}

std::vector<PiiMatch> detect_names(const std::string& text, NameDetector& backend) {
    std::vector<PiiMatch> matches;
    for (const NameSpan& span : backend.detect(text)) {
        if (span.end <= span.start || span.end > text.size()) continue;
        matches.push_back({PiiCategory::PersonName, span.start, span.end,
                           text.substr(span.start, span.end - span.start)});
    }
    return matches;
}

}  // namespace leakscan
