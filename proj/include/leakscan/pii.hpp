#pragma once

#include <cstddef>
#include <memory>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "leakscan/document.hpp"
#include "leakscan/name_detector.hpp"

namespace leakscan {

// The 20 regex-detectable categories plus person names.
enum class PiiCategory {
    IpAddress,
    IbanCode,
    UsSsn,
    EmailAddress,
    PhoneNumber,
    AmexCard,
    BcGlobal,
    CarteBlancheCard,
    DinersClubCard,
    DiscoverCard,
    InstaPaymentCard,
    JcbCard,
    KoreanLocalCard,
    LaserCard,
    MaestroCard,
    Mastercard,
    SoloCard,
    SwitchCard,
    UnionPayCard,
    VisaCard,
    PersonName,
};

inline constexpr int kPiiCategoryCount = 21;

std::string pii_category_label(PiiCategory c);
PiiCategory pii_category_from_label(const std::string& label);

// Card-scheme categories additionally require Luhn validity.
bool is_card_category(PiiCategory c);

bool luhn_valid(std::string_view digits);

struct PiiMatch {
    PiiCategory category;
    std::size_t start = 0;  // byte offsets into normalized text
    std::size_t end = 0;
    std::string matched_text;
};

// Scans normalized text for all 21 categories. Matching is token-run based:
// each category's published regex is applied to candidate character runs
// (digit runs for card schemes, [0-9-] runs for SSNs, and so on), which keeps
// throughput high and gives word-boundary semantics. Matches per category are
// non-overlapping leftmost-longest; output order is (start, category).
// Stateless after construction and safe for concurrent use across documents.
class PiiScanner {
public:
    struct Options {
        std::set<PiiCategory> active;  // empty means all categories
        // When the PersonName category is active but no detector is
        // configured: true disables the category, false is fatal.
        bool allow_degraded = false;
    };

    PiiScanner();
    explicit PiiScanner(Options options, std::shared_ptr<NameDetector> names = nullptr);

    std::vector<PiiMatch> scan(const Document& doc) const;
    std::vector<PiiMatch> scan_text(const std::string& text) const;

    // The authoritative pattern for a regex category. Every reported match's
    // matched_text fully re-matches this pattern in isolation.
    static const std::regex& category_regex(PiiCategory c);
    static const std::string& category_pattern(PiiCategory c);

private:
    bool active(PiiCategory c) const;

    Options options_;
    std::shared_ptr<NameDetector> names_;
};

// PersonName matches from a backend, as PiiMatch records.
std::vector<PiiMatch> detect_names(const std::string& text, NameDetector& backend);

// The one-piece rule: a document leaks personal information iff the scan
// found anything at all.
inline bool is_pi_leak(const std::vector<PiiMatch>& matches) { return !matches.empty(); }

}  // namespace leakscan
