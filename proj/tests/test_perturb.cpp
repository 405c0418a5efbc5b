#include <regex>

#include "doctest.h"
#include "leakscan/harness.hpp"
#include "leakscan/match_index.hpp"
#include "leakscan/pii.hpp"
#include "leakscan/text.hpp"
#include "testutil.hpp"

using namespace leakscan;

namespace {

PiiScanner degraded_scanner() {
    PiiScanner::Options options;
    options.allow_degraded = true;
    return PiiScanner(options, nullptr);
}

}  // namespace

TEST_SUITE("perturb") {

TEST_CASE("phone perturbation keeps the shape and the category regex") {
    PiiScanner scanner = degraded_scanner();
    std::string text = "call +1-202-555-0100";
    PerturbConfig cfg;
    cfg.seed = 1;
    std::string out = perturb_pii(text, scanner, cfg);
    CHECK(out.size() == text.size());
    CHECK(out.substr(0, 5) == "call ");
    CHECK(out != text);

    auto matches = scanner.scan_text(out);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].category == PiiCategory::PhoneNumber);
    // shape: separators in place
    CHECK(out[5] == '+');
    CHECK(out[7] == '-');
    CHECK(out[11] == '-');
    CHECK(out[15] == '-');
}

TEST_CASE("card perturbation is re-Luhn-balanced and keeps its scheme") {
    PiiScanner scanner = degraded_scanner();
    std::string card = testutil::with_luhn_check("453957876362148");
    std::string text = "card " + card + " charged";
    PerturbConfig cfg;
    cfg.seed = 2;
    std::string out = perturb_pii(text, scanner, cfg);
    CHECK(out != text);
    auto matches = scanner.scan_text(out);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].category == PiiCategory::VisaCard);
    CHECK(testutil::luhn_reference(matches[0].matched_text));
    CHECK(matches[0].matched_text.substr(0, 6) == card.substr(0, 6));
}

TEST_CASE("ip perturbation keeps octet shape valid") {
    PiiScanner scanner = degraded_scanner();
    std::string text = "host 192.168.1.77 responded";
    PerturbConfig cfg;
    cfg.seed = 3;
    std::string out = perturb_pii(text, scanner, cfg);
    CHECK(out.size() == text.size());
    auto matches = scanner.scan_text(out);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].category == PiiCategory::IpAddress);
}

TEST_CASE("person names are replaced from the substitution gazetteer") {
    PiiScanner scanner(PiiScanner::Options{},
                       std::make_shared<GazetteerNameDetector>(
                           std::vector<std::string>{"Michel Grant"}));
    PerturbConfig cfg;
    cfg.seed = 4;
    cfg.name_substitutions = {"Robin Vale"};
    std::string out = perturb_pii("Michel Grant wrote the memo", scanner, cfg);
    CHECK(out == "Robin Vale wrote the memo");

    PerturbConfig no_names;
    no_names.seed = 4;
    CHECK_THROWS_AS(perturb_pii("Michel Grant wrote the memo", scanner, no_names),
                    PreconditionError);
}

TEST_CASE("no matches or nothing perturbable raises NoPiiFound") {
    PiiScanner scanner = degraded_scanner();
    PerturbConfig cfg;
    CHECK_THROWS_AS(perturb_pii("plain words only here", scanner, cfg), NoPiiFound);
    // a match with no digits: letters-only email
    CHECK_THROWS_AS(perturb_pii("mail me at plain@example.com now", scanner, cfg), NoPiiFound);
}

TEST_CASE("bytes outside PII spans are untouched") {
    PiiScanner scanner = degraded_scanner();
    std::string text = "prefix 123-45-6789 middle 10.0.0.1 suffix";
    PerturbConfig cfg;
    cfg.seed = 5;
    std::string out = perturb_pii(text, scanner, cfg);
    REQUIRE(out.size() == text.size());
    auto original_matches = scanner.scan_text(text);
    std::vector<bool> in_span(text.size(), false);
    for (const auto& m : original_matches) {
        for (std::size_t i = m.start; i < m.end; ++i) in_span[i] = true;
    }
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (!in_span[i]) CHECK(out[i] == text[i]);
    }
}

TEST_CASE("digit-perturbed text passes verify_non_member against the original") {
    // Original: >= 300 words with a digit-bearing token in every 300-word
    // window (one phone every 40 words). Window-level oracle confirms no
    // shared window survives perturbation.
    Rng rng(6);
    std::string original;
    for (int i = 0; i < 360; ++i) {
        if (i) original += " ";
        if (i % 40 == 0) {
            original += "+1-202-555-01" + std::to_string(10 + (i / 40));
        } else {
            original += testutil::vocab_word(rng.below(500));
        }
    }
    IndexConfig icfg;
    icfg.w = 300;
    icfg.store = StoreKind::Copyright;
    std::vector<RawRefRecord> records = {RawRefRecord::single("orig", original)};
    FingerprintIndex index = build_store(records, icfg);
    REQUIRE_FALSE(index.verify_non_member(original));

    PiiScanner scanner = degraded_scanner();
    PerturbConfig cfg;
    cfg.seed = 7;
    std::string perturbed = perturb_pii(original, scanner, cfg);
    CHECK(index.verify_non_member(perturbed));

    // oracle: every 300-word window of the perturbed text differs from every
    // window of the original
    auto a = tokenize_words(normalize(perturbed));
    auto b = tokenize_words(normalize(original));
    auto shared = testutil::brute_force_common_runs(a, b, 300);
    CHECK(shared.empty());
}

}  // TEST_SUITE
