#include <algorithm>
#include <chrono>
#include <set>

#include "doctest.h"
#include "leakscan/match_index.hpp"
#include "leakscan/text.hpp"
#include "testutil.hpp"

using namespace leakscan;

namespace {

Document make_doc(const std::string& id, const std::string& text) {
    return Document::make(id, Source::C4, text);
}

FingerprintIndex index_of(const std::vector<std::pair<std::string, std::string>>& entries,
                          std::uint32_t w, StoreKind store = StoreKind::Benchmark) {
    IndexConfig cfg;
    cfg.w = w;
    cfg.store = store;
    std::vector<RawRefRecord> records;
    for (const auto& [id, text] : entries) records.push_back(RawRefRecord::single(id, text));
    return build_store(records, cfg);
}

// Agreement with the brute-force oracle on every (doc, entry) pair.
void check_against_oracle(const FingerprintIndex& index,
                          const std::vector<std::pair<std::string, std::string>>& entries,
                          const std::vector<Document>& docs, std::uint32_t w) {
    for (const auto& doc : docs) {
        auto reported = index.find_leaks(doc);
        std::size_t expected_total = 0;
        for (const auto& [ref_id, text] : entries) {
            auto ref_tokens = tokenize_words(normalize(text));
            if (ref_tokens.size() < w) continue;
            auto oracle = testutil::brute_force_common_runs(doc.word_tokens, ref_tokens, w);
            expected_total += oracle.size();
            for (const auto& run : oracle) {
                bool found = false;
                for (const auto& mw : reported) {
                    if (mw.ref_id == ref_id && mw.doc_begin == run.a_begin &&
                        mw.ref_begin == run.b_begin && mw.width == run.length) {
                        found = true;
                        break;
                    }
                }
                CAPTURE(doc.doc_id);
                CAPTURE(ref_id);
                CAPTURE(run.a_begin);
                CHECK(found);
            }
        }
        CHECK(reported.size() == expected_total);
    }
}

}  // namespace

TEST_SUITE("match_index") {

TEST_CASE("multi-field instance: long field indexed, short field dropped") {
    Rng rng(1);
    IndexConfig cfg;
    cfg.w = 300;
    FingerprintIndex index(cfg);
    RawRefRecord record;
    record.id = "qa1";
    record.fields.push_back({"context", testutil::filler_text(rng, 350, 500)});
    record.fields.push_back({"question", testutil::filler_text(rng, 12, 500)});
    index.add_record(record);
    index.freeze();
    CHECK(index.entry_count() == 1);
    CHECK(index.dropped_count() == 1);
    CHECK(index.entries()[0].ref_id == "qa1#context");
}

TEST_CASE("window counts: exactly W words -> 1, W+2 -> 3") {
    Rng rng(2);
    std::string exact = testutil::filler_text(rng, 300, 400);
    auto one = index_of({{"e", exact}}, 300);
    CHECK(one.window_count() == 1);

    std::string longer = testutil::filler_text(rng, 302, 400);
    auto three = index_of({{"e", longer}}, 300);
    CHECK(three.window_count() == 3);
}

TEST_CASE("build_store with nothing surviving throws EmptyStore") {
    IndexConfig cfg;
    cfg.w = 300;
    std::vector<RawRefRecord> records = {RawRefRecord::single("short", "too few words")};
    CHECK_THROWS_AS(build_store(records, cfg), EmptyStore);
}

TEST_CASE("queries require a frozen index, additions require an unfrozen one") {
    IndexConfig cfg;
    cfg.w = 3;
    FingerprintIndex index(cfg);
    index.add_entry({"e", StoreKind::Benchmark, {"one", "two", "three"}});
    CHECK_THROWS_AS(index.find_leaks(make_doc("d", "one two three")), PreconditionError);
    index.freeze();
    CHECK(index.find_leaks(make_doc("d", "one two three")).size() == 1);
    CHECK_THROWS_AS(index.add_entry({"f", StoreKind::Benchmark, {"a", "b", "c"}}),
                    PreconditionError);
    CHECK_THROWS_AS(FingerprintIndex(IndexConfig{0, 64, StoreKind::Benchmark}),
                    PreconditionError);
}

TEST_CASE("verbatim 300-word entry embedded in a doc -> one window of width 300") {
    Rng rng(3);
    std::string entry = testutil::filler_text(rng, 300, 5000);
    auto index = index_of({{"bench", entry}}, 300);

    Rng rng2(4);
    std::string doc_text = testutil::filler_text(rng2, 120, 50) + " " + entry + " " +
                           testutil::filler_text(rng2, 80, 50);
    Document doc = make_doc("d1", doc_text);
    auto leaks = index.find_leaks(doc);
    REQUIRE(leaks.size() == 1);
    CHECK(leaks[0].width == 300);
    CHECK(leaks[0].doc_begin == 120);
    CHECK(leaks[0].doc_end == 420);
    CHECK(leaks[0].ref_id == "bench");
    CHECK(leaks[0].ref_begin == 0);
    CHECK(leaks[0].ref_end == 300);
}

TEST_CASE("299 shared words are below the W rule") {
    Rng rng(5);
    std::string entry = testutil::filler_text(rng, 300, 5000);
    auto index = index_of({{"bench", entry}}, 300);

    auto entry_tokens = tokenize_words(entry);
    std::string shared299;
    for (std::size_t i = 0; i < 299; ++i) {
        if (i) shared299 += " ";
        shared299 += entry_tokens[i];
    }
    Rng rng2(6);
    Document doc = make_doc("d1", testutil::filler_text(rng2, 40, 50) + " " + shared299 + " " +
                                       testutil::filler_text(rng2, 40, 50));
    CHECK(index.find_leaks(doc).empty());
    // Bare 299-word documents are below W entirely.
    CHECK(index.find_leaks(make_doc("d2", shared299)).empty());
}

TEST_CASE("50 docs with 7 planted copies: exactly those 7 flagged, oracle agrees") {
    const std::uint32_t w = 30;  // small W keeps the brute-force oracle fast
    Rng rng(7);
    std::vector<std::pair<std::string, std::string>> entries;
    for (int e = 0; e < 5; ++e) {
        entries.push_back({"ref" + std::to_string(e), testutil::filler_text(rng, 60, 4000)});
    }
    auto index = index_of(entries, w);

    std::vector<Document> docs;
    std::set<std::string> planted_ids;
    for (int i = 0; i < 50; ++i) {
        std::string id = "doc" + std::to_string(i);
        std::string text = testutil::filler_text(rng, 80, 50);
        if (i % 7 == 0 && planted_ids.size() < 7) {
            const auto& source = entries[i % entries.size()].second;
            text += " " + source;
            planted_ids.insert(id);
        }
        docs.push_back(make_doc(id, text));
    }
    REQUIRE(planted_ids.size() == 7);

    std::set<std::string> flagged;
    for (const auto& doc : docs) {
        if (!index.find_leaks(doc).empty()) flagged.insert(doc.doc_id);
    }
    CHECK(flagged == planted_ids);
    check_against_oracle(index, entries, docs, w);
}

TEST_CASE("partial overlap is reported as the maximal shared run") {
    const std::uint32_t w = 10;
    Rng rng(8);
    std::string entry = testutil::filler_text(rng, 40, 4000);
    auto index = index_of({{"ref", entry}}, w);

    auto tokens = tokenize_words(entry);
    std::string middle;  // words 5..29 of the entry: a 25-word shared run
    for (std::size_t i = 5; i < 30; ++i) {
        if (i > 5) middle += " ";
        middle += tokens[i];
    }
    Document doc = make_doc("d", testutil::filler_text(rng, 15, 50) + " " + middle + " " +
                                     testutil::filler_text(rng, 15, 50));
    auto leaks = index.find_leaks(doc);
    REQUIRE(leaks.size() == 1);
    CHECK(leaks[0].width == 25);
    CHECK(leaks[0].doc_begin == 15);
    CHECK(leaks[0].ref_begin == 5);
}

TEST_CASE("leakage_rate is the distinct-doc ratio") {
    std::vector<LeakRecord> verdicts;
    for (int i = 0; i < 500; ++i) {
        verdicts.push_back(LeakRecord::pi(
            "doc" + std::to_string(i),
            {{PiiCategory::EmailAddress, 0, 5, "a@b.c"}}));
    }
    Rational rate = leakage_rate(verdicts, 10'000, LeakKind::PI);
    CHECK(rate == Rational(500, 10'000));
    CHECK(rate == Rational(1, 20));
    CHECK(rate.value() == doctest::Approx(0.05));

    CHECK(leakage_rate({}, 10'000, LeakKind::CT) == Rational(0, 1));
    CHECK_THROWS_AS(leakage_rate(verdicts, 0, LeakKind::PI), DivisionByZero);

    // duplicate doc ids count once
    verdicts.push_back(LeakRecord::pi("doc0", {{PiiCategory::EmailAddress, 0, 5, "a@b.c"}}));
    CHECK(leakage_rate(verdicts, 10'000, LeakKind::PI) == Rational(1, 20));
}

TEST_CASE("verify_non_member") {
    const std::uint32_t w = 20;
    Rng rng(9);
    std::string source = testutil::filler_text(rng, 50, 3000);
    auto index = index_of({{"src", source}}, w, StoreKind::Copyright);

    CHECK_FALSE(index.verify_non_member(source));

    // A "paraphrase" rewriting every 10th word shares runs of at most 9.
    auto tokens = tokenize_words(source);
    std::string paraphrase;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) paraphrase += " ";
        paraphrase += (i % 10 == 0) ? "reworded" + std::to_string(i) : tokens[i];
    }
    CHECK(index.verify_non_member(paraphrase));
    CHECK(verify_non_member(paraphrase, index));
}

TEST_CASE("save/load round trip preserves query results (heap and mmap)") {
    const std::uint32_t w = 12;
    Rng rng(10);
    std::vector<std::pair<std::string, std::string>> entries;
    for (int e = 0; e < 8; ++e) {
        entries.push_back({"r" + std::to_string(e), testutil::filler_text(rng, 30, 2000)});
    }
    auto index = index_of(entries, w, StoreKind::Copyright);

    auto dir = testutil::scratch_dir("index_roundtrip");
    std::string path = (dir / "store.lsix").string();
    index.save(path);

    auto heap = FingerprintIndex::load(path, false);
    auto mapped = FingerprintIndex::load(path, true);
    CHECK(heap.config().w == w);
    CHECK(mapped.entry_count() == index.entry_count());
    CHECK(heap.entries()[0].store == StoreKind::Copyright);

    for (int i = 0; i < 12; ++i) {
        std::string text = testutil::filler_text(rng, 40, 60);
        if (i % 3 == 0) text += " " + entries[i % entries.size()].second;
        Document doc = make_doc("d" + std::to_string(i), text);
        auto a = index.find_leaks(doc);
        auto b = heap.find_leaks(doc);
        auto c = mapped.find_leaks(doc);
        REQUIRE(a.size() == b.size());
        REQUIRE(a.size() == c.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(a[k].ref_id == b[k].ref_id);
            CHECK(a[k].doc_begin == c[k].doc_begin);
            CHECK(a[k].width == c[k].width);
            CHECK(a[k].ref_begin == b[k].ref_begin);
        }
    }
}

TEST_CASE("two copies of one entry in a doc give two match windows") {
    const std::uint32_t w = 10;
    Rng rng(31);
    std::string entry = testutil::filler_text(rng, 12, 4000);
    auto index = index_of({{"ref", entry}}, w);
    Document doc = make_doc("d", entry + " " + testutil::filler_text(rng, 20, 40) + " " + entry);
    auto leaks = index.find_leaks(doc);
    REQUIRE(leaks.size() == 2);
    CHECK(leaks[0].doc_begin == 0);
    CHECK(leaks[1].doc_begin == 32);
    CHECK(leaks[0].width == 12);
    CHECK(leaks[1].width == 12);
}

TEST_CASE("load-then-save reproduces the file byte for byte") {
    Rng rng(32);
    std::vector<std::pair<std::string, std::string>> entries;
    for (int e = 0; e < 4; ++e) {
        entries.push_back({"r" + std::to_string(e), testutil::filler_text(rng, 25, 900)});
    }
    auto index = index_of(entries, 20, StoreKind::Benchmark);
    auto dir = testutil::scratch_dir("index_stable");
    std::string first = (dir / "a.lsix").string();
    std::string second = (dir / "b.lsix").string();
    index.save(first);
    FingerprintIndex::load(first, false).save(second);
    CHECK(testutil::read_file(first) == testutil::read_file(second));
}

TEST_CASE("file format prefix is the documented layout") {
    Rng rng(30);
    auto index = index_of({{"only", testutil::filler_text(rng, 16, 500)}}, 16);
    auto dir = testutil::scratch_dir("index_format");
    std::string path = (dir / "store.lsix").string();
    index.save(path);
    std::string bytes = testutil::read_file(path);
    REQUIRE(bytes.size() > 20);
    CHECK(bytes.substr(0, 4) == "LSIX");
    auto u16 = [&](std::size_t at) {
        return static_cast<unsigned>(static_cast<unsigned char>(bytes[at])) |
               (static_cast<unsigned>(static_cast<unsigned char>(bytes[at + 1])) << 8);
    };
    auto u32 = [&](std::size_t at) {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
        }
        return v;
    };
    auto u64 = [&](std::size_t at) {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
        }
        return v;
    };
    CHECK(u16(4) == 1);    // version
    CHECK(u16(6) == 64);   // hash bits
    CHECK(u32(8) == 16);   // W
    CHECK(u64(12) == 1);   // one window -> one bucket
    // bucket: u64 hash, u32 count=1, one posting (ref 0, offset 0)
    CHECK(u32(28) == 1);
    CHECK(u32(32) == 0);
    CHECK(u32(36) == 0);
}

TEST_CASE("index build is insertion-order independent for queries") {
    const std::uint32_t w = 8;
    Rng rng(11);
    std::vector<std::pair<std::string, std::string>> entries;
    for (int e = 0; e < 6; ++e) {
        entries.push_back({"r" + std::to_string(e), testutil::filler_text(rng, 20, 800)});
    }
    auto forward = index_of(entries, w);
    auto reversed_entries = entries;
    std::reverse(reversed_entries.begin(), reversed_entries.end());
    auto reversed = index_of(reversed_entries, w);

    for (int i = 0; i < 10; ++i) {
        std::string text = testutil::filler_text(rng, 30, 40);
        if (i % 2 == 0) text += " " + entries[i % entries.size()].second;
        Document doc = make_doc("d" + std::to_string(i), text);
        auto a = forward.find_leaks(doc);
        auto b = reversed.find_leaks(doc);
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(a[k].ref_id == b[k].ref_id);
            CHECK(a[k].doc_begin == b[k].doc_begin);
            CHECK(a[k].ref_begin == b[k].ref_begin);
            CHECK(a[k].width == b[k].width);
        }
    }
}

TEST_CASE("zero false negatives and positives vs oracle on randomized fixtures") {
    const std::uint32_t w = 15;
    Rng rng(12);
    std::vector<std::pair<std::string, std::string>> entries;
    for (int e = 0; e < 20; ++e) {
        entries.push_back({"r" + std::to_string(e), testutil::filler_text(rng, 15 + rng.below(40), 300)});
    }
    auto index = index_of(entries, w);
    std::vector<Document> docs;
    for (int i = 0; i < 40; ++i) {
        std::string text = testutil::filler_text(rng, 10 + rng.below(80), 25);
        if (rng.below(3) == 0) {
            // splice a random slice of a random entry
            auto tokens = tokenize_words(entries[rng.below(entries.size())].second);
            std::size_t len = std::min<std::size_t>(tokens.size(), w + rng.below(20));
            std::size_t start = tokens.size() > len ? rng.below(tokens.size() - len + 1) : 0;
            std::string slice;
            for (std::size_t k = start; k < start + len; ++k) {
                if (k > start) slice += " ";
                slice += tokens[k];
            }
            text += " " + slice;
        }
        docs.push_back(make_doc("doc" + std::to_string(i), text));
    }
    check_against_oracle(index, entries, docs, w);
}

TEST_CASE("10MB no-hit document scans fast") {
    Rng rng(13);
    auto index = index_of({{"ref", testutil::filler_text(rng, 1000, 100000)}}, 300);

    // ~10 MB of text that shares no window with the entry
    std::string big;
    big.reserve(11'000'000);
    std::uint64_t i = 0;
    while (big.size() < 10'000'000) {
        big += "z" + std::to_string(i++);
        big.push_back(' ');
    }
    Document doc = make_doc("big", big);
    auto start = std::chrono::steady_clock::now();
    auto leaks = index.find_leaks(doc);
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    CHECK(leaks.empty());
    MESSAGE("10MB no-hit scan took ", elapsed, " ms");
    CHECK(elapsed < 1000);
}

}  // TEST_SUITE
