#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "leakscan/document.hpp"
#include "leakscan/leak.hpp"

namespace leakscan {

enum class StoreKind { Benchmark, Copyright };

std::string store_kind_label(StoreKind kind);
StoreKind store_kind_from_label(const std::string& label);

struct IndexConfig {
    std::uint32_t w = 300;  // window width in words
    std::uint16_t hash_bits = 64;
    StoreKind store = StoreKind::Benchmark;
};

// One reference text; entries shorter than W words are dropped at build time.
struct ReferenceEntry {
    std::string ref_id;
    StoreKind store = StoreKind::Benchmark;
    std::vector<std::string> word_tokens;
};

// A raw store record. Multi-field instances (context, question, ...) index
// each field as its own entry.
struct RawRefRecord {
    std::string id;
    std::vector<std::pair<std::string, std::string>> fields;  // (field name, text)

    static RawRefRecord single(std::string id, std::string text) {
        return {std::move(id), {{"", std::move(text)}}};
    }
};

// Frozen rolling-hash index of W-word windows over reference texts. Build is
// single-writer; after freezing the index is immutable and may be queried
// concurrently.
class FingerprintIndex {
public:
    explicit FingerprintIndex(IndexConfig cfg);
    FingerprintIndex(FingerprintIndex&&) noexcept;
    FingerprintIndex& operator=(FingerprintIndex&&) noexcept;
    ~FingerprintIndex();

    // Normalizes, tokenizes, applies the W filter, fingerprints.
    void add_record(const RawRefRecord& record);
    void add_entry(ReferenceEntry entry);
    void freeze();

    bool frozen() const;
    const IndexConfig& config() const;
    std::size_t entry_count() const;
    std::size_t dropped_count() const;  // entries shorter than W
    std::size_t window_count() const;
    const std::vector<ReferenceEntry>& entries() const;

    // All maximal shared runs of >= W contiguous words between the document
    // and any reference entry, one MatchWindow per (run, entry). Hash hits
    // are verified word-by-word before reporting. Documents shorter than W
    // words yield nothing.
    std::vector<MatchWindow> find_leaks(const Document& doc) const;

    // True iff the text shares no >= W-word run with any entry.
    bool verify_non_member(const std::string& text) const;

    // "LSIX" single-file format; see file_format.md in the repo docs.
    void save(const std::string& path) const;
    static FingerprintIndex load(const std::string& path, bool use_mmap = false);

    static std::uint64_t word_hash(std::string_view word);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// build_store convenience: records -> frozen index. Throws EmptyStore when
// nothing survives the W filter.
FingerprintIndex build_store(const std::vector<RawRefRecord>& records, const IndexConfig& cfg);

// |distinct doc ids among verdicts with the given kind| / sampled_total.
Rational leakage_rate(const std::vector<LeakRecord>& verdicts, std::uint64_t sampled_total,
                      LeakKind kind);

bool verify_non_member(const std::string& text, const FingerprintIndex& index);

}  // namespace leakscan
