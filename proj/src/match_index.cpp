#include "leakscan/match_index.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>
#include <unordered_map>

#include "leakscan/text.hpp"

namespace leakscan {

namespace {

constexpr std::uint64_t kRollBase = 0x9E3779B97F4A7C15ULL | 1ULL;
constexpr char kMagic[4] = {'L', 'S', 'I', 'X'};
constexpr char kTokenMagic[4] = {'T', 'O', 'K', 'S'};

std::uint64_t pow_base(std::uint64_t exp) {
    std::uint64_t result = 1, base = kRollBase;
    while (exp > 0) {
        if (exp & 1) result *= base;
        base *= base;
        exp >>= 1;
    }
    return result;
}

struct Posting {
    std::uint32_t ref_idx;
    std::uint32_t word_offset;
};

template <typename T>
void write_le(std::string& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
    }
}

template <typename T>
T read_le(const unsigned char* p) {
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        value |= static_cast<T>(p[i]) << (8 * i);
    }
    return value;
}

}  // namespace

std::string store_kind_label(StoreKind kind) {
    return kind == StoreKind::Benchmark ? "benchmark" : "copyright";
}

StoreKind store_kind_from_label(const std::string& label) {
    if (label == "benchmark") return StoreKind::Benchmark;
    if (label == "copyright") return StoreKind::Copyright;
    throw ConfigError("unknown store kind: " + label);
}

std::uint64_t FingerprintIndex::word_hash(std::string_view word) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : word) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    // finalize for avalanche
    h ^= h >> 30;
    h *= 0xBF58476D1CE4E5B9ULL;
    h ^= h >> 27;
    h *= 0x94D049BB133111EBULL;
    h ^= h >> 31;
    return h;
}

struct FingerprintIndex::Impl {
    IndexConfig cfg;
    bool frozen = false;
    std::size_t dropped = 0;
    std::uint64_t pow_w1 = 1;

    // Entry metadata; word_tokens owned unless mmap-backed.
    std::vector<ReferenceEntry> entries;
    // mmap mode: views into the mapping, indexed like entries.
    std::vector<std::vector<std::string_view>> token_views;
    bool mmap_backed = false;

    std::unordered_map<std::uint64_t, std::vector<Posting>> building;

    // frozen representation
    std::vector<std::uint64_t> bucket_hashes;
    std::vector<std::uint64_t> bucket_offsets;  // byte offsets into postings region
    std::vector<std::uint32_t> bucket_counts;
    std::vector<unsigned char> postings_heap;
    const unsigned char* postings_base = nullptr;

    std::vector<std::uint32_t> probe;
    std::uint64_t probe_mask = 0;

    void* map_base = nullptr;
    std::size_t map_len = 0;

    ~Impl() {
        if (map_base) ::munmap(map_base, map_len);
    }

    std::size_t token_count(std::size_t ref) const {
        return mmap_backed ? token_views[ref].size() : entries[ref].word_tokens.size();
    }

    std::string_view ref_word(std::size_t ref, std::size_t off) const {
        if (mmap_backed) return token_views[ref][off];
        return entries[ref].word_tokens[off];
    }

    void build_probe() {
        std::size_t want = bucket_hashes.size() * 2;
        std::size_t size = 16;
        while (size < want) size <<= 1;
        probe.assign(size, UINT32_MAX);
        probe_mask = size - 1;
        for (std::size_t b = 0; b < bucket_hashes.size(); ++b) {
            std::uint64_t slot = bucket_hashes[b] & probe_mask;
            while (probe[slot] != UINT32_MAX) slot = (slot + 1) & probe_mask;
            probe[slot] = static_cast<std::uint32_t>(b);
        }
    }

    // Returns bucket index or SIZE_MAX.
    std::size_t find_bucket(std::uint64_t hash) const {
        if (bucket_hashes.empty()) return SIZE_MAX;
        std::uint64_t slot = hash & probe_mask;
        while (true) {
            std::uint32_t b = probe[slot];
            if (b == UINT32_MAX) return SIZE_MAX;
            if (bucket_hashes[b] == hash) return b;
            slot = (slot + 1) & probe_mask;
        }
    }

    Posting posting_at(std::size_t bucket, std::uint32_t k) const {
        const unsigned char* p = postings_base + bucket_offsets[bucket] + 8ULL * k;
        return {read_le<std::uint32_t>(p), read_le<std::uint32_t>(p + 4)};
    }
};

FingerprintIndex::FingerprintIndex(IndexConfig cfg) : impl_(new Impl) {
    if (cfg.w < 1) throw PreconditionError("window width W must be >= 1");
    if (cfg.hash_bits != 64) throw PreconditionError("only 64-bit hashes are supported");
    impl_->cfg = cfg;
    impl_->pow_w1 = pow_base(cfg.w - 1);
}

FingerprintIndex::FingerprintIndex(FingerprintIndex&&) noexcept = default;
FingerprintIndex& FingerprintIndex::operator=(FingerprintIndex&&) noexcept = default;
FingerprintIndex::~FingerprintIndex() = default;

bool FingerprintIndex::frozen() const { return impl_->frozen; }
const IndexConfig& FingerprintIndex::config() const { return impl_->cfg; }
std::size_t FingerprintIndex::entry_count() const { return impl_->entries.size(); }
std::size_t FingerprintIndex::dropped_count() const { return impl_->dropped; }
const std::vector<ReferenceEntry>& FingerprintIndex::entries() const { return impl_->entries; }

std::size_t FingerprintIndex::window_count() const {
    std::size_t count = 0;
    for (std::uint32_t c : impl_->bucket_counts) count += c;
    if (!impl_->frozen) {
        for (const auto& [h, posts] : impl_->building) count += posts.size();
    }
    return count;
}

void FingerprintIndex::add_record(const RawRefRecord& record) {
    for (const auto& [field, text] : record.fields) {
        ReferenceEntry entry;
        entry.ref_id = field.empty() ? record.id : record.id + "#" + field;
        entry.store = impl_->cfg.store;
        entry.word_tokens = tokenize_words(normalize(text));
        add_entry(std::move(entry));
    }
}

void FingerprintIndex::add_entry(ReferenceEntry entry) {
    if (impl_->frozen) throw PreconditionError("index is frozen");
    const std::uint32_t w = impl_->cfg.w;
    if (entry.word_tokens.size() < w) {
        ++impl_->dropped;
        return;
    }
    const std::uint32_t ref_idx = static_cast<std::uint32_t>(impl_->entries.size());
    const auto& tokens = entry.word_tokens;

    std::uint64_t h = 0;
    for (std::uint32_t i = 0; i < w; ++i) h = h * kRollBase + word_hash(tokens[i]);
    impl_->building[h].push_back({ref_idx, 0});
    for (std::size_t j = 1; j + w <= tokens.size(); ++j) {
        h = (h - word_hash(tokens[j - 1]) * impl_->pow_w1) * kRollBase + word_hash(tokens[j + w - 1]);
        impl_->building[h].push_back({ref_idx, static_cast<std::uint32_t>(j)});
    }
    impl_->entries.push_back(std::move(entry));
}

void FingerprintIndex::freeze() {
    if (impl_->frozen) return;
    std::vector<std::uint64_t> hashes;
    hashes.reserve(impl_->building.size());
    for (const auto& [h, posts] : impl_->building) hashes.push_back(h);
    std::sort(hashes.begin(), hashes.end());

    impl_->bucket_hashes = std::move(hashes);
    impl_->bucket_offsets.resize(impl_->bucket_hashes.size());
    impl_->bucket_counts.resize(impl_->bucket_hashes.size());
    impl_->postings_heap.clear();
    for (std::size_t b = 0; b < impl_->bucket_hashes.size(); ++b) {
        auto& posts = impl_->building[impl_->bucket_hashes[b]];
        std::sort(posts.begin(), posts.end(), [](const Posting& a, const Posting& p) {
            if (a.ref_idx != p.ref_idx) return a.ref_idx < p.ref_idx;
            return a.word_offset < p.word_offset;
        });
        impl_->bucket_offsets[b] = impl_->postings_heap.size();
        impl_->bucket_counts[b] = static_cast<std::uint32_t>(posts.size());
        std::string chunk;
        for (const Posting& p : posts) {
            write_le<std::uint32_t>(chunk, p.ref_idx);
            write_le<std::uint32_t>(chunk, p.word_offset);
        }
        impl_->postings_heap.insert(impl_->postings_heap.end(), chunk.begin(), chunk.end());
    }
    impl_->postings_base = impl_->postings_heap.data();
    impl_->building.clear();
    impl_->build_probe();
    impl_->frozen = true;
}

std::vector<MatchWindow> FingerprintIndex::find_leaks(const Document& doc) const {
    if (!impl_->frozen) throw PreconditionError("index must be frozen before queries");
    const std::uint32_t w = impl_->cfg.w;
    const auto& tokens = doc.word_tokens;
    std::vector<MatchWindow> out;
    if (tokens.size() < w) return out;

    std::vector<std::uint64_t> hw(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) hw[i] = word_hash(tokens[i]);

    struct Hit {
        std::uint32_t ref_idx;
        std::int64_t diag;  // doc offset - ref offset
        std::size_t doc_off;
    };
    std::vector<Hit> hits;

    std::uint64_t h = 0;
    for (std::uint32_t i = 0; i < w; ++i) h = h * kRollBase + hw[i];
    for (std::size_t j = 0;; ++j) {
        std::size_t bucket = impl_->find_bucket(h);
        if (bucket != SIZE_MAX) {
            const std::uint32_t count = impl_->bucket_counts[bucket];
            for (std::uint32_t k = 0; k < count; ++k) {
                Posting p = impl_->posting_at(bucket, k);
                bool equal = true;
                for (std::uint32_t t = 0; t < w; ++t) {
                    if (tokens[j + t] != impl_->ref_word(p.ref_idx, p.word_offset + t)) {
                        equal = false;
                        break;
                    }
                }
                if (equal) {
                    hits.push_back({p.ref_idx,
                                    static_cast<std::int64_t>(j) -
                                        static_cast<std::int64_t>(p.word_offset),
                                    j});
                }
            }
        }
        if (j + w >= tokens.size()) break;
        h = (h - hw[j] * impl_->pow_w1) * kRollBase + hw[j + w];
    }

    // Merge window hits on the same (entry, diagonal) into maximal runs.
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        if (a.ref_idx != b.ref_idx) return a.ref_idx < b.ref_idx;
        if (a.diag != b.diag) return a.diag < b.diag;
        return a.doc_off < b.doc_off;
    });
    std::size_t i = 0;
    while (i < hits.size()) {
        std::size_t run_end = i;
        while (run_end + 1 < hits.size() && hits[run_end + 1].ref_idx == hits[i].ref_idx &&
               hits[run_end + 1].diag == hits[i].diag &&
               hits[run_end + 1].doc_off == hits[run_end].doc_off + 1) {
            ++run_end;
        }
        const Hit& first = hits[i];
        const Hit& last = hits[run_end];
        MatchWindow mw;
        mw.doc_id = doc.doc_id;
        mw.doc_begin = first.doc_off;
        mw.doc_end = last.doc_off + w;
        mw.ref_id = impl_->entries[first.ref_idx].ref_id;
        mw.ref_begin = static_cast<std::size_t>(static_cast<std::int64_t>(first.doc_off) - first.diag);
        mw.ref_end = mw.ref_begin + (mw.doc_end - mw.doc_begin);
        mw.width = mw.doc_end - mw.doc_begin;
        out.push_back(std::move(mw));
        i = run_end + 1;
    }

    std::sort(out.begin(), out.end(), [](const MatchWindow& a, const MatchWindow& b) {
        if (a.doc_begin != b.doc_begin) return a.doc_begin < b.doc_begin;
        if (a.ref_id != b.ref_id) return a.ref_id < b.ref_id;
        return a.ref_begin < b.ref_begin;
    });
    return out;
}

bool FingerprintIndex::verify_non_member(const std::string& text) const {
    Document probe = Document::make("__non_member_probe__", Source::Other, text);
    return find_leaks(probe).empty();
}

void FingerprintIndex::save(const std::string& path) const {
    if (!impl_->frozen) throw PreconditionError("freeze the index before saving");
    if (impl_->mmap_backed) throw PreconditionError("mmap-backed indexes are read-only");
    std::string out;
    out.append(kMagic, 4);
    write_le<std::uint16_t>(out, 1);
    write_le<std::uint16_t>(out, impl_->cfg.hash_bits);
    write_le<std::uint32_t>(out, impl_->cfg.w);
    write_le<std::uint64_t>(out, impl_->bucket_hashes.size());
    for (std::size_t b = 0; b < impl_->bucket_hashes.size(); ++b) {
        write_le<std::uint64_t>(out, impl_->bucket_hashes[b]);
        write_le<std::uint32_t>(out, impl_->bucket_counts[b]);
        const unsigned char* p = impl_->postings_base + impl_->bucket_offsets[b];
        out.append(reinterpret_cast<const char*>(p), 8ULL * impl_->bucket_counts[b]);
    }
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(impl_->entries.size()));
    for (const auto& entry : impl_->entries) {
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(entry.ref_id.size()));
        out.append(entry.ref_id);
        out.push_back(entry.store == StoreKind::Benchmark ? 0 : 1);
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(entry.word_tokens.size()));
    }
    // Token text follows the bucket/ref tables so loaded indexes can verify
    // hash hits word-by-word.
    out.append(kTokenMagic, 4);
    for (const auto& entry : impl_->entries) {
        std::string joined;
        for (std::size_t i = 0; i < entry.word_tokens.size(); ++i) {
            if (i > 0) joined.push_back(' ');
            joined.append(entry.word_tokens[i]);
        }
        write_le<std::uint64_t>(out, joined.size());
        out.append(joined);
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot write " + path);
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw IoError("short write to " + path);
}

FingerprintIndex FingerprintIndex::load(const std::string& path, bool use_mmap) {
    int fd = ::open(path.c_str(), O_RDONLY);
    if (fd < 0) throw IoError("cannot open " + path);
    struct ::stat st {};
    if (::fstat(fd, &st) != 0) {
        ::close(fd);
        throw IoError("cannot stat " + path);
    }
    std::size_t len = static_cast<std::size_t>(st.st_size);

    const unsigned char* base = nullptr;
    void* map_base = nullptr;
    std::string owned;
    if (use_mmap) {
        map_base = ::mmap(nullptr, len, PROT_READ, MAP_PRIVATE, fd, 0);
        ::close(fd);
        if (map_base == MAP_FAILED) throw IoError("mmap failed for " + path);
        base = static_cast<const unsigned char*>(map_base);
    } else {
        owned.resize(len);
        std::size_t got = 0;
        while (got < len) {
            ssize_t r = ::read(fd, owned.data() + got, len - got);
            if (r <= 0) {
                ::close(fd);
                throw IoError("short read from " + path);
            }
            got += static_cast<std::size_t>(r);
        }
        ::close(fd);
        base = reinterpret_cast<const unsigned char*>(owned.data());
    }

    auto fail = [&](const std::string& why) -> void {
        if (map_base) ::munmap(map_base, len);
        throw ProtocolError(path + ": " + why);
    };

    std::size_t pos = 0;
    auto need = [&](std::size_t n) {
        if (pos + n > len) fail("truncated file");
    };

    need(20);
    if (std::memcmp(base, kMagic, 4) != 0) fail("bad magic");
    pos = 4;
    std::uint16_t version = read_le<std::uint16_t>(base + pos);
    pos += 2;
    if (version != 1) fail("unsupported version");
    std::uint16_t hash_bits = read_le<std::uint16_t>(base + pos);
    pos += 2;
    std::uint32_t w = read_le<std::uint32_t>(base + pos);
    pos += 4;
    std::uint64_t n_buckets = read_le<std::uint64_t>(base + pos);
    pos += 8;
    if (hash_bits != 64) fail("unsupported hash width");
    if (w < 1) fail("invalid window width");

    IndexConfig cfg;
    cfg.w = w;
    cfg.hash_bits = hash_bits;
    FingerprintIndex index(cfg);
    Impl& impl = *index.impl_;

    impl.bucket_hashes.resize(n_buckets);
    impl.bucket_counts.resize(n_buckets);
    impl.bucket_offsets.resize(n_buckets);
    std::string postings_heap;
    for (std::uint64_t b = 0; b < n_buckets; ++b) {
        need(12);
        impl.bucket_hashes[b] = read_le<std::uint64_t>(base + pos);
        pos += 8;
        std::uint32_t count = read_le<std::uint32_t>(base + pos);
        pos += 4;
        need(8ULL * count);
        impl.bucket_counts[b] = count;
        if (use_mmap) {
            impl.bucket_offsets[b] = pos;  // offsets relative to map base
        } else {
            impl.bucket_offsets[b] = postings_heap.size();
            postings_heap.append(reinterpret_cast<const char*>(base + pos), 8ULL * count);
        }
        pos += 8ULL * count;
    }

    need(4);
    std::uint32_t n_refs = read_le<std::uint32_t>(base + pos);
    pos += 4;
    std::vector<std::uint32_t> token_counts(n_refs);
    for (std::uint32_t r = 0; r < n_refs; ++r) {
        need(4);
        std::uint32_t id_len = read_le<std::uint32_t>(base + pos);
        pos += 4;
        need(id_len + 5);
        ReferenceEntry entry;
        entry.ref_id.assign(reinterpret_cast<const char*>(base + pos), id_len);
        pos += id_len;
        entry.store = base[pos] == 0 ? StoreKind::Benchmark : StoreKind::Copyright;
        pos += 1;
        token_counts[r] = read_le<std::uint32_t>(base + pos);
        pos += 4;
        impl.entries.push_back(std::move(entry));
    }

    need(4);
    if (std::memcmp(base + pos, kTokenMagic, 4) != 0) fail("missing token section");
    pos += 4;
    impl.token_views.resize(n_refs);
    for (std::uint32_t r = 0; r < n_refs; ++r) {
        need(8);
        std::uint64_t byte_len = read_le<std::uint64_t>(base + pos);
        pos += 8;
        need(byte_len);
        std::string_view joined(reinterpret_cast<const char*>(base + pos), byte_len);
        pos += byte_len;
        if (use_mmap) {
            auto& views = impl.token_views[r];
            std::size_t start = 0;
            while (start <= joined.size() && !joined.empty()) {
                std::size_t space = joined.find(' ', start);
                if (space == std::string_view::npos) {
                    views.push_back(joined.substr(start));
                    break;
                }
                views.push_back(joined.substr(start, space - start));
                start = space + 1;
            }
            if (views.size() != token_counts[r]) fail("token count mismatch");
        } else {
            auto& tokens = impl.entries[r].word_tokens;
            std::size_t start = 0;
            while (start <= joined.size() && !joined.empty()) {
                std::size_t space = joined.find(' ', start);
                if (space == std::string_view::npos) {
                    tokens.emplace_back(joined.substr(start));
                    break;
                }
                tokens.emplace_back(joined.substr(start, space - start));
                start = space + 1;
            }
            if (tokens.size() != token_counts[r]) fail("token count mismatch");
        }
    }

    if (use_mmap) {
        impl.mmap_backed = true;
        impl.map_base = map_base;
        impl.map_len = len;
        impl.postings_base = base;
    } else {
        impl.postings_heap.assign(postings_heap.begin(), postings_heap.end());
        impl.postings_base = impl.postings_heap.data();
        impl.token_views.clear();
    }
    impl.build_probe();
    impl.frozen = true;
    return index;
}

FingerprintIndex build_store(const std::vector<RawRefRecord>& records, const IndexConfig& cfg) {
    FingerprintIndex index(cfg);
    for (const auto& record : records) index.add_record(record);
    if (index.entry_count() == 0) {
        throw EmptyStore("no reference entries survive the W=" + std::to_string(cfg.w) +
                         " word filter");
    }
    index.freeze();
    return index;
}

Rational leakage_rate(const std::vector<LeakRecord>& verdicts, std::uint64_t sampled_total,
                      LeakKind kind) {
    if (sampled_total == 0) throw DivisionByZero("leakage_rate with sampled_total = 0");
    std::set<std::string> docs;
    for (const auto& v : verdicts) {
        if (v.kind == kind) docs.insert(v.doc_id);
    }
    return Rational(docs.size(), sampled_total);
}

bool verify_non_member(const std::string& text, const FingerprintIndex& index) {
    return index.verify_non_member(text);
}

}  // namespace leakscan
