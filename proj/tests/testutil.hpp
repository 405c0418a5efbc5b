#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "leakscan/rng.hpp"

namespace testutil {

// Fresh scratch directory per test case; removed and recreated on reuse.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("leakscan_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// Independent word counter (stream extraction, not the library tokenizer).
inline std::size_t stream_word_count(const std::string& text) {
    std::istringstream in(text);
    std::string word;
    std::size_t count = 0;
    while (in >> word) ++count;
    return count;
}

// Independent Luhn implementation (table-based doubling, iterates left to
// right over the reversed string) used to vet card fixtures.
inline bool luhn_reference(const std::string& digits) {
    static const int doubled[10] = {0, 2, 4, 6, 8, 1, 3, 5, 7, 9};
    int sum = 0;
    int pos = 0;
    for (auto it = digits.rbegin(); it != digits.rend(); ++it, ++pos) {
        if (*it < '0' || *it > '9') return false;
        int d = *it - '0';
        sum += (pos % 2 == 1) ? doubled[d] : d;
    }
    return sum % 10 == 0;
}

// Appends a Luhn check digit to a digit prefix.
inline std::string with_luhn_check(const std::string& prefix) {
    for (char c = '0'; c <= '9'; ++c) {
        if (luhn_reference(prefix + c)) return prefix + c;
    }
    return prefix + "0";  // unreachable
}

struct CommonRun {
    std::size_t a_begin;
    std::size_t b_begin;
    std::size_t length;
};

// Brute-force maximal common word-run finder: every maximal diagonal run of
// equal words between a and b with length >= min_len. O(|a| * |b|).
inline std::vector<CommonRun> brute_force_common_runs(const std::vector<std::string>& a,
                                                      const std::vector<std::string>& b,
                                                      std::size_t min_len) {
    std::vector<CommonRun> runs;
    if (a.empty() || b.empty()) return runs;
    const std::size_t n = a.size(), m = b.size();
    // diag d = i - j, from -(m-1) .. n-1
    for (std::ptrdiff_t d = -static_cast<std::ptrdiff_t>(m) + 1;
         d < static_cast<std::ptrdiff_t>(n); ++d) {
        std::size_t i = d > 0 ? static_cast<std::size_t>(d) : 0;
        std::size_t j = d > 0 ? 0 : static_cast<std::size_t>(-d);
        while (i < n && j < m) {
            if (a[i] == b[j]) {
                std::size_t start_i = i, start_j = j, len = 0;
                while (i < n && j < m && a[i] == b[j]) {
                    ++i;
                    ++j;
                    ++len;
                }
                if (len >= min_len) runs.push_back({start_i, start_j, len});
            } else {
                ++i;
                ++j;
            }
        }
    }
    return runs;
}

// Deterministic synthetic vocabulary word: wNNNN-style tokens that never
// collide with planted content.
inline std::string vocab_word(std::uint64_t i) { return "w" + std::to_string(i); }

// Deterministic filler text of `words` words drawn from a vocabulary of
// `vocab` distinct tokens.
inline std::string filler_text(leakscan::Rng& rng, std::size_t words, std::uint64_t vocab) {
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) out.push_back(' ');
        out += vocab_word(rng.below(vocab));
    }
    return out;
}

// Chi-square critical value via the Wilson-Hilferty approximation.
inline double chi_square_critical(double df, double z) {
    double t = 2.0 / (9.0 * df);
    double v = 1.0 - t + z * std::sqrt(t);
    return df * v * v * v;
}

}  // namespace testutil
