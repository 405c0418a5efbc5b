#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "leakscan/errors.hpp"
#include "leakscan/pii.hpp"

namespace leakscan {

// The three leakage kinds: personal information, copyrighted texts,
// benchmark test data.
enum class LeakKind { PI, CT, BM };

std::string leak_kind_label(LeakKind kind);
LeakKind leak_kind_from_label(const std::string& label);

// One maximal shared word run (>= W words) between a document and a
// reference entry. Both word slices compare equal.
struct MatchWindow {
    std::string doc_id;
    std::size_t doc_begin = 0;  // word offsets, half-open
    std::size_t doc_end = 0;
    std::string ref_id;
    std::size_t ref_begin = 0;
    std::size_t ref_end = 0;
    std::size_t width = 0;
};

// A verdict that a document leaks; evidence is never empty.
struct LeakRecord {
    std::string doc_id;
    LeakKind kind = LeakKind::PI;
    std::vector<PiiMatch> pii_evidence;
    std::vector<MatchWindow> window_evidence;

    static LeakRecord pi(std::string doc_id, std::vector<PiiMatch> evidence);
    static LeakRecord windows(std::string doc_id, LeakKind kind, std::vector<MatchWindow> evidence);
};

// Exact ratio reported alongside its decimal form.
struct Rational {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    Rational() = default;
    Rational(std::uint64_t n, std::uint64_t d) : num(n), den(d) {
        if (d == 0) throw DivisionByZero("rational with zero denominator");
        std::uint64_t g = std::gcd(num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
    std::string to_string() const { return std::to_string(num) + "/" + std::to_string(den); }
};

}  // namespace leakscan
