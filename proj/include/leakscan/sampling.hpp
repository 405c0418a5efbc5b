#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "leakscan/document.hpp"
#include "leakscan/errors.hpp"
#include "leakscan/rng.hpp"

namespace leakscan {

// Single-pass uniform reservoir sampling (Algorithm R with the geometric
// skip optimization), so sampling millions of instances from a corpus stream
// needs no second pass. Deterministic for a fixed (seed, stream).
template <typename T>
class ReservoirSampler {
public:
    explicit ReservoirSampler(SampleConfig cfg) : cfg_(cfg), rng_(cfg.seed) {
        if (cfg_.sample_size < 1) throw PreconditionError("sample_size must be >= 1");
        reservoir_.reserve(static_cast<std::size_t>(cfg_.sample_size));
    }

    void feed(T item) {
        if (reservoir_.size() < cfg_.sample_size) {
            reservoir_.emplace_back(stream_pos_, std::move(item));
            if (reservoir_.size() == cfg_.sample_size) {
                weight_ = next_weight(weight_);
                skip_ = next_skip();
            }
        } else if (skip_ > 0) {
            --skip_;
        } else {
            std::size_t slot = static_cast<std::size_t>(rng_.below(cfg_.sample_size));
            reservoir_[slot] = {stream_pos_, std::move(item)};
            weight_ = next_weight(weight_);
            skip_ = next_skip();
        }
        ++stream_pos_;
    }

    // Sampled items in stream order.
    std::vector<T> finish() {
        std::sort(reservoir_.begin(), reservoir_.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<T> out;
        out.reserve(reservoir_.size());
        for (auto& [pos, item] : reservoir_) out.push_back(std::move(item));
        reservoir_.clear();
        return out;
    }

    std::uint64_t seen() const { return stream_pos_; }

private:
    double next_weight(double w) {
        return w * std::exp(std::log(positive_unit()) / static_cast<double>(cfg_.sample_size));
    }

    std::uint64_t next_skip() {
        double u = positive_unit();
        double s = std::floor(std::log(u) / std::log1p(-weight_));
        if (!(s >= 0) || s > 1e18) s = 1e18;
        return static_cast<std::uint64_t>(s);
    }

    double positive_unit() {
        double u = rng_.real();
        while (u <= 0.0) u = rng_.real();
        return u;
    }

    SampleConfig cfg_;
    Rng rng_;
    std::vector<std::pair<std::uint64_t, T>> reservoir_;
    std::uint64_t stream_pos_ = 0;
    double weight_ = 1.0;
    std::uint64_t skip_ = 0;
};

template <typename T>
std::vector<T> reservoir_sample(std::vector<T> stream, const SampleConfig& cfg) {
    ReservoirSampler<T> sampler(cfg);
    for (auto& item : stream) sampler.feed(std::move(item));
    return sampler.finish();
}

}  // namespace leakscan
