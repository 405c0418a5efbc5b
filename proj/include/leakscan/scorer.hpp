#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

namespace leakscan {

// Token-level log-likelihood breakdown of a continuation under a scorer.
// Logprobs are natural log and never positive.
struct ScoredText {
    std::vector<std::string> tokens;
    std::vector<double> logprobs;
    std::size_t context_len = 0;  // prompt tokens excluded from scoring
};

double mean_loglik(const ScoredText& st);
double perplexity(const ScoredText& st);

struct Completion {
    std::string text;
    bool truncated = false;
};

// Likelihood + greedy-completion contract every detection method runs on.
// Implementations are safe for concurrent use.
class Scorer {
public:
    virtual ~Scorer() = default;

    // Logprobs cover only continuation tokens, conditioned on the prompt.
    virtual ScoredText score(const std::string& prompt, const std::string& continuation) = 0;

    // Greedy (temperature 0) continuation.
    virtual Completion complete(const std::string& prompt, std::size_t max_tokens) = 0;

    virtual std::string id() const = 0;
};

// Separable test world: memorized continuations score `hi` per token,
// everything else `lo`. Completions implement the self-detection rule mock:
// with at least one few-shot example present the final "Text: ... Label:"
// instance is answered truthfully (" yes"/" no" by membership), with zero
// examples the answer is always " no".
class MockLookupScorer : public Scorer {
public:
    MockLookupScorer(std::unordered_set<std::string> memorized, double hi = -0.1, double lo = -5.0);

    ScoredText score(const std::string& prompt, const std::string& continuation) override;
    Completion complete(const std::string& prompt, std::size_t max_tokens) override;
    std::string id() const override { return "mock_lookup"; }

    bool memorized(const std::string& text) const { return memorized_.count(text) > 0; }
    // Test hook: forces complete() to return a fixed string.
    void set_completion_override(std::string text) { override_ = std::move(text); }

private:
    std::unordered_set<std::string> memorized_;
    double hi_;
    double lo_;
    std::optional<std::string> override_;
};

// Word n-gram model with add-1 smoothing, for smooth deterministic
// likelihoods. Contexts shorter than order-1 back off to the longest
// available level, so scoring is prompt-additive by construction.
class MockNgramScorer : public Scorer {
public:
    MockNgramScorer(std::size_t order, const std::string& training_text);

    ScoredText score(const std::string& prompt, const std::string& continuation) override;
    Completion complete(const std::string& prompt, std::size_t max_tokens) override;
    std::string id() const override { return "mock_ngram"; }

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

enum class CassetteMode { Off, Record, Replay };

struct RemoteScorerConfig {
    std::string base_url;
    std::string model;
    std::string cache_dir;      // empty disables the disk cache
    std::string cassette_path;  // jsonl of {request_hash, request, response}
    CassetteMode cassette_mode = CassetteMode::Off;
    int max_in_flight = 4;
    int max_retries = 2;
};

// Client for the remote scoring protocol (POST /score, POST /complete).
// Responses are cached on disk keyed by a content hash of
// (model, prompt, continuation, op), making audits resumable; a recorded
// cassette replays byte-identically without network access.
class RemoteScorer : public Scorer {
public:
    explicit RemoteScorer(RemoteScorerConfig config);
    ~RemoteScorer() override;

    ScoredText score(const std::string& prompt, const std::string& continuation) override;
    Completion complete(const std::string& prompt, std::size_t max_tokens) override;
    std::string id() const override;

private:
    struct Impl;
    Impl* impl_;
};

}  // namespace leakscan
