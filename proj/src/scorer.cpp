#include "leakscan/scorer.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "httplib.h"
#include "json.hpp"
#include "leakscan/errors.hpp"
#include "leakscan/sha256.hpp"
#include "leakscan/text.hpp"

namespace leakscan {

namespace fs = std::filesystem;
using nlohmann::json;

double mean_loglik(const ScoredText& st) {
    if (st.tokens.empty() || st.tokens.size() != st.logprobs.size()) {
        throw PreconditionError("mean_loglik requires a non-empty ScoredText");
    }
    double sum = 0.0;
    for (double lp : st.logprobs) sum += lp;
    return sum / static_cast<double>(st.logprobs.size());
}

double perplexity(const ScoredText& st) { return std::exp(-mean_loglik(st)); }

namespace {

std::vector<std::string> continuation_tokens(const std::string& continuation) {
    std::vector<std::string> tokens = tokenize_words(continuation);
    if (tokens.empty()) tokens.push_back(continuation);
    return tokens;
}

// Final instance text of a few-shot classification prompt, i.e. the text
// between the last "Text: " and the trailing " Label:".
std::optional<std::string> final_instance_text(const std::string& prompt) {
    const std::string label_marker = " Label:";
    const std::string text_marker = "Text: ";
    if (prompt.size() < label_marker.size() ||
        prompt.compare(prompt.size() - label_marker.size(), label_marker.size(), label_marker) !=
            0) {
        return std::nullopt;
    }
    std::size_t label_pos = prompt.size() - label_marker.size();
    std::size_t text_pos = prompt.rfind(text_marker, label_pos);
    if (text_pos == std::string::npos) return std::nullopt;
    std::size_t start = text_pos + text_marker.size();
    return prompt.substr(start, label_pos - start);
}

std::size_t count_occurrences(const std::string& s, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = s.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

}  // namespace

MockLookupScorer::MockLookupScorer(std::unordered_set<std::string> memorized, double hi, double lo)
    : memorized_(std::move(memorized)), hi_(hi), lo_(lo) {
    if (!(hi_ > lo_)) throw PreconditionError("MockLookup requires hi > lo");
    if (hi_ > 0.0 || lo_ > 0.0) throw PreconditionError("logprob levels must be <= 0");
}

ScoredText MockLookupScorer::score(const std::string& prompt, const std::string& continuation) {
    (void)prompt;
    if (continuation.empty()) throw PreconditionError("continuation must be non-empty");
    ScoredText st;
    st.tokens = continuation_tokens(continuation);
    st.logprobs.assign(st.tokens.size(), memorized_.count(continuation) ? hi_ : lo_);
    st.context_len = tokenize_words(prompt).size();
    return st;
}

Completion MockLookupScorer::complete(const std::string& prompt, std::size_t max_tokens) {
    (void)max_tokens;
    if (override_) return {*override_, false};
    auto instance = final_instance_text(prompt);
    if (!instance) return {" no", false};
    // One "Label:" belongs to the trailing instance; more means examples.
    bool has_examples = count_occurrences(prompt, "Label:") > 1;
    if (!has_examples) return {" no", false};
    return {memorized_.count(*instance) ? " yes" : " no", false};
}

struct MockNgramScorer::Impl {
    std::size_t order;
    std::size_t vocab_size = 0;
    // context (words joined by \x1f, empty for unigram) -> next-word counts
    std::unordered_map<std::string, std::unordered_map<std::string, std::uint64_t>> next_counts;
    std::unordered_map<std::string, std::uint64_t> context_totals;

    static std::string join_context(const std::vector<std::string>& words, std::size_t begin,
                                    std::size_t end) {
        std::string key;
        for (std::size_t i = begin; i < end; ++i) {
            if (i > begin) key.push_back('\x1f');
            key.append(words[i]);
        }
        return key;
    }

    double logprob(const std::vector<std::string>& context, const std::string& word) const {
        std::size_t level = std::min(order - 1, context.size());
        std::string key = join_context(context, context.size() - level, context.size());
        std::uint64_t joint = 0, total = 0;
        auto it = next_counts.find(key);
        if (it != next_counts.end()) {
            auto jt = it->second.find(word);
            if (jt != it->second.end()) joint = jt->second;
        }
        auto tt = context_totals.find(key);
        if (tt != context_totals.end()) total = tt->second;
        double p = (static_cast<double>(joint) + 1.0) /
                   (static_cast<double>(total) + static_cast<double>(vocab_size));
        return std::log(p);
    }
};

MockNgramScorer::MockNgramScorer(std::size_t order, const std::string& training_text)
    : impl_(std::make_shared<Impl>()) {
    if (order < 1) throw PreconditionError("ngram order must be >= 1");
    impl_->order = order;
    std::vector<std::string> words = tokenize_words(normalize(training_text));
    if (words.empty()) throw PreconditionError("ngram training corpus is empty");

    std::unordered_set<std::string> vocab(words.begin(), words.end());
    impl_->vocab_size = vocab.size();

    for (std::size_t i = 0; i < words.size(); ++i) {
        std::size_t max_level = std::min(order - 1, i);
        for (std::size_t level = 0; level <= max_level; ++level) {
            std::string key = Impl::join_context(words, i - level, i);
            impl_->next_counts[key][words[i]] += 1;
            impl_->context_totals[key] += 1;
        }
    }
}

ScoredText MockNgramScorer::score(const std::string& prompt, const std::string& continuation) {
    if (continuation.empty()) throw PreconditionError("continuation must be non-empty");
    std::vector<std::string> context = tokenize_words(prompt);
    ScoredText st;
    st.context_len = context.size();
    st.tokens = continuation_tokens(continuation);
    st.logprobs.reserve(st.tokens.size());
    for (const auto& word : st.tokens) {
        st.logprobs.push_back(impl_->logprob(context, word));
        context.push_back(word);
    }
    return st;
}

Completion MockNgramScorer::complete(const std::string&, std::size_t) {
    throw PreconditionError("mock ngram scorer does not support generation");
}

// ---------------------------------------------------------------------------

struct RemoteScorer::Impl {
    RemoteScorerConfig cfg;

    std::mutex mu;
    std::condition_variable cv;
    int in_flight = 0;

    std::mutex cassette_mu;
    std::unordered_map<std::string, json> cassette;
    bool cassette_loaded = false;

    void acquire() {
        std::unique_lock<std::mutex> lock(mu);
        cv.wait(lock, [&] { return in_flight < cfg.max_in_flight; });
        ++in_flight;
    }
    void release() {
        std::lock_guard<std::mutex> lock(mu);
        --in_flight;
        cv.notify_one();
    }

    void load_cassette() {
        std::lock_guard<std::mutex> lock(cassette_mu);
        if (cassette_loaded) return;
        cassette_loaded = true;
        if (cfg.cassette_path.empty()) return;
        std::ifstream in(cfg.cassette_path);
        if (!in) {
            if (cfg.cassette_mode == CassetteMode::Replay) {
                throw IoError("cannot open cassette " + cfg.cassette_path);
            }
            return;
        }
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("request_hash") || !j.contains("response")) {
                throw ProtocolError("malformed cassette line in " + cfg.cassette_path);
            }
            cassette[j["request_hash"].get<std::string>()] = j["response"];
        }
    }

    void append_cassette(const std::string& hash, const json& request, const json& response) {
        std::lock_guard<std::mutex> lock(cassette_mu);
        if (cassette.count(hash)) return;
        cassette[hash] = response;
        std::ofstream out(cfg.cassette_path, std::ios::app);
        if (!out) throw IoError("cannot append cassette " + cfg.cassette_path);
        json line;
        line["request_hash"] = hash;
        line["request"] = request;
        line["response"] = response;
        out << line.dump() << "\n";
    }

    std::string cache_file(const std::string& key) const {
        return (fs::path(cfg.cache_dir) / (key + ".json")).string();
    }

    std::optional<json> cache_get(const std::string& key) {
        if (cfg.cache_dir.empty()) return std::nullopt;
        std::ifstream in(cache_file(key));
        if (!in) return std::nullopt;
        json j = json::parse(in, nullptr, false);
        if (j.is_discarded()) return std::nullopt;
        return j;
    }

    void cache_put(const std::string& key, const json& value) {
        if (cfg.cache_dir.empty()) return;
        fs::create_directories(cfg.cache_dir);
        std::string tmp = cache_file(key) + ".tmp";
        {
            std::ofstream out(tmp, std::ios::trunc);
            out << value.dump();
        }
        fs::rename(tmp, cache_file(key));
    }

    json post(const std::string& route, const json& request, const std::string& hash) {
        load_cassette();
        if (cfg.cassette_mode == CassetteMode::Replay) {
            std::lock_guard<std::mutex> lock(cassette_mu);
            auto it = cassette.find(hash);
            if (it == cassette.end()) {
                throw ProtocolError("cassette miss for request " + hash);
            }
            return it->second;
        }

        acquire();
        struct Release {
            Impl* impl;
            ~Release() { impl->release(); }
        } release{this};

        const std::string body = request.dump();
        std::string response_body;
        std::string last_error;
        int last_status = 0;
        for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
            httplib::Client client(cfg.base_url);
            client.set_read_timeout(120, 0);
            auto res = client.Post(route, body, "application/json");
            if (res && res->status == 200) {
                response_body = res->body;
                last_error.clear();
                break;
            }
            if (res) {
                last_status = res->status;
                last_error = res->body;
            } else {
                last_status = 0;
                last_error = "transport error " + httplib::to_string(res.error());
            }
            if (attempt < cfg.max_retries) {
                std::this_thread::sleep_for(std::chrono::milliseconds(100 << attempt));
            }
        }
        if (!last_error.empty() || response_body.empty()) {
            throw RemoteError(last_status, last_error);
        }
        json parsed = json::parse(response_body, nullptr, false);
        if (parsed.is_discarded()) throw ProtocolError("non-JSON response from " + route);
        if (cfg.cassette_mode == CassetteMode::Record && !cfg.cassette_path.empty()) {
            append_cassette(hash, request, parsed);
        }
        return parsed;
    }
};

RemoteScorer::RemoteScorer(RemoteScorerConfig config) : impl_(new Impl) {
    if (config.max_in_flight < 1) config.max_in_flight = 1;
    if (config.max_retries < 0) config.max_retries = 0;
    impl_->cfg = std::move(config);
}

RemoteScorer::~RemoteScorer() { delete impl_; }

std::string RemoteScorer::id() const { return "remote:" + impl_->cfg.model; }

ScoredText RemoteScorer::score(const std::string& prompt, const std::string& continuation) {
    if (continuation.empty()) throw PreconditionError("continuation must be non-empty");
    std::string key =
        sha256_hex(impl_->cfg.model + '\x00' + prompt + '\x00' + continuation + '\x00' + "score");
    json response;
    if (auto cached = impl_->cache_get(key)) {
        response = *cached;
    } else {
        json request;
        request["model"] = impl_->cfg.model;
        request["prompt"] = prompt;
        request["continuation"] = continuation;
        response = impl_->post("/score", request, key);
        impl_->cache_put(key, response);
    }

    if (!response.contains("tokens") || !response["tokens"].is_array() ||
        !response.contains("logprobs") || !response["logprobs"].is_array()) {
        throw ProtocolError("score response missing tokens/logprobs");
    }
    ScoredText st;
    for (const auto& t : response["tokens"]) {
        if (!t.is_string()) throw ProtocolError("score response token is not a string");
        st.tokens.push_back(t.get<std::string>());
    }
    for (const auto& lp : response["logprobs"]) {
        if (!lp.is_number()) throw ProtocolError("score response logprob is not a number");
        double v = lp.get<double>();
        if (v > 0.0) throw ProtocolError("score response has positive logprob");
        st.logprobs.push_back(v);
    }
    if (st.tokens.size() != st.logprobs.size() || st.tokens.empty()) {
        throw ProtocolError("score response arity mismatch");
    }
    st.context_len = response.value("context_len", 0);
    return st;
}

Completion RemoteScorer::complete(const std::string& prompt, std::size_t max_tokens) {
    std::string key = sha256_hex(impl_->cfg.model + '\x00' + prompt + '\x00' +
                                 std::to_string(max_tokens) + '\x00' + "complete");
    json response;
    if (auto cached = impl_->cache_get(key)) {
        response = *cached;
    } else {
        json request;
        request["model"] = impl_->cfg.model;
        request["prompt"] = prompt;
        request["max_tokens"] = max_tokens;
        request["temperature"] = 0;
        response = impl_->post("/complete", request, key);
        impl_->cache_put(key, response);
    }
    if (!response.contains("text") || !response["text"].is_string()) {
        throw ProtocolError("complete response missing text");
    }
    return {response["text"].get<std::string>(), response.value("truncated", false)};
}

}  // namespace leakscan
