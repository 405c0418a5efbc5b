#include "leakscan/name_detector.hpp"

#include <chrono>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "leakscan/errors.hpp"
#include "leakscan/text.hpp"

namespace leakscan {

namespace {

inline bool is_core_byte(unsigned char c) {
    // UTF-8 continuation/lead bytes count as name content.
    if (c >= 0x80) return true;
    return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
}

struct TokenSpan {
    std::size_t core_start;
    std::size_t core_end;
    std::string core;
};

std::vector<TokenSpan> token_cores(const std::string& text) {
    std::vector<TokenSpan> out;
    const std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        while (i < n && text[i] == ' ') ++i;
        std::size_t start = i;
        while (i < n && text[i] != ' ') ++i;
        if (i == start) continue;
        std::size_t cs = start, ce = i;
        while (cs < ce && !is_core_byte(static_cast<unsigned char>(text[cs]))) ++cs;
        while (ce > cs && !is_core_byte(static_cast<unsigned char>(text[ce - 1]))) --ce;
        if (ce > cs) out.push_back({cs, ce, text.substr(cs, ce - cs)});
    }
    return out;
}

std::string strip_core(const std::string& word) {
    std::size_t cs = 0, ce = word.size();
    while (cs < ce && !is_core_byte(static_cast<unsigned char>(word[cs]))) ++cs;
    while (ce > cs && !is_core_byte(static_cast<unsigned char>(word[ce - 1]))) --ce;
    return word.substr(cs, ce - cs);
}

}  // namespace

GazetteerNameDetector::GazetteerNameDetector(std::vector<std::string> names)
    : names_(std::move(names)) {
    entry_tokens_.reserve(names_.size());
    for (std::size_t idx = 0; idx < names_.size(); ++idx) {
        std::vector<std::string> cores;
        for (const auto& word : tokenize_words(names_[idx])) {
            std::string core = strip_core(word);
            if (!core.empty()) cores.push_back(std::move(core));
        }
        entry_tokens_.push_back(cores);
        if (!cores.empty()) by_first_[cores.front()].push_back(idx);
    }
}

GazetteerNameDetector GazetteerNameDetector::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open gazetteer " + path);
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (!line.empty()) names.push_back(line);
    }
    return GazetteerNameDetector(std::move(names));
}

std::vector<NameSpan> GazetteerNameDetector::detect(const std::string& text) {
    std::vector<NameSpan> spans;
    std::vector<TokenSpan> tokens = token_cores(text);
    std::size_t i = 0;
    while (i < tokens.size()) {
        auto it = by_first_.find(tokens[i].core);
        std::size_t best_len = 0;
        if (it != by_first_.end()) {
            for (std::size_t idx : it->second) {
                const auto& entry = entry_tokens_[idx];
                if (entry.empty() || entry.size() > tokens.size() - i) continue;
                bool all = true;
                for (std::size_t k = 1; k < entry.size(); ++k) {
                    if (tokens[i + k].core != entry[k]) {
                        all = false;
                        break;
                    }
                }
                if (all && entry.size() > best_len) best_len = entry.size();
            }
        }
        if (best_len > 0) {
            spans.push_back({tokens[i].core_start, tokens[i + best_len - 1].core_end});
            i += best_len;
        } else {
            ++i;
        }
    }
    return spans;
}

struct RemoteNameDetector::Impl {
    std::string base_url;
    int max_in_flight;
    int max_retries;
    std::mutex mu;
    std::condition_variable cv;
    int in_flight = 0;
};

RemoteNameDetector::RemoteNameDetector(std::string base_url, int max_in_flight, int max_retries)
    : impl_(new Impl) {
    impl_->base_url = std::move(base_url);
    impl_->max_in_flight = max_in_flight < 1 ? 1 : max_in_flight;
    impl_->max_retries = max_retries < 0 ? 0 : max_retries;
}

RemoteNameDetector::~RemoteNameDetector() { delete impl_; }

std::vector<NameSpan> RemoteNameDetector::detect(const std::string& text) {
    {
        std::unique_lock<std::mutex> lock(impl_->mu);
        impl_->cv.wait(lock, [&] { return impl_->in_flight < impl_->max_in_flight; });
        ++impl_->in_flight;
    }
    struct Release {
        Impl* impl;
        ~Release() {
            std::lock_guard<std::mutex> lock(impl->mu);
            --impl->in_flight;
            impl->cv.notify_one();
        }
    } release{impl_};

    nlohmann::json request;
    request["text"] = text;
    const std::string body = request.dump();

    std::string response_body;
    int attempts = impl_->max_retries + 1;
    std::string last_error;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        httplib::Client client(impl_->base_url);
        client.set_read_timeout(30, 0);
        auto res = client.Post("/ner", body, "application/json");
        if (res && res->status == 200) {
            response_body = res->body;
            last_error.clear();
            break;
        }
        last_error = res ? "status " + std::to_string(res->status)
                         : "transport error " + httplib::to_string(res.error());
        if (attempt + 1 < attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(50 << attempt));
        }
    }
    if (!last_error.empty()) {
        throw BackendError("NER service " + impl_->base_url + ": " + last_error);
    }

    nlohmann::json parsed = nlohmann::json::parse(response_body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("entities") || !parsed["entities"].is_array()) {
        throw BackendError("NER service returned malformed response");
    }
    std::vector<NameSpan> spans;
    for (const auto& entity : parsed["entities"]) {
        if (entity.value("label", "") != "PERSON") continue;
        if (!entity.contains("start") || !entity.contains("end")) continue;
        auto start = entity["start"].get<std::int64_t>();
        auto end = entity["end"].get<std::int64_t>();
        if (start < 0 || end <= start || static_cast<std::size_t>(end) > text.size()) continue;
        spans.push_back({static_cast<std::size_t>(start), static_cast<std::size_t>(end)});
    }
    return spans;
}

}  // namespace leakscan
