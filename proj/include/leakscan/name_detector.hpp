#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace leakscan {

struct NameSpan {
    std::size_t start = 0;  // byte offsets
    std::size_t end = 0;
};

// Person-name detection contract. The gazetteer backend is deterministic;
// the remote backend speaks the NER service protocol (POST /ner).
class NameDetector {
public:
    virtual ~NameDetector() = default;
    virtual std::vector<NameSpan> detect(const std::string& text) = 0;
    virtual std::string kind() const = 0;
};

// Exact word-sequence matching against a configurable name list. Tokens are
// compared after stripping punctuation from both ends, so "Michel," still
// matches the entry "Michel". Multi-word entries match consecutive tokens.
class GazetteerNameDetector : public NameDetector {
public:
    explicit GazetteerNameDetector(std::vector<std::string> names);
    static GazetteerNameDetector from_file(const std::string& path);

    std::vector<NameSpan> detect(const std::string& text) override;
    std::string kind() const override { return "gazetteer"; }

    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
    std::vector<std::vector<std::string>> entry_tokens_;
    // first token core -> indices of entries starting with it
    std::unordered_map<std::string, std::vector<std::size_t>> by_first_;
};

// HTTP client for a PERSON-entity NER service. Offsets in the response are
// byte offsets into the request text; non-PERSON labels are ignored.
// Requests are idempotent and retried; in-flight concurrency is bounded.
class RemoteNameDetector : public NameDetector {
public:
    explicit RemoteNameDetector(std::string base_url, int max_in_flight = 8, int max_retries = 2);
    ~RemoteNameDetector() override;

    std::vector<NameSpan> detect(const std::string& text) override;
    std::string kind() const override { return "remote"; }

private:
    struct Impl;
    Impl* impl_;
};

}  // namespace leakscan
