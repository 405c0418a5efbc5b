#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace leakscan {

enum class Source {
    C4,
    CommonCrawl,
    Pile,
    GitHub,
    Wikipedia,
    Books,
    Papers,
    Conversations,
    Other,
};

Source source_from_label(const std::string& label);
std::string source_label(Source source, const std::string& other_label = "");

// One unit of (pre-)training text. Immutable after construction; word_tokens
// is always the normalize+tokenize derivation of raw_text.
struct Document {
    std::string doc_id;
    Source source = Source::Other;
    std::string other_label;  // set when source == Other
    std::string raw_text;     // normalized form
    std::vector<std::string> word_tokens;

    static Document make(std::string doc_id, Source source, const std::string& raw_text,
                         std::string other_label = "");
};

struct SampleConfig {
    // The paper samples 5 million instances per corpus; that is the default.
    std::uint64_t sample_size = 5'000'000;
    std::uint64_t seed = 0;
};

}  // namespace leakscan
