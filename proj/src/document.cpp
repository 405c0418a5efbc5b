#include "leakscan/document.hpp"

#include "leakscan/text.hpp"

namespace leakscan {

Source source_from_label(const std::string& label) {
    if (label == "C4" || label == "c4") return Source::C4;
    if (label == "CommonCrawl" || label == "common_crawl") return Source::CommonCrawl;
    if (label == "Pile" || label == "pile" || label == "The Pile") return Source::Pile;
    if (label == "GitHub" || label == "github") return Source::GitHub;
    if (label == "Wikipedia" || label == "wikipedia") return Source::Wikipedia;
    if (label == "Books" || label == "books") return Source::Books;
    if (label == "Papers" || label == "papers") return Source::Papers;
    if (label == "Conversations" || label == "conversations") return Source::Conversations;
    return Source::Other;
}

std::string source_label(Source source, const std::string& other_label) {
    switch (source) {
        case Source::C4: return "C4";
        case Source::CommonCrawl: return "CommonCrawl";
        case Source::Pile: return "Pile";
        case Source::GitHub: return "GitHub";
        case Source::Wikipedia: return "Wikipedia";
        case Source::Books: return "Books";
        case Source::Papers: return "Papers";
        case Source::Conversations: return "Conversations";
        case Source::Other: return other_label.empty() ? "Other" : other_label;
    }
    return "Other";
}

Document Document::make(std::string doc_id, Source source, const std::string& raw_text,
                        std::string other_label) {
    Document d;
    d.doc_id = std::move(doc_id);
    d.source = source;
    d.other_label = std::move(other_label);
    d.raw_text = normalize(raw_text);
    d.word_tokens = tokenize_words(d.raw_text);
    return d;
}

}  // namespace leakscan
