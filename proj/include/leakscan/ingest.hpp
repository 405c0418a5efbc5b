#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "leakscan/document.hpp"

namespace leakscan {

enum class IngestFormat { Jsonl, PlainDir };

IngestFormat ingest_format_from_label(const std::string& label);

struct IngestError {
    std::size_t record = 0;  // 1-based record number within its input
    std::string reason;
};

struct IngestSummary {
    std::size_t total = 0;    // documents yielded
    std::size_t skipped = 0;  // invalid records dropped
    std::vector<IngestError> errors;

    std::string to_json() const;
};

using DocumentSink = std::function<void(Document&&)>;

// Streams Documents from one input in deterministic (file, record) order.
// Invalid records (malformed JSON, missing fields, invalid UTF-8, duplicate
// ids within this call) are skipped and recorded in the summary, never fatal.
// Throws IoError if the path cannot be read at all.
IngestSummary ingest(const std::string& path, IngestFormat format, const DocumentSink& sink);

// Multi-input variant; inputs are processed in the order given and the
// summary is merged. Record numbers restart per input; reasons carry the path.
IngestSummary ingest_many(const std::vector<std::string>& paths, IngestFormat format,
                          const DocumentSink& sink);

std::vector<Document> ingest_all(const std::string& path, IngestFormat format,
                                 IngestSummary* summary = nullptr);

// Document jsonl record {"id":…,"source":…,"text":…} used by every
// subcommand that passes documents between stages.
std::string document_to_jsonl(const Document& doc);

}  // namespace leakscan
