#include "leakscan/ingest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "json.hpp"
#include "leakscan/errors.hpp"
#include "leakscan/text.hpp"

namespace leakscan {

namespace fs = std::filesystem;
using nlohmann::json;

IngestFormat ingest_format_from_label(const std::string& label) {
    if (label == "jsonl") return IngestFormat::Jsonl;
    if (label == "plain_dir") return IngestFormat::PlainDir;
    throw ConfigError("unknown ingest format: " + label);
}

std::string IngestSummary::to_json() const {
    json j;
    j["total"] = total;
    j["skipped"] = skipped;
    j["errors"] = json::array();
    for (const auto& e : errors) {
        j["errors"].push_back({{"record", e.record}, {"reason", e.reason}});
    }
    return j.dump();
}

namespace {

void skip(IngestSummary& summary, std::size_t record, std::string reason) {
    ++summary.skipped;
    summary.errors.push_back({record, std::move(reason)});
}

void ingest_jsonl(const std::string& path, const DocumentSink& sink, IngestSummary& summary,
                  std::unordered_set<std::string>& seen_ids) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    std::size_t record = 0;
    while (std::getline(in, line)) {
        ++record;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            skip(summary, record, path + ": malformed json");
            continue;
        }
        if (!j.contains("id") || !j["id"].is_string() || !j.contains("source") ||
            !j["source"].is_string() || !j.contains("text") || !j["text"].is_string()) {
            skip(summary, record, path + ": missing id/source/text");
            continue;
        }
        std::string id = j["id"].get<std::string>();
        std::string source = j["source"].get<std::string>();
        std::string text = j["text"].get<std::string>();
        if (!is_valid_utf8(text)) {
            skip(summary, record, path + ": invalid utf-8 in text");
            continue;
        }
        if (!seen_ids.insert(id).second) {
            skip(summary, record, path + ": duplicate doc id " + id);
            continue;
        }
        Source src = source_from_label(source);
        sink(Document::make(std::move(id), src, text, src == Source::Other ? source : ""));
        ++summary.total;
    }
}

void ingest_plain_dir(const std::string& path, const DocumentSink& sink, IngestSummary& summary,
                      std::unordered_set<std::string>& seen_ids) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::size_t record = 0;
    for (const auto& file : files) {
        ++record;
        std::ifstream in(file, std::ios::binary);
        if (!in) {
            skip(summary, record, file.string() + ": cannot open");
            continue;
        }
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (!is_valid_utf8(text)) {
            skip(summary, record, file.string() + ": invalid utf-8");
            continue;
        }
        std::string id = file.filename().string();
        if (!seen_ids.insert(id).second) {
            skip(summary, record, file.string() + ": duplicate doc id " + id);
            continue;
        }
        sink(Document::make(std::move(id), Source::Other, text, "plain"));
        ++summary.total;
    }
}

}  // namespace

IngestSummary ingest(const std::string& path, IngestFormat format, const DocumentSink& sink) {
    IngestSummary summary;
    std::unordered_set<std::string> seen_ids;
    if (format == IngestFormat::Jsonl) {
        ingest_jsonl(path, sink, summary, seen_ids);
    } else {
        if (!fs::is_directory(path)) throw IoError(path + " is not a directory");
        ingest_plain_dir(path, sink, summary, seen_ids);
    }
    return summary;
}

IngestSummary ingest_many(const std::vector<std::string>& paths, IngestFormat format,
                          const DocumentSink& sink) {
    IngestSummary merged;
    std::unordered_set<std::string> seen_ids;
    for (const auto& path : paths) {
        IngestSummary one;
        if (format == IngestFormat::Jsonl) {
            ingest_jsonl(path, sink, one, seen_ids);
        } else {
            if (!fs::is_directory(path)) throw IoError(path + " is not a directory");
            ingest_plain_dir(path, sink, one, seen_ids);
        }
        merged.total += one.total;
        merged.skipped += one.skipped;
        merged.errors.insert(merged.errors.end(), one.errors.begin(), one.errors.end());
    }
    return merged;
}

std::vector<Document> ingest_all(const std::string& path, IngestFormat format,
                                 IngestSummary* summary) {
    std::vector<Document> docs;
    IngestSummary s = ingest(path, format, [&](Document&& d) { docs.push_back(std::move(d)); });
    if (summary) *summary = std::move(s);
    return docs;
}

std::string document_to_jsonl(const Document& doc) {
    json j;
    j["id"] = doc.doc_id;
    j["source"] = source_label(doc.source, doc.other_label);
    j["text"] = doc.raw_text;
    return j.dump();
}

}  // namespace leakscan
