#include "leakscan/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "leakscan/errors.hpp"
#include "leakscan/sha256.hpp"
#include "leakscan/text.hpp"

namespace leakscan {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return s.substr(a, b - a);
}

std::string interpolate_env(const std::string& s) {
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '$' && i + 1 < s.size() && s[i + 1] == '{') {
            std::size_t close = s.find('}', i + 2);
            if (close == std::string::npos) throw ConfigError("unterminated ${ in config value");
            std::string name = s.substr(i + 2, close - i - 2);
            const char* value = std::getenv(name.c_str());
            if (value) out += value;
            i = close + 1;
        } else {
            out.push_back(s[i++]);
        }
    }
    return out;
}

// Parses one scalar token: quoted string, bare word, or number.
std::string parse_scalar(const std::string& raw) {
    std::string v = trim(raw);
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
        std::string inner;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            if (v[i] == '\\' && i + 2 < v.size() && (v[i + 1] == '"' || v[i + 1] == '\\')) {
                inner.push_back(v[i + 1]);
                ++i;
            } else {
                inner.push_back(v[i]);
            }
        }
        return interpolate_env(inner);
    }
    return interpolate_env(v);
}

// Splits an array body on commas outside quotes.
std::vector<std::string> split_array(const std::string& body) {
    std::vector<std::string> items;
    std::string current;
    bool in_quotes = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
        char c = body[i];
        if (c == '"' && (i == 0 || body[i - 1] != '\\')) in_quotes = !in_quotes;
        if (c == ',' && !in_quotes) {
            std::string item = trim(current);
            if (!item.empty()) items.push_back(parse_scalar(item));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    std::string item = trim(current);
    if (!item.empty()) items.push_back(parse_scalar(item));
    return items;
}

std::string strip_comment(const std::string& line) {
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_quotes = !in_quotes;
        if (line[i] == '#' && !in_quotes) return line.substr(0, i);
    }
    return line;
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str());
}

ConfigFile ConfigFile::parse_string(const std::string& content) {
    ConfigFile cfg;
    std::istringstream in(content);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        }
        std::string full_key = section.empty() ? key : section + "." + key;
        if (!value.empty() && value.front() == '[') {
            if (value.back() != ']') {
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated array");
            }
            cfg.arrays_[full_key] = split_array(value.substr(1, value.size() - 2));
        } else {
            cfg.values_[full_key] = parse_scalar(value);
        }
    }
    return cfg;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    std::string full = section.empty() ? key : section + "." + key;
    return values_.count(full) > 0 || arrays_.count(full) > 0;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
    std::string full = section.empty() ? key : section + "." + key;
    auto it = values_.find(full);
    return it == values_.end() ? fallback : it->second;
}

std::int64_t ConfigFile::get_int(const std::string& section, const std::string& key,
                                 std::int64_t fallback) const {
    std::string full = section.empty() ? key : section + "." + key;
    auto it = values_.find(full);
    if (it == values_.end()) return fallback;
    try {
        return std::stoll(it->second);
    } catch (const std::exception&) {
        throw ConfigError(full + " is not an integer: " + it->second);
    }
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
    std::string full = section.empty() ? key : section + "." + key;
    auto it = values_.find(full);
    if (it == values_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ConfigError(full + " is not a number: " + it->second);
    }
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
    std::string full = section.empty() ? key : section + "." + key;
    auto it = values_.find(full);
    if (it == values_.end()) return fallback;
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw ConfigError(full + " is not a boolean: " + it->second);
}

std::vector<std::string> ConfigFile::get_string_array(const std::string& section,
                                                      const std::string& key) const {
    std::string full = section.empty() ? key : section + "." + key;
    auto it = arrays_.find(full);
    if (it != arrays_.end()) return it->second;
    auto sv = values_.find(full);
    if (sv != values_.end() && !sv->second.empty()) return {sv->second};
    return {};
}

std::string ConfigFile::canonical() const {
    std::string out;
    for (const auto& [key, value] : values_) {
        out += key + "=" + value + "\n";
    }
    for (const auto& [key, items] : arrays_) {
        out += key + "=[";
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i) out += ",";
            out += items[i];
        }
        out += "]\n";
    }
    return out;
}

std::string ConfigFile::digest() const { return sha256_hex(canonical()); }

AuditConfig AuditConfig::from_file(const std::string& path) {
    return from_config(ConfigFile::parse_file(path));
}

AuditConfig AuditConfig::from_config(const ConfigFile& file) {
    AuditConfig cfg;
    cfg.digest = file.digest();
    cfg.root_seed = static_cast<std::uint64_t>(file.get_int("", "root_seed", 0));
    cfg.out_dir = file.get_string("", "out_dir", "out");
    cfg.cache_dir = file.get_string("", "cache_dir", "");
    cfg.jobs = static_cast<int>(file.get_int("", "jobs", 1));

    cfg.corpus_paths = file.get_string_array("corpus", "paths");
    cfg.corpus_format = file.get_string("corpus", "format", "jsonl");

    cfg.sample_size = static_cast<std::uint64_t>(file.get_int("sample", "size", 5'000'000));
    if (file.has("sample", "seed")) {
        cfg.sample_seed = static_cast<std::uint64_t>(file.get_int("sample", "seed", 0));
    }

    cfg.index_w = static_cast<std::uint32_t>(file.get_int("index", "w", 300));
    cfg.benchmark_store = file.get_string("index", "benchmark_store", "");
    cfg.copyright_store = file.get_string("index", "copyright_store", "");
    cfg.index_mmap = file.get_bool("index", "mmap", false);

    cfg.gazetteer = file.get_string("pii", "gazetteer", "");
    cfg.ner_url = file.get_string("pii", "ner_url", "");
    if (cfg.ner_url.empty()) {
        const char* env = std::getenv("LEAKSCAN_NER_URL");
        if (env) cfg.ner_url = env;
    }
    cfg.allow_degraded = file.get_bool("pii", "allow_degraded", false);
    cfg.pii_categories = file.get_string_array("pii", "categories");

    cfg.scorer.kind = file.get_string("scorer", "kind", "mock_lookup");
    cfg.scorer.url = file.get_string("scorer", "url", "");
    if (cfg.scorer.url.empty()) {
        const char* env = std::getenv("LEAKSCAN_SCORER_URL");
        if (env) cfg.scorer.url = env;
    }
    cfg.scorer.model = file.get_string("scorer", "model", "");
    cfg.scorer.cache = file.get_bool("scorer", "cache", true);
    cfg.scorer.cassette = file.get_string("scorer", "cassette", "");
    std::string mode = file.get_string("scorer", "cassette_mode", "off");
    if (mode == "off") {
        cfg.scorer.cassette_mode = CassetteMode::Off;
    } else if (mode == "record") {
        cfg.scorer.cassette_mode = CassetteMode::Record;
    } else if (mode == "replay") {
        cfg.scorer.cassette_mode = CassetteMode::Replay;
    } else {
        throw ConfigError("scorer.cassette_mode must be off|record|replay");
    }
    cfg.scorer.max_in_flight = static_cast<int>(file.get_int("scorer", "max_in_flight", 4));
    cfg.scorer.memorized_file = file.get_string("scorer", "memorized_file", "");
    cfg.scorer.hi = file.get_double("scorer", "hi", -0.1);
    cfg.scorer.lo = file.get_double("scorer", "lo", -5.0);
    cfg.scorer.order = static_cast<std::size_t>(file.get_int("scorer", "order", 2));
    cfg.scorer.corpus_file = file.get_string("scorer", "corpus_file", "");

    if (file.has("detect", "methods")) {
        cfg.detect_methods = file.get_string_array("detect", "methods");
    }
    cfg.detect_ensemble = file.get_bool("detect", "ensemble", true);
    cfg.k_percent = file.get_double("detect", "k_percent", 20.0);
    std::string tie = file.get_string("detect", "tie_break", "non_leaked");
    if (tie == "non_leaked") {
        cfg.tie_break = TieBreak::NonLeaked;
    } else if (tie == "leaked") {
        cfg.tie_break = TieBreak::Leaked;
    } else {
        throw ConfigError("detect.tie_break must be non_leaked|leaked");
    }
    cfg.shots = static_cast<std::size_t>(file.get_int("detect", "shots", 16));
    cfg.shuffle_seed = static_cast<std::uint64_t>(
        file.get_int("detect", "shuffle_seed", static_cast<std::int64_t>(cfg.root_seed)));
    cfg.examples_file = file.get_string("detect", "examples_file", "");
    cfg.calibration_fraction = file.get_double("detect", "calibration_fraction", 0.2);
    if (file.has("detect", "target_model_name")) {
        cfg.target_model_name = file.get_string("detect", "target_model_name", "");
    }

    cfg.eval_file = file.get_string("dataset", "eval_file", "");
    cfg.denied_file = file.get_string("output_rate", "denied_file", "");
    return cfg;
}

std::unique_ptr<Scorer> make_scorer(const ScorerSpec& spec, const std::string& cache_dir) {
    if (spec.kind == "mock_lookup") {
        std::unordered_set<std::string> memorized;
        if (!spec.memorized_file.empty()) {
            std::ifstream in(spec.memorized_file);
            if (!in) throw IoError("cannot open memorized file " + spec.memorized_file);
            std::string line;
            while (std::getline(in, line)) {
                while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) {
                    line.pop_back();
                }
                if (!line.empty()) memorized.insert(line);
            }
        }
        return std::make_unique<MockLookupScorer>(std::move(memorized), spec.hi, spec.lo);
    }
    if (spec.kind == "mock_ngram") {
        if (spec.corpus_file.empty()) {
            throw ConfigError("mock_ngram scorer requires scorer.corpus_file");
        }
        std::ifstream in(spec.corpus_file);
        if (!in) throw IoError("cannot open ngram corpus " + spec.corpus_file);
        std::stringstream buffer;
        buffer << in.rdbuf();
        return std::make_unique<MockNgramScorer>(spec.order, buffer.str());
    }
    if (spec.kind == "remote") {
        if (spec.url.empty()) {
            throw ConfigError("remote scorer requires scorer.url or LEAKSCAN_SCORER_URL");
        }
        RemoteScorerConfig remote;
        remote.base_url = spec.url;
        remote.model = spec.model;
        remote.cache_dir = spec.cache ? cache_dir : "";
        remote.cassette_path = spec.cassette;
        remote.cassette_mode = spec.cassette_mode;
        remote.max_in_flight = spec.max_in_flight;
        return std::make_unique<RemoteScorer>(std::move(remote));
    }
    throw ConfigError("unknown scorer kind: " + spec.kind);
}

std::vector<std::pair<std::string, bool>> load_fewshot_examples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open examples file " + path);
    std::vector<std::pair<std::string, bool>> examples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("text") || !j.contains("label")) {
            throw FormatError(line_no, "examples file needs {text, label} records");
        }
        std::string label = j["label"].get<std::string>();
        examples.push_back({j["text"].get<std::string>(), label == "leaked"});
    }
    return examples;
}

SelfDetectConfig selfdetect_config_from(const AuditConfig& cfg) {
    SelfDetectConfig sd;
    sd.n_shots = cfg.shots;
    sd.shuffle_seed = cfg.shuffle_seed;
    sd.target_model_name = cfg.target_model_name;
    if (!cfg.examples_file.empty()) sd.examples = load_fewshot_examples(cfg.examples_file);
    return sd;
}

}  // namespace leakscan
