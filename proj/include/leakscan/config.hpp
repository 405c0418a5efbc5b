#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "leakscan/detectors.hpp"
#include "leakscan/pii.hpp"
#include "leakscan/scorer.hpp"

namespace leakscan {

// Minimal TOML-style config file: [section] headers, key = value lines,
// strings, integers, floats, booleans and flat arrays. ${VAR} inside strings
// interpolates environment variables.
class ConfigFile {
public:
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_string(const std::string& content);

    bool has(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback = "") const;
    std::int64_t get_int(const std::string& section, const std::string& key,
                         std::int64_t fallback = 0) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback = 0.0) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback = false) const;
    std::vector<std::string> get_string_array(const std::string& section,
                                              const std::string& key) const;

    // Canonical serialization of the resolved config; its SHA-256 is the
    // config digest embedded in every report.
    std::string canonical() const;
    std::string digest() const;

private:
    std::map<std::string, std::string> values_;          // "section.key" -> raw scalar
    std::map<std::string, std::vector<std::string>> arrays_;
};

struct ScorerSpec {
    std::string kind = "mock_lookup";  // mock_lookup | mock_ngram | remote
    // remote
    std::string url;
    std::string model;
    bool cache = true;
    std::string cassette;
    CassetteMode cassette_mode = CassetteMode::Off;
    int max_in_flight = 4;
    // mock_lookup
    std::string memorized_file;
    double hi = -0.1;
    double lo = -5.0;
    // mock_ngram
    std::size_t order = 2;
    std::string corpus_file;
};

// Declarative audit configuration shared by the subcommands.
struct AuditConfig {
    std::string digest;
    std::uint64_t root_seed = 0;
    std::string out_dir = "out";
    std::string cache_dir;
    int jobs = 1;

    std::vector<std::string> corpus_paths;
    std::string corpus_format = "jsonl";

    std::uint64_t sample_size = 5'000'000;
    std::optional<std::uint64_t> sample_seed;  // defaults to root_seed

    std::uint32_t index_w = 300;
    std::string benchmark_store;
    std::string copyright_store;
    bool index_mmap = false;

    std::string gazetteer;
    std::string ner_url;
    bool allow_degraded = false;
    std::vector<std::string> pii_categories;  // empty = all

    ScorerSpec scorer;

    std::vector<std::string> detect_methods = {"loss", "pplzlib", "mink", "selfdetect"};
    bool detect_ensemble = true;
    double k_percent = 20.0;
    TieBreak tie_break = TieBreak::NonLeaked;
    std::size_t shots = 16;
    std::uint64_t shuffle_seed = 0;
    std::string examples_file;
    double calibration_fraction = 0.2;
    std::optional<std::string> target_model_name;

    std::string eval_file;
    std::string denied_file;

    static AuditConfig from_file(const std::string& path);
    static AuditConfig from_config(const ConfigFile& file);
};

// Builds the configured scorer; memorized/corpus files are loaded here.
std::unique_ptr<Scorer> make_scorer(const ScorerSpec& spec, const std::string& cache_dir);

// Few-shot example file: jsonl of {"text":…,"label":"leaked"|"non_leaked"}.
std::vector<std::pair<std::string, bool>> load_fewshot_examples(const std::string& path);

SelfDetectConfig selfdetect_config_from(const AuditConfig& cfg);

}  // namespace leakscan
