// leakscan: corpus-audit CLI measuring leakage, output, and detection rates
// for personal information, copyrighted texts, and benchmark data.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "leakscan/config.hpp"
#include "leakscan/detectors.hpp"
#include "leakscan/errors.hpp"
#include "leakscan/harness.hpp"
#include "leakscan/ingest.hpp"
#include "leakscan/match_index.hpp"
#include "leakscan/parallel.hpp"
#include "leakscan/pii.hpp"
#include "leakscan/report.hpp"
#include "leakscan/rng.hpp"
#include "leakscan/sampling.hpp"
#include "leakscan/scorer.hpp"
#include "leakscan/sha256.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace leakscan;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string out_dir;
    int jobs = 0;  // 0 = config / default
    bool dry_run = false;
};

AuditConfig load_config(const GlobalOptions& opts, bool required) {
    AuditConfig cfg;
    if (!opts.config_path.empty()) {
        cfg = AuditConfig::from_file(opts.config_path);
    } else if (required) {
        throw ConfigError("this subcommand requires --config");
    }
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    if (opts.jobs > 0) cfg.jobs = opts.jobs;
    if (cfg.jobs < 1) cfg.jobs = 1;
    return cfg;
}

void require_exists(const std::string& path, const std::string& what) {
    if (path.empty()) throw ConfigError(what + " is not configured");
    if (!fs::exists(path)) throw ConfigError(what + " does not exist: " + path);
}

std::shared_ptr<NameDetector> make_name_detector(const AuditConfig& cfg) {
    if (!cfg.gazetteer.empty()) {
        require_exists(cfg.gazetteer, "pii.gazetteer");
        return std::make_shared<GazetteerNameDetector>(
            GazetteerNameDetector::from_file(cfg.gazetteer));
    }
    if (!cfg.ner_url.empty()) {
        return std::make_shared<RemoteNameDetector>(cfg.ner_url);
    }
    return nullptr;
}

PiiScanner make_pii_scanner(const AuditConfig& cfg) {
    PiiScanner::Options options;
    options.allow_degraded = cfg.allow_degraded;
    for (const auto& label : cfg.pii_categories) {
        options.active.insert(pii_category_from_label(label));
    }
    return PiiScanner(options, make_name_detector(cfg));
}

std::vector<Document> read_documents(const std::vector<std::string>& paths,
                                     const std::string& format, IngestSummary* summary) {
    std::vector<Document> docs;
    IngestSummary merged = ingest_many(paths, ingest_format_from_label(format),
                                       [&](Document&& d) { docs.push_back(std::move(d)); });
    if (summary) *summary = std::move(merged);
    return docs;
}

std::vector<EvalInstance> read_instances(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open instances file " + path);
    std::vector<EvalInstance> instances;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) instances.push_back(eval_instance_from_jsonl(line));
    }
    return instances;
}

std::vector<RawRefRecord> read_ref_records(const std::vector<std::string>& paths) {
    std::vector<RawRefRecord> records;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open " + path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("id")) {
                throw FormatError(line_no, path + ": store records need {id, text|fields}");
            }
            RawRefRecord record;
            record.id = j["id"].get<std::string>();
            if (j.contains("fields") && j["fields"].is_object()) {
                // std::map ordering keeps field traversal deterministic
                std::map<std::string, std::string> fields = j["fields"];
                for (auto& [name, text] : fields) record.fields.push_back({name, text});
            } else if (j.contains("text") && j["text"].is_string()) {
                record.fields.push_back({"", j["text"].get<std::string>()});
            } else {
                throw FormatError(line_no, path + ": store records need text or fields");
            }
            records.push_back(std::move(record));
        }
    }
    return records;
}

struct ScanOutcome {
    std::vector<LeakRecord> records;
    std::size_t docs_scanned = 0;
    std::size_t bytes_scanned = 0;
};

ScanOutcome scan_pii_docs(const std::vector<Document>& docs, const PiiScanner& scanner, int jobs) {
    ScanOutcome outcome;
    outcome.docs_scanned = docs.size();
    std::vector<std::vector<PiiMatch>> results(docs.size());
    parallel_for_indexed(docs.size(), jobs, [&](std::size_t i) {
        results[i] = scanner.scan(docs[i]);
    });
    for (std::size_t i = 0; i < docs.size(); ++i) {
        outcome.bytes_scanned += docs[i].raw_text.size();
        if (is_pi_leak(results[i])) {
            outcome.records.push_back(LeakRecord::pi(docs[i].doc_id, std::move(results[i])));
        }
    }
    return outcome;
}

ScanOutcome scan_contamination_docs(const std::vector<Document>& docs,
                                    const FingerprintIndex& index, LeakKind kind, int jobs) {
    ScanOutcome outcome;
    outcome.docs_scanned = docs.size();
    std::vector<std::vector<MatchWindow>> results(docs.size());
    parallel_for_indexed(docs.size(), jobs, [&](std::size_t i) {
        results[i] = index.find_leaks(docs[i]);
    });
    for (std::size_t i = 0; i < docs.size(); ++i) {
        outcome.bytes_scanned += docs[i].raw_text.size();
        if (!results[i].empty()) {
            outcome.records.push_back(
                LeakRecord::windows(docs[i].doc_id, kind, std::move(results[i])));
        }
    }
    return outcome;
}

std::string jsonl_of_records(const std::vector<LeakRecord>& records) {
    std::string out;
    for (const auto& r : records) out += leak_record_to_jsonl(r) + "\n";
    return out;
}

// -- subcommand bodies ------------------------------------------------------

int cmd_ingest(const GlobalOptions& opts, const std::vector<std::string>& inputs,
               const std::string& format) {
    std::string out_dir = opts.out_dir.empty() ? "out" : opts.out_dir;
    if (opts.dry_run) {
        std::cout << "plan: ingest " << inputs.size() << " input(s) as " << format << " into "
                  << out_dir << "\n";
        return 0;
    }
    std::string docs_path = (fs::path(out_dir) / "docs.jsonl").string();
    fs::create_directories(out_dir);
    std::ofstream docs_out(docs_path, std::ios::trunc);
    if (!docs_out) throw IoError("cannot write " + docs_path);
    IngestSummary summary =
        ingest_many(inputs, ingest_format_from_label(format),
                    [&](Document&& d) { docs_out << document_to_jsonl(d) << "\n"; });
    docs_out.close();
    write_text_file((fs::path(out_dir) / "ingest_summary.json").string(),
                    summary.to_json() + "\n");
    std::cout << "ingested " << summary.total << " documents, skipped " << summary.skipped << "\n";
    return 0;
}

int cmd_sample(const GlobalOptions& opts, const std::vector<std::string>& inputs,
               const std::string& format, std::uint64_t size, std::uint64_t seed,
               const std::string& out_file) {
    if (opts.dry_run) {
        std::cout << "plan: reservoir-sample " << size << " docs (seed " << seed << ") from "
                  << inputs.size() << " input(s) to " << out_file << "\n";
        return 0;
    }
    ReservoirSampler<Document> sampler({size, seed});
    ingest_many(inputs, ingest_format_from_label(format),
                [&](Document&& d) { sampler.feed(std::move(d)); });
    std::vector<Document> sampled = sampler.finish();
    std::string out;
    for (const auto& d : sampled) out += document_to_jsonl(d) + "\n";
    write_text_file(out_file, out);
    std::cout << "sampled " << sampled.size() << " of " << sampler.seen() << " documents\n";
    return 0;
}

int cmd_index_build(const GlobalOptions& opts, const std::vector<std::string>& inputs,
                    const std::string& store, std::uint32_t w, const std::string& out_file) {
    if (opts.dry_run) {
        std::cout << "plan: build " << store << " store (W=" << w << ") from " << inputs.size()
                  << " input(s) to " << out_file << "\n";
        return 0;
    }
    IndexConfig cfg;
    cfg.w = w;
    cfg.store = store_kind_from_label(store);
    FingerprintIndex index = build_store(read_ref_records(inputs), cfg);
    index.save(out_file);
    std::cout << "indexed " << index.entry_count() << " entries (" << index.window_count()
              << " windows), dropped " << index.dropped_count() << " short entries\n";
    return 0;
}

int cmd_scan_pii(const GlobalOptions& opts, const std::vector<std::string>& inputs) {
    AuditConfig cfg = load_config(opts, false);
    if (opts.dry_run) {
        std::cout << "plan: scan " << inputs.size() << " input(s) for the 21 PII categories\n";
        return 0;
    }
    PiiScanner scanner = make_pii_scanner(cfg);
    std::vector<Document> docs = read_documents(inputs, "jsonl", nullptr);
    ScanOutcome outcome = scan_pii_docs(docs, scanner, cfg.jobs);
    fs::create_directories(cfg.out_dir);
    write_text_file((fs::path(cfg.out_dir) / "pii_leaks.jsonl").string(),
                    jsonl_of_records(outcome.records));
    json summary;
    summary["docs"] = outcome.docs_scanned;
    summary["leaked"] = outcome.records.size();
    summary["bytes"] = outcome.bytes_scanned;
    write_text_file((fs::path(cfg.out_dir) / "pii_scan_summary.json").string(),
                    summary.dump(2) + "\n");
    std::cout << "PI leaks: " << outcome.records.size() << " of " << outcome.docs_scanned
              << " docs\n";
    return 0;
}

int cmd_scan_contamination(const GlobalOptions& opts, const std::vector<std::string>& inputs,
                           const std::vector<std::string>& index_paths) {
    AuditConfig cfg = load_config(opts, false);
    if (opts.dry_run) {
        std::cout << "plan: scan " << inputs.size() << " input(s) against " << index_paths.size()
                  << " store(s)\n";
        return 0;
    }
    std::vector<Document> docs = read_documents(inputs, "jsonl", nullptr);
    std::vector<LeakRecord> all;
    std::size_t docs_scanned = docs.size();
    for (const auto& path : index_paths) {
        require_exists(path, "index");
        FingerprintIndex index = FingerprintIndex::load(path, cfg.index_mmap);
        LeakKind kind = index.entries().empty() ||
                                index.entries().front().store == StoreKind::Benchmark
                            ? LeakKind::BM
                            : LeakKind::CT;
        ScanOutcome outcome = scan_contamination_docs(docs, index, kind, cfg.jobs);
        all.insert(all.end(), outcome.records.begin(), outcome.records.end());
    }
    fs::create_directories(cfg.out_dir);
    write_text_file((fs::path(cfg.out_dir) / "contamination_leaks.jsonl").string(),
                    jsonl_of_records(all));
    std::cout << "contamination leaks: " << all.size() << " records over " << docs_scanned
              << " docs\n";
    return 0;
}

int cmd_rates_leakage(const GlobalOptions& opts) {
    AuditConfig cfg = load_config(opts, true);
    if (cfg.corpus_paths.empty()) throw ConfigError("corpus.paths is empty");
    if (opts.dry_run) {
        std::cout << "plan: sample " << cfg.sample_size << " docs from " << cfg.corpus_paths.size()
                  << " corpus input(s), scan PII";
        if (!cfg.copyright_store.empty()) std::cout << " + copyright store";
        if (!cfg.benchmark_store.empty()) std::cout << " + benchmark store";
        std::cout << ", write rates to " << cfg.out_dir << "\n";
        return 0;
    }
    for (const auto& path : cfg.corpus_paths) require_exists(path, "corpus path");

    std::uint64_t seed = cfg.sample_seed.value_or(cfg.root_seed);
    ReservoirSampler<Document> sampler({cfg.sample_size, seed});
    IngestSummary ingest_summary =
        ingest_many(cfg.corpus_paths, ingest_format_from_label(cfg.corpus_format),
                    [&](Document&& d) { sampler.feed(std::move(d)); });
    std::vector<Document> sampled = sampler.finish();
    if (sampled.empty()) throw PreconditionError("sampled zero documents");

    PiiScanner scanner = make_pii_scanner(cfg);
    ScanOutcome pi = scan_pii_docs(sampled, scanner, cfg.jobs);

    std::vector<LeakRecord> records = pi.records;
    if (!cfg.copyright_store.empty()) {
        require_exists(cfg.copyright_store, "index.copyright_store");
        FingerprintIndex ct = FingerprintIndex::load(cfg.copyright_store, cfg.index_mmap);
        ScanOutcome outcome = scan_contamination_docs(sampled, ct, LeakKind::CT, cfg.jobs);
        records.insert(records.end(), outcome.records.begin(), outcome.records.end());
    }
    if (!cfg.benchmark_store.empty()) {
        require_exists(cfg.benchmark_store, "index.benchmark_store");
        FingerprintIndex bm = FingerprintIndex::load(cfg.benchmark_store, cfg.index_mmap);
        ScanOutcome outcome = scan_contamination_docs(sampled, bm, LeakKind::BM, cfg.jobs);
        records.insert(records.end(), outcome.records.begin(), outcome.records.end());
    }

    LeakageRates rates;
    rates.config_digest = cfg.digest;
    rates.root_seed = cfg.root_seed;
    rates.sampled_total = sampled.size();
    for (LeakKind kind : {LeakKind::PI, LeakKind::CT, LeakKind::BM}) {
        Rational rate = leakage_rate(records, sampled.size(), kind);
        rates.rates[kind] = rate;
        std::set<std::string> ids;
        for (const auto& r : records) {
            if (r.kind == kind) ids.insert(r.doc_id);
        }
        rates.leaked_counts[kind] = ids.size();
    }

    fs::create_directories(cfg.out_dir);
    write_text_file((fs::path(cfg.out_dir) / "leakage_report.json").string(),
                    leakage_report_json(rates));
    write_text_file((fs::path(cfg.out_dir) / "leakage_summary.csv").string(),
                    leakage_summary_csv(rates));
    write_text_file((fs::path(cfg.out_dir) / "leaks.jsonl").string(), jsonl_of_records(records));
    write_text_file((fs::path(cfg.out_dir) / "ingest_summary.json").string(),
                    ingest_summary.to_json() + "\n");
    std::cout << leakage_summary_csv(rates);
    return 0;
}

int cmd_dataset_build(const GlobalOptions& opts, const std::string& kind_label,
                      const std::string& leaked_file, const std::string& prompts_file,
                      const std::string& paraphrases_file, const std::string& out_file,
                      const std::string& name_substitutions_file, bool generate_prompts,
                      const std::string& prompt_examples_file) {
    AuditConfig cfg = load_config(opts, false);
    LeakKind kind = leak_kind_from_label(kind_label);
    if (opts.dry_run) {
        std::cout << "plan: build " << kind_label << " eval dataset from " << leaked_file
                  << " into " << out_file << "\n";
        return 0;
    }
    require_exists(leaked_file, "--leaked");

    std::map<std::string, std::string> prompts;
    if (!prompts_file.empty()) {
        std::ifstream in(prompts_file);
        if (!in) throw IoError("cannot open " + prompts_file);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            prompts[j.at("id").get<std::string>()] = j.at("prompt").get<std::string>();
        }
    }

    // Elicitation prompts come from the human-authored file above or from an
    // external generator driven by the worked-example request; never invented
    // here.
    std::vector<PromptExample> prompt_examples;
    std::unique_ptr<Scorer> generator;
    if (generate_prompts) {
        if (prompt_examples_file.empty()) {
            throw ConfigError("--generate-prompts requires --prompt-examples");
        }
        std::ifstream in(prompt_examples_file);
        if (!in) throw IoError("cannot open " + prompt_examples_file);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            prompt_examples.push_back(
                {j.at("text").get<std::string>(), j.at("prompt").get<std::string>()});
        }
        generator = make_scorer(cfg.scorer, cfg.cache_dir);
    }
    std::map<std::string, std::string> paraphrases;
    if (!paraphrases_file.empty()) {
        std::ifstream in(paraphrases_file);
        if (!in) throw IoError("cannot open " + paraphrases_file);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            paraphrases[j.at("id").get<std::string>()] = j.at("text").get<std::string>();
        }
    }

    std::vector<std::string> name_substitutions;
    if (!name_substitutions_file.empty()) {
        std::ifstream in(name_substitutions_file);
        if (!in) throw IoError("cannot open " + name_substitutions_file);
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
            if (!line.empty()) name_substitutions.push_back(line);
        }
    }

    // Every configured store participates in non-member validation.
    std::vector<FingerprintIndex> stores;
    if (!cfg.benchmark_store.empty()) {
        require_exists(cfg.benchmark_store, "index.benchmark_store");
        stores.push_back(FingerprintIndex::load(cfg.benchmark_store, cfg.index_mmap));
    }
    if (!cfg.copyright_store.empty()) {
        require_exists(cfg.copyright_store, "index.copyright_store");
        stores.push_back(FingerprintIndex::load(cfg.copyright_store, cfg.index_mmap));
    }

    std::optional<PiiScanner> scanner;
    if (kind == LeakKind::PI) scanner.emplace(make_pii_scanner(cfg));

    std::vector<Document> leaked = read_documents({leaked_file}, "jsonl", nullptr);
    std::string out;
    std::size_t pairs = 0, dropped_no_counterpart = 0, dropped_member = 0;
    for (const auto& doc : leaked) {
        std::string counterpart;
        Provenance provenance;
        if (kind == LeakKind::PI) {
            PerturbConfig pc;
            pc.seed = cfg.root_seed ^ FingerprintIndex::word_hash(doc.doc_id);
            pc.name_substitutions = name_substitutions;
            try {
                counterpart = perturb_pii(doc.raw_text, *scanner, pc);
            } catch (const NoPiiFound&) {
                ++dropped_no_counterpart;
                continue;
            }
            provenance = Provenance::Perturbed;
        } else {
            auto it = paraphrases.find(doc.doc_id);
            if (it == paraphrases.end()) {
                ++dropped_no_counterpart;
                continue;
            }
            counterpart = it->second;
            provenance = Provenance::ExternalParaphrase;
        }

        bool non_member = true;
        for (const auto& store : stores) {
            if (!store.verify_non_member(counterpart)) {
                non_member = false;
                break;
            }
        }
        if (!non_member) {
            ++dropped_member;
            continue;
        }

        EvalInstance leaked_instance;
        leaked_instance.instance_id = doc.doc_id;
        leaked_instance.kind = kind;
        leaked_instance.text = doc.raw_text;
        auto prompt_it = prompts.find(doc.doc_id);
        if (prompt_it != prompts.end()) {
            leaked_instance.elicitation_prompt = prompt_it->second;
        } else if (generator) {
            std::string request = build_elicitation_prompt_request(doc.raw_text, prompt_examples);
            std::string generated = generator->complete(request, 128).text;
            std::size_t start = generated.find_first_not_of(" \t");
            std::size_t end = generated.find('\n');
            if (start != std::string::npos) {
                leaked_instance.elicitation_prompt =
                    generated.substr(start, end == std::string::npos ? end : end - start);
            }
        }
        leaked_instance.gold = GoldLabel::Leaked;
        leaked_instance.provenance = Provenance::FromCorpusScan;

        EvalInstance non_instance = leaked_instance;
        non_instance.instance_id = doc.doc_id + "#non";
        non_instance.text = counterpart;
        non_instance.gold = GoldLabel::NonLeaked;
        non_instance.provenance = provenance;

        out += eval_instance_to_jsonl(leaked_instance) + "\n";
        out += eval_instance_to_jsonl(non_instance) + "\n";
        ++pairs;
    }
    write_text_file(out_file, out);
    std::cout << "built " << pairs << " instance pairs (" << dropped_no_counterpart
              << " without counterpart, " << dropped_member << " failed non-member check)\n";
    return 0;
}

CompareConfig compare_config_from(const AuditConfig& cfg) {
    CompareConfig cc;
    cc.k_percent = cfg.k_percent;
    cc.tie_break = cfg.tie_break;
    cc.fewshot = selfdetect_config_from(cfg);
    cc.calibration_fraction = cfg.calibration_fraction;
    cc.split_seed = cfg.root_seed;
    cc.jobs = cfg.jobs;
    for (const auto& label : cfg.detect_methods) {
        cc.methods.push_back(detector_method_from_label(label));
    }
    cc.with_ensemble = cfg.detect_ensemble;
    return cc;
}

int cmd_detect(const GlobalOptions& opts, const std::string& instances_file,
               const std::string& methods_csv, std::optional<bool> ensemble_flag) {
    AuditConfig cfg = load_config(opts, true);
    std::string eval_path = instances_file.empty() ? cfg.eval_file : instances_file;
    require_exists(eval_path, "dataset.eval_file");
    if (!methods_csv.empty()) {
        cfg.detect_methods.clear();
        std::stringstream ss(methods_csv);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) cfg.detect_methods.push_back(item);
        }
    }
    if (ensemble_flag) cfg.detect_ensemble = *ensemble_flag;
    if (opts.dry_run) {
        std::cout << "plan: detect over " << eval_path << " with methods";
        for (const auto& m : cfg.detect_methods) std::cout << " " << m;
        if (cfg.detect_ensemble) std::cout << " + ensemble";
        std::cout << "\n";
        return 0;
    }

    std::vector<EvalInstance> instances = read_instances(eval_path);
    std::unique_ptr<Scorer> scorer = make_scorer(cfg.scorer, cfg.cache_dir);
    CompareResult result = compare_methods(instances, *scorer, compare_config_from(cfg));

    fs::create_directories(cfg.out_dir);
    write_text_file((fs::path(cfg.out_dir) / "detection_report.json").string(),
                    detection_report_json(result, cfg.digest, cfg.root_seed));
    write_text_file((fs::path(cfg.out_dir) / "detection_summary.csv").string(),
                    detection_summary_csv(result));
    std::string verdict_lines;
    for (const auto& [method, verdicts] : result.eval_verdicts) {
        for (const auto& v : verdicts) {
            DetectorVerdict dv;
            dv.method = method;
            dv.score = v.score;
            dv.decision = v.decision.value_or(false);
            dv.raw = json{{"excluded", !v.decision.has_value()}, {"detail", v.detail}}.dump();
            verdict_lines += verdict_record_to_jsonl(v.instance_id, dv) + "\n";
        }
    }
    write_text_file((fs::path(cfg.out_dir) / "verdicts.jsonl").string(), verdict_lines);
    std::cout << detection_summary_csv(result);
    return 0;
}

int cmd_output_rate(const GlobalOptions& opts, const std::string& instances_file) {
    AuditConfig cfg = load_config(opts, true);
    std::string eval_path = instances_file.empty() ? cfg.eval_file : instances_file;
    require_exists(eval_path, "dataset.eval_file");
    if (opts.dry_run) {
        std::cout << "plan: output-rate over leaked instances of " << eval_path << "\n";
        return 0;
    }

    std::vector<EvalInstance> instances = read_instances(eval_path);
    std::unique_ptr<Scorer> scorer = make_scorer(cfg.scorer, cfg.cache_dir);
    DeniedSet denied =
        cfg.denied_file.empty() ? DeniedSet::defaults() : DeniedSet::from_file(cfg.denied_file);

    std::map<LeakKind, OutputRateResult> results;
    std::string per_instance;
    for (LeakKind kind : {LeakKind::PI, LeakKind::CT, LeakKind::BM}) {
        std::vector<EvalInstance> leaked;
        for (const auto& instance : instances) {
            if (instance.kind == kind && instance.gold == GoldLabel::Leaked) {
                leaked.push_back(instance);
            }
        }
        if (leaked.empty()) continue;
        OutputRateConfig oc;
        oc.denied = denied;
        oc.scorer = scorer.get();
        oc.jobs = cfg.jobs;
        results[kind] = output_rate(leaked, oc);
        for (const auto& row : results[kind].per_instance) {
            per_instance += output_rate_instance_jsonl(kind, row) + "\n";
        }
    }

    fs::create_directories(cfg.out_dir);
    write_text_file((fs::path(cfg.out_dir) / "output_rate_report.json").string(),
                    output_rate_report_json(results, cfg.digest, cfg.root_seed));
    write_text_file((fs::path(cfg.out_dir) / "output_rate_summary.csv").string(),
                    output_rate_summary_csv(results));
    write_text_file((fs::path(cfg.out_dir) / "output_rate_instances.jsonl").string(),
                    per_instance);
    std::cout << output_rate_summary_csv(results);
    return 0;
}

int cmd_ablate_fewshot(const GlobalOptions& opts, const std::string& instances_file,
                       const std::string& shots_csv) {
    AuditConfig cfg = load_config(opts, true);
    std::string eval_path = instances_file.empty() ? cfg.eval_file : instances_file;
    require_exists(eval_path, "dataset.eval_file");
    std::vector<std::size_t> shots;
    {
        std::stringstream ss(shots_csv);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) shots.push_back(static_cast<std::size_t>(std::stoull(item)));
        }
    }
    if (opts.dry_run) {
        std::cout << "plan: few-shot ablation over " << eval_path << " at " << shots.size()
                  << " shot counts\n";
        return 0;
    }

    std::vector<EvalInstance> instances = read_instances(eval_path);
    std::unique_ptr<Scorer> scorer = make_scorer(cfg.scorer, cfg.cache_dir);
    SelfDetectConfig sd = selfdetect_config_from(cfg);
    auto results = ablate_fewshot(shots, sd, *scorer, instances, cfg.jobs);

    fs::create_directories(cfg.out_dir);
    write_text_file((fs::path(cfg.out_dir) / "ablation_report.json").string(),
                    ablation_report_json(results, cfg.digest, cfg.root_seed));
    write_text_file((fs::path(cfg.out_dir) / "ablation.csv").string(), ablation_csv(results));
    std::cout << ablation_csv(results);
    return 0;
}

int cmd_report(const GlobalOptions& opts) {
    AuditConfig cfg = load_config(opts, true);
    if (opts.dry_run) {
        std::cout << "plan: merge reports under " << cfg.out_dir << "\n";
        return 0;
    }
    CombinedReport combined;
    combined.config_digest = cfg.digest;
    combined.root_seed = cfg.root_seed;

    fs::path out_dir(cfg.out_dir);
    if (fs::exists(out_dir / "leakage_report.json")) {
        json j = json::parse(read_text_file((out_dir / "leakage_report.json").string()));
        for (const auto& [label, entry] : j["leakage_rates"].items()) {
            combined.leakage[leak_kind_from_label(label)] =
                Rational(entry["num"].get<std::uint64_t>(), entry["den"].get<std::uint64_t>());
        }
    }
    if (fs::exists(out_dir / "output_rate_report.json")) {
        json j = json::parse(read_text_file((out_dir / "output_rate_report.json").string()));
        for (const auto& [label, entry] : j["output_rates"].items()) {
            combined.output[leak_kind_from_label(label)] =
                Rational(entry["num"].get<std::uint64_t>(), entry["den"].get<std::uint64_t>());
        }
    }
    if (fs::exists(out_dir / "detection_report.json")) {
        json j = json::parse(read_text_file((out_dir / "detection_report.json").string()));
        for (const auto& [label, methods] : j["detection_rates"].items()) {
            LeakKind kind = leak_kind_from_label(label);
            for (const auto& [method_label, entry] : methods.items()) {
                DetectionRateResult r;
                r.correct = entry["correct"].get<std::size_t>();
                r.incorrect = entry["incorrect"].get<std::size_t>();
                r.excluded = entry["excluded"].get<std::size_t>();
                r.exclusion_warning = entry["exclusion_warning"].get<bool>();
                combined.detection[kind][detector_method_from_label(method_label)] = r;
            }
        }
    }

    write_text_file((out_dir / "report.json").string(), combined_report_json(combined));
    write_text_file((out_dir / "summary.csv").string(), combined_summary_csv(combined));
    std::cout << combined_summary_csv(combined);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"leakscan: pre-training corpus leakage audit"};
    app.require_subcommand(1);
    GlobalOptions opts;
    app.add_option("--config", opts.config_path, "audit config file");
    app.add_option("--out", opts.out_dir, "output directory override");
    app.add_option("--jobs", opts.jobs, "worker threads (default: config or 1)");
    app.add_flag("--dry-run", opts.dry_run, "validate config and print the plan");

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "normalize raw corpora into document jsonl");
    std::vector<std::string> ingest_inputs;
    std::string ingest_format = "jsonl";
    ingest_cmd->add_option("inputs", ingest_inputs, "input files or directories")->required();
    ingest_cmd->add_option("--format", ingest_format, "jsonl|plain_dir");

    // sample
    auto* sample_cmd = app.add_subcommand("sample", "reservoir-sample documents");
    std::vector<std::string> sample_inputs;
    std::string sample_format = "jsonl";
    std::uint64_t sample_size = 5'000'000;
    std::uint64_t sample_seed = 0;
    std::string sample_out = "sampled.jsonl";
    sample_cmd->add_option("inputs", sample_inputs, "document jsonl inputs")->required();
    sample_cmd->add_option("--format", sample_format, "jsonl|plain_dir");
    sample_cmd->add_option("--size", sample_size, "sample size");
    sample_cmd->add_option("--seed", sample_seed, "sampling seed");
    sample_cmd->add_option("-o,--out-file", sample_out, "output jsonl");

    // index build
    auto* index_cmd = app.add_subcommand("index", "fingerprint store operations");
    auto* index_build = index_cmd->add_subcommand("build", "build a frozen fingerprint store");
    std::vector<std::string> index_inputs;
    std::string index_store = "benchmark";
    std::uint32_t index_w = 300;
    std::string index_out = "store.lsix";
    index_build->add_option("inputs", index_inputs, "jsonl store records")->required();
    index_build->add_option("--store", index_store, "benchmark|copyright")->required();
    index_build->add_option("--w", index_w, "window width in words (default 300)");
    index_build->add_option("-o,--out-file", index_out, "output .lsix file")->required();

    // scan pii / scan contamination
    auto* scan_cmd = app.add_subcommand("scan", "scan documents for leaks");
    auto* scan_pii_cmd = scan_cmd->add_subcommand("pii", "personal-information scan");
    std::vector<std::string> scan_pii_inputs;
    scan_pii_cmd->add_option("inputs", scan_pii_inputs, "document jsonl inputs")->required();
    auto* scan_cont_cmd = scan_cmd->add_subcommand("contamination", "exact-match store scan");
    std::vector<std::string> scan_cont_inputs;
    std::vector<std::string> scan_cont_indexes;
    scan_cont_cmd->add_option("inputs", scan_cont_inputs, "document jsonl inputs")->required();
    scan_cont_cmd->add_option("--index", scan_cont_indexes, "fingerprint store file(s)")
        ->required();

    // rates leakage
    auto* rates_cmd = app.add_subcommand("rates", "compute leakage criteria");
    auto* rates_leakage_cmd = rates_cmd->add_subcommand("leakage", "the paper's leakage rate");

    // dataset build
    auto* dataset_cmd = app.add_subcommand("dataset", "evaluation dataset operations");
    auto* dataset_build = dataset_cmd->add_subcommand("build", "build leaked/non-leaked pairs");
    std::string ds_kind, ds_leaked, ds_prompts, ds_paraphrases, ds_out = "instances.jsonl";
    std::string ds_names, ds_prompt_examples;
    bool ds_generate = false;
    dataset_build->add_option("--kind", ds_kind, "pi|ct|bm")->required();
    dataset_build->add_option("--leaked", ds_leaked, "leaked documents jsonl")->required();
    dataset_build->add_option("--prompts", ds_prompts, "elicitation prompts jsonl {id, prompt}");
    dataset_build->add_option("--paraphrases", ds_paraphrases,
                              "external paraphrases jsonl {id, text} (ct/bm)");
    dataset_build->add_option("--name-substitutions", ds_names,
                              "substitution gazetteer for PI name rewrites");
    dataset_build->add_flag("--generate-prompts", ds_generate,
                            "fill missing prompts via the configured scorer endpoint");
    dataset_build->add_option("--prompt-examples", ds_prompt_examples,
                              "8 worked {text, prompt} pairs for the generator request");
    dataset_build->add_option("-o,--out-file", ds_out, "output instances jsonl");

    // detect
    auto* detect_cmd = app.add_subcommand("detect", "membership detection rates");
    std::string detect_instances, detect_methods;
    bool detect_ensemble = false, detect_no_ensemble = false;
    detect_cmd->add_option("--instances", detect_instances, "eval instances jsonl");
    detect_cmd->add_option("--methods", detect_methods, "comma list: loss,pplzlib,mink,selfdetect");
    detect_cmd->add_flag("--ensemble", detect_ensemble, "add the 4-method majority vote");
    detect_cmd->add_flag("--no-ensemble", detect_no_ensemble, "skip the ensemble");

    // output-rate
    auto* output_cmd = app.add_subcommand("output-rate", "likelihood-vs-denial output rate");
    std::string output_instances;
    output_cmd->add_option("--instances", output_instances, "eval instances jsonl");

    // ablate fewshot
    auto* ablate_cmd = app.add_subcommand("ablate", "ablation runners");
    auto* ablate_fs = ablate_cmd->add_subcommand("fewshot", "self-detection shot-count ablation");
    std::string ablate_instances, ablate_shots = "0,2,4,8,16";
    ablate_fs->add_option("--instances", ablate_instances, "eval instances jsonl");
    ablate_fs->add_option("--shots", ablate_shots, "comma list of shot counts (must include 0)");

    // report
    auto* report_cmd = app.add_subcommand("report", "merge rate reports into one summary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage errors exit 2, help exits 0
    }

    try {
        if (*ingest_cmd) return cmd_ingest(opts, ingest_inputs, ingest_format);
        if (*sample_cmd) {
            return cmd_sample(opts, sample_inputs, sample_format, sample_size, sample_seed,
                              sample_out);
        }
        if (*index_build) return cmd_index_build(opts, index_inputs, index_store, index_w, index_out);
        if (*scan_pii_cmd) return cmd_scan_pii(opts, scan_pii_inputs);
        if (*scan_cont_cmd) return cmd_scan_contamination(opts, scan_cont_inputs, scan_cont_indexes);
        if (*rates_leakage_cmd) return cmd_rates_leakage(opts);
        if (*dataset_build) {
            return cmd_dataset_build(opts, ds_kind, ds_leaked, ds_prompts, ds_paraphrases, ds_out,
                                     ds_names, ds_generate, ds_prompt_examples);
        }
        if (*detect_cmd) {
            std::optional<bool> ensemble_flag;
            if (detect_ensemble) ensemble_flag = true;
            if (detect_no_ensemble) ensemble_flag = false;
            return cmd_detect(opts, detect_instances, detect_methods, ensemble_flag);
        }
        if (*output_cmd) return cmd_output_rate(opts, output_instances);
        if (*ablate_fs) return cmd_ablate_fewshot(opts, ablate_instances, ablate_shots);
        if (*report_cmd) return cmd_report(opts);
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const Error& e) {
        json err;
        err["error"] = e.what();
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        json err;
        err["error"] = e.what();
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
