#include "leakscan/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "leakscan/errors.hpp"

namespace leakscan {

using nlohmann::json;

std::string format_rate(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

std::string leak_record_to_jsonl(const LeakRecord& record) {
    json j;
    j["doc_id"] = record.doc_id;
    j["kind"] = leak_kind_label(record.kind);
    if (record.kind == LeakKind::PI) {
        json evidence = json::array();
        for (const auto& m : record.pii_evidence) {
            evidence.push_back({{"category", pii_category_label(m.category)},
                                {"start", m.start},
                                {"end", m.end},
                                {"matched_text", m.matched_text}});
        }
        j["evidence"] = evidence;
    } else {
        json evidence = json::array();
        for (const auto& w : record.window_evidence) {
            evidence.push_back({{"doc_begin", w.doc_begin},
                                {"doc_end", w.doc_end},
                                {"ref_id", w.ref_id},
                                {"ref_begin", w.ref_begin},
                                {"ref_end", w.ref_end},
                                {"width", w.width}});
        }
        j["evidence"] = evidence;
    }
    return j.dump();
}

std::string verdict_record_to_jsonl(const std::string& instance_id, const DetectorVerdict& v) {
    json j;
    j["instance_id"] = instance_id;
    j["method"] = detector_method_label(v.method);
    if (v.score) {
        j["score"] = *v.score;
    } else {
        j["score"] = nullptr;
    }
    j["decision"] = v.decision;
    j["raw"] = v.raw.empty() ? json::object() : json::parse(v.raw);
    return j.dump();
}

namespace {

json rational_json(const Rational& r) {
    return {{"num", r.num}, {"den", r.den}, {"value", r.value()}};
}

const LeakKind kAllKinds[] = {LeakKind::PI, LeakKind::CT, LeakKind::BM};

json detection_result_json(const DetectionRateResult& r) {
    return {{"rate", r.rate()},
            {"correct", r.correct},
            {"incorrect", r.incorrect},
            {"excluded", r.excluded},
            {"total", r.total()},
            {"exclusion_warning", r.exclusion_warning}};
}

}  // namespace

std::string leakage_summary_csv(const LeakageRates& rates) {
    std::string csv = "kind,leaked,total,rate\n";
    for (LeakKind kind : kAllKinds) {
        auto it = rates.rates.find(kind);
        if (it == rates.rates.end()) continue;
        auto count = rates.leaked_counts.count(kind) ? rates.leaked_counts.at(kind) : 0;
        csv += leak_kind_label(kind) + "," + std::to_string(count) + "," +
               std::to_string(rates.sampled_total) + "," + format_rate(it->second.value()) + "\n";
    }
    return csv;
}

std::string leakage_report_json(const LeakageRates& rates) {
    json j;
    j["config_digest"] = rates.config_digest;
    j["root_seed"] = rates.root_seed;
    j["sampled_total"] = rates.sampled_total;
    json per_kind = json::object();
    for (const auto& [kind, rate] : rates.rates) {
        json entry = rational_json(rate);
        entry["leaked"] =
            rates.leaked_counts.count(kind) ? rates.leaked_counts.at(kind) : std::size_t{0};
        per_kind[leak_kind_label(kind)] = entry;
    }
    j["leakage_rates"] = per_kind;
    return j.dump(2) + "\n";
}

std::string detection_summary_csv(const CompareResult& result) {
    std::string csv = "kind,method,detection_rate,correct,incorrect,excluded,total\n";
    for (LeakKind kind : kAllKinds) {
        auto it = result.rates.find(kind);
        if (it == result.rates.end()) continue;
        for (const auto& [method, r] : it->second) {
            csv += leak_kind_label(kind) + "," + detector_method_label(method) + "," +
                   format_rate(r.rate()) + "," + std::to_string(r.correct) + "," +
                   std::to_string(r.incorrect) + "," + std::to_string(r.excluded) + "," +
                   std::to_string(r.total()) + "\n";
        }
    }
    return csv;
}

std::string detection_report_json(const CompareResult& result, const std::string& config_digest,
                                  std::uint64_t root_seed) {
    json j;
    j["config_digest"] = config_digest;
    j["root_seed"] = root_seed;
    j["calibration_count"] = result.calibration_count;
    j["eval_count"] = result.eval_count;
    json rates = json::object();
    for (const auto& [kind, methods] : result.rates) {
        json per_method = json::object();
        for (const auto& [method, r] : methods) {
            per_method[detector_method_label(method)] = detection_result_json(r);
        }
        rates[leak_kind_label(kind)] = per_method;
    }
    j["detection_rates"] = rates;
    json thresholds = json::object();
    for (const auto& [key, tau] : result.thresholds) {
        thresholds[leak_kind_label(key.first) + "." + detector_method_label(key.second)] = tau;
    }
    j["thresholds"] = thresholds;
    return j.dump(2) + "\n";
}

std::string output_rate_summary_csv(const std::map<LeakKind, OutputRateResult>& results) {
    std::string csv = "kind,output,total,rate\n";
    for (LeakKind kind : kAllKinds) {
        auto it = results.find(kind);
        if (it == results.end()) continue;
        const auto& r = it->second;
        csv += leak_kind_label(kind) + "," + std::to_string(r.output_count) + "," +
               std::to_string(r.total) + "," + format_rate(r.rate().value()) + "\n";
    }
    return csv;
}

std::string output_rate_report_json(const std::map<LeakKind, OutputRateResult>& results,
                                    const std::string& config_digest, std::uint64_t root_seed) {
    json j;
    j["config_digest"] = config_digest;
    j["root_seed"] = root_seed;
    json per_kind = json::object();
    for (const auto& [kind, r] : results) {
        json entry = rational_json(r.rate());
        entry["output"] = r.output_count;
        entry["total"] = r.total;
        entry["excluded"] = r.excluded;
        json reasons = json::array();
        for (const auto& reason : r.exclusion_reasons) reasons.push_back(reason);
        entry["exclusions"] = reasons;
        per_kind[leak_kind_label(kind)] = entry;
    }
    j["output_rates"] = per_kind;
    return j.dump(2) + "\n";
}

std::string output_rate_instance_jsonl(LeakKind kind, const OutputRateResult::PerInstance& row) {
    json j;
    j["instance_id"] = row.instance_id;
    j["kind"] = leak_kind_label(kind);
    j["leaked_loglik"] = row.leaked_loglik;
    j["denied_loglik"] = row.denied_loglik;
    j["output"] = row.output;
    return j.dump();
}

std::string ablation_csv(const std::map<std::size_t, DetectionRateResult>& results) {
    std::string csv = "shots,detection_rate,correct,incorrect,excluded,total\n";
    for (const auto& [shots, r] : results) {
        csv += std::to_string(shots) + "," + format_rate(r.rate()) + "," +
               std::to_string(r.correct) + "," + std::to_string(r.incorrect) + "," +
               std::to_string(r.excluded) + "," + std::to_string(r.total()) + "\n";
    }
    return csv;
}

std::string ablation_report_json(const std::map<std::size_t, DetectionRateResult>& results,
                                 const std::string& config_digest, std::uint64_t root_seed) {
    json j;
    j["config_digest"] = config_digest;
    j["root_seed"] = root_seed;
    json per_shots = json::object();
    for (const auto& [shots, r] : results) {
        per_shots[std::to_string(shots)] = detection_result_json(r);
    }
    j["detection_rate_by_shots"] = per_shots;
    return j.dump(2) + "\n";
}

std::string combined_summary_csv(const CombinedReport& report) {
    std::string csv = "kind,leakage_rate,output_rate,loss,pplzlib,mink,selfdetect,ensemble\n";
    const DetectorMethod methods[] = {DetectorMethod::Loss, DetectorMethod::PplZlib,
                                      DetectorMethod::MinK, DetectorMethod::SelfDetect,
                                      DetectorMethod::Ensemble};
    for (LeakKind kind : kAllKinds) {
        bool any = report.leakage.count(kind) || report.output.count(kind) ||
                   report.detection.count(kind);
        if (!any) continue;
        csv += leak_kind_label(kind);
        csv += ",";
        csv += report.leakage.count(kind) ? format_rate(report.leakage.at(kind).value()) : "";
        csv += ",";
        csv += report.output.count(kind) ? format_rate(report.output.at(kind).value()) : "";
        for (DetectorMethod m : methods) {
            csv += ",";
            if (report.detection.count(kind) && report.detection.at(kind).count(m)) {
                csv += format_rate(report.detection.at(kind).at(m).rate());
            }
        }
        csv += "\n";
    }
    return csv;
}

std::string combined_report_json(const CombinedReport& report) {
    json j;
    j["config_digest"] = report.config_digest;
    j["root_seed"] = report.root_seed;
    json leakage = json::object();
    for (const auto& [kind, rate] : report.leakage) {
        leakage[leak_kind_label(kind)] = rational_json(rate);
    }
    j["leakage_rates"] = leakage;
    json output = json::object();
    for (const auto& [kind, rate] : report.output) {
        output[leak_kind_label(kind)] = rational_json(rate);
    }
    j["output_rates"] = output;
    json detection = json::object();
    for (const auto& [kind, methods] : report.detection) {
        json per_method = json::object();
        for (const auto& [method, r] : methods) {
            per_method[detector_method_label(method)] = detection_result_json(r);
        }
        detection[leak_kind_label(kind)] = per_method;
    }
    j["detection_rates"] = detection;
    return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace leakscan
