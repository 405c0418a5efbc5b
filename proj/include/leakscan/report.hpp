#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "leakscan/harness.hpp"
#include "leakscan/leak.hpp"

namespace leakscan {

// Fixed-format rate string used in every CSV (6 decimals, C locale).
std::string format_rate(double value);

std::string leak_record_to_jsonl(const LeakRecord& record);

// Verdict record schema: {"instance_id", "method", "score", "decision", "raw"}.
std::string verdict_record_to_jsonl(const std::string& instance_id, const DetectorVerdict& v);

struct LeakageRates {
    std::string config_digest;
    std::uint64_t root_seed = 0;
    std::uint64_t sampled_total = 0;
    std::map<LeakKind, Rational> rates;
    std::map<LeakKind, std::size_t> leaked_counts;
};

// CSV schema: kind,leaked,total,rate
std::string leakage_summary_csv(const LeakageRates& rates);
std::string leakage_report_json(const LeakageRates& rates);

// CSV schema: kind,method,detection_rate,correct,incorrect,excluded,total
std::string detection_summary_csv(const CompareResult& result);
std::string detection_report_json(const CompareResult& result, const std::string& config_digest,
                                  std::uint64_t root_seed);

// CSV schema: kind,output,total,rate
std::string output_rate_summary_csv(const std::map<LeakKind, OutputRateResult>& results);
std::string output_rate_report_json(const std::map<LeakKind, OutputRateResult>& results,
                                    const std::string& config_digest, std::uint64_t root_seed);
std::string output_rate_instance_jsonl(LeakKind kind, const OutputRateResult::PerInstance& row);

// CSV schema: shots,detection_rate,correct,incorrect,excluded,total
std::string ablation_csv(const std::map<std::size_t, DetectionRateResult>& results);
std::string ablation_report_json(const std::map<std::size_t, DetectionRateResult>& results,
                                 const std::string& config_digest, std::uint64_t root_seed);

// Combined per-kind table mirroring the leakage/output/detection summaries.
// CSV schema: kind,leakage_rate,output_rate,loss,pplzlib,mink,selfdetect,ensemble
struct CombinedReport {
    std::string config_digest;
    std::uint64_t root_seed = 0;
    std::map<LeakKind, Rational> leakage;
    std::map<LeakKind, Rational> output;
    std::map<LeakKind, std::map<DetectorMethod, DetectionRateResult>> detection;
};

std::string combined_summary_csv(const CombinedReport& report);
std::string combined_report_json(const CombinedReport& report);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace leakscan
