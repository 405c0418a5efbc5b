#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "leakscan/detectors.hpp"
#include "leakscan/leak.hpp"
#include "leakscan/pii.hpp"
#include "leakscan/scorer.hpp"

namespace leakscan {

enum class GoldLabel { Leaked, NonLeaked };
enum class Provenance { FromCorpusScan, Perturbed, ExternalParaphrase };

std::string gold_label_name(GoldLabel g);
GoldLabel gold_label_from_name(const std::string& name);
std::string provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& name);

// One evaluation unit for the output-rate and detection-rate harnesses.
struct EvalInstance {
    std::string instance_id;
    LeakKind kind = LeakKind::PI;
    std::string text;
    std::string elicitation_prompt;
    GoldLabel gold = GoldLabel::Leaked;
    Provenance provenance = Provenance::FromCorpusScan;
};

std::string eval_instance_to_jsonl(const EvalInstance& instance);
EvalInstance eval_instance_from_jsonl(const std::string& line);

// Exactly 8 refusal continuations compared against the leaked text.
class DeniedSet {
public:
    explicit DeniedSet(std::vector<std::string> texts);
    static DeniedSet defaults();
    static DeniedSet from_file(const std::string& path);  // 8 non-empty lines

    const std::vector<std::string>& texts() const { return texts_; }

private:
    std::vector<std::string> texts_;
};

// The paper's prompt-generation request: 8 worked (text, prompt) pairs, then
// the instance. The toolkit sends this to an external generator or fills it
// from a human-authored file; it never invents elicitation prompts itself.
struct PromptExample {
    std::string text;
    std::string prompt;
};

std::string build_elicitation_prompt_request(const std::string& instance_text,
                                             const std::vector<PromptExample>& examples);

// Digit-randomizing perturbation for building non-leaked PI counterparts.
// Card numbers keep their scheme prefix and are re-balanced so the category
// regex (with Luhn) still matches; names are replaced from a substitution
// gazetteer; bytes outside PII spans are untouched.
struct PerturbConfig {
    std::uint64_t seed = 0;
    std::vector<std::string> name_substitutions;
};

std::string perturb_pii(const std::string& text, const PiiScanner& scanner,
                        const PerturbConfig& cfg);

struct OutputRateConfig {
    DeniedSet denied = DeniedSet::defaults();
    Scorer* scorer = nullptr;
    int jobs = 1;
};

struct OutputRateResult {
    struct PerInstance {
        std::string instance_id;
        double leaked_loglik = 0.0;
        double denied_loglik = 0.0;
        bool output = false;
    };

    std::size_t output_count = 0;
    std::size_t total = 0;  // evaluated (excluded not counted)
    std::size_t excluded = 0;
    std::vector<PerInstance> per_instance;          // in input order
    std::vector<std::string> exclusion_reasons;     // "id: reason"

    Rational rate() const { return total == 0 ? Rational(0, 1) : Rational(output_count, total); }
};

// Fraction of leaked instances whose text is likelier than the mean denied
// likelihood under the same elicitation prompt. Ties count as not-output.
OutputRateResult output_rate(const std::vector<EvalInstance>& instances,
                             const OutputRateConfig& cfg);

// Per-instance outcome of a detection method; nullopt decision = excluded
// (e.g. unparseable self-detection label).
struct InstanceVerdict {
    std::string instance_id;
    std::optional<bool> decision;
    std::optional<double> score;  // threshold methods only
    std::string detail;           // diagnostic, e.g. raw completion
};

struct DetectionRateResult {
    std::size_t correct = 0;
    std::size_t incorrect = 0;
    std::size_t excluded = 0;
    bool exclusion_warning = false;  // excluded > 2% of total

    std::size_t total() const { return correct + incorrect + excluded; }
    double rate() const {
        std::size_t evaluated = correct + incorrect;
        return evaluated == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(evaluated);
    }
};

// Accuracy over the covered instances. Throws CoverageGap if any instance
// lacks a verdict.
DetectionRateResult detection_rate(const std::vector<EvalInstance>& instances,
                                   const std::vector<InstanceVerdict>& verdicts);

// Detection rate per shot count with a fixed instance set and seed.
std::map<std::size_t, DetectionRateResult> ablate_fewshot(const std::vector<std::size_t>& shots,
                                                          const SelfDetectConfig& base,
                                                          Scorer& scorer,
                                                          const std::vector<EvalInstance>& instances,
                                                          int jobs = 1);

struct CompareConfig {
    double k_percent = 20.0;
    TieBreak tie_break = TieBreak::NonLeaked;
    SelfDetectConfig fewshot;
    double calibration_fraction = 0.2;  // stratified 20/80 split
    std::uint64_t split_seed = 0;
    int jobs = 1;
    // Empty = all four methods. The ensemble requires all four.
    std::vector<DetectorMethod> methods;
    bool with_ensemble = true;
};

struct CompareResult {
    // kind -> method -> result; Ensemble included when requested.
    std::map<LeakKind, std::map<DetectorMethod, DetectionRateResult>> rates;
    // (kind, threshold method) -> calibrated tau
    std::map<std::pair<LeakKind, DetectorMethod>, double> thresholds;
    // Per-instance verdicts on the eval split, in eval order per method.
    std::map<DetectorMethod, std::vector<InstanceVerdict>> eval_verdicts;
    std::size_t calibration_count = 0;
    std::size_t eval_count = 0;
};

// Calibrates the threshold methods on a disjoint calibration split, then
// evaluates all four methods plus the ensemble on the eval split.
CompareResult compare_methods(const std::vector<EvalInstance>& instances, Scorer& scorer,
                              const CompareConfig& cfg);

// Deterministic stratified split; returns (calibration, eval) index sets.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_calibration_eval(
    const std::vector<EvalInstance>& instances, double calibration_fraction, std::uint64_t seed);

}  // namespace leakscan
