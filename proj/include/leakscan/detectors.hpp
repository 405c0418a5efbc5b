#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "leakscan/scorer.hpp"

namespace leakscan {

enum class DetectorMethod { Loss, PplZlib, MinK, SelfDetect, Ensemble };

std::string detector_method_label(DetectorMethod m);
DetectorMethod detector_method_from_label(const std::string& label);

enum class TieBreak { NonLeaked, Leaked };

// Orientation of a threshold method: whether small or large scores mean
// "leaked".
enum class ThresholdDirection { LeakedBelow, LeakedAbove };

struct SelfDetectConfig {
    std::size_t n_shots = 16;  // balanced: n/2 leaked + n/2 non-leaked
    std::vector<std::pair<std::string, bool>> examples;  // (text, leaked)
    std::optional<std::string> target_model_name;  // set for the cross-model variant
    std::uint64_t shuffle_seed = 0;
    std::size_t max_label_tokens = 8;
};

struct DetectorConfig {
    DetectorMethod method = DetectorMethod::Loss;
    double threshold = 0.0;
    double k_percent = 20.0;  // Min-K% default from the method's literature
    SelfDetectConfig fewshot;
    TieBreak tie_break = TieBreak::NonLeaked;
};

struct DetectorVerdict {
    DetectorMethod method = DetectorMethod::Loss;
    std::optional<double> score;  // absent for self-detection
    bool decision = false;        // true = leaked
    std::string raw;              // diagnostic payload, JSON
};

// LOSS: leaked iff negative mean log-likelihood falls below tau.
DetectorVerdict loss_detect(const ScoredText& st, double tau);

// 8 x compressed byte length under the zlib container at level 6.
std::uint64_t zlib_entropy_bits(const std::string& raw_text);

// PPL/zlib: leaked iff ln(perplexity) / zlib entropy bits falls below tau.
DetectorVerdict pplzlib_detect(const ScoredText& st, const std::string& raw_text, double tau);

// Min-K%: mean of the m = max(1, floor(k% * n / 100)) smallest logprobs;
// leaked iff that mean exceeds tau.
DetectorVerdict mink_detect(const ScoredText& st, double k_percent, double tau);
double mink_score(const ScoredText& st, double k_percent);

// Few-shot membership prompt; byte-exact against the golden fixtures. The
// instruction names the target model when target_model_name is set.
std::string build_selfdetect_prompt(const SelfDetectConfig& cfg, const std::string& instance_text);

// Runs the few-shot prompt through the scorer's greedy completion and parses
// the first alphabetic token as yes/no. Throws UnparseableLabel otherwise.
DetectorVerdict selfdetect(Scorer& scorer, const SelfDetectConfig& cfg,
                           const std::string& instance_text);

// Majority vote over exactly 4 verdicts (one per method); 2-2 ties resolve
// by tie_break.
DetectorVerdict ensemble(const std::vector<DetectorVerdict>& verdicts, TieBreak tie_break);

// Threshold maximizing balanced accuracy over midpoints of adjacent sorted
// scores; ties break toward the smaller threshold. Scores pair with gold
// labels (true = leaked).
double calibrate_threshold(const std::vector<std::pair<double, bool>>& scores,
                           ThresholdDirection direction);

ThresholdDirection method_direction(DetectorMethod m);

}  // namespace leakscan
