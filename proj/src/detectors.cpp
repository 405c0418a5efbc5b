#include "leakscan/detectors.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "leakscan/errors.hpp"
#include "leakscan/rng.hpp"

namespace leakscan {

using nlohmann::json;

std::string detector_method_label(DetectorMethod m) {
    switch (m) {
        case DetectorMethod::Loss: return "loss";
        case DetectorMethod::PplZlib: return "pplzlib";
        case DetectorMethod::MinK: return "mink";
        case DetectorMethod::SelfDetect: return "selfdetect";
        case DetectorMethod::Ensemble: return "ensemble";
    }
    return "loss";
}

DetectorMethod detector_method_from_label(const std::string& label) {
    if (label == "loss") return DetectorMethod::Loss;
    if (label == "pplzlib") return DetectorMethod::PplZlib;
    if (label == "mink") return DetectorMethod::MinK;
    if (label == "selfdetect") return DetectorMethod::SelfDetect;
    if (label == "ensemble") return DetectorMethod::Ensemble;
    throw ConfigError("unknown detector method: " + label);
}

ThresholdDirection method_direction(DetectorMethod m) {
    // LOSS and PPL/zlib flag small scores as members; Min-K% flags large.
    return m == DetectorMethod::MinK ? ThresholdDirection::LeakedAbove
                                     : ThresholdDirection::LeakedBelow;
}

DetectorVerdict loss_detect(const ScoredText& st, double tau) {
    double loss = -mean_loglik(st);
    DetectorVerdict v;
    v.method = DetectorMethod::Loss;
    v.score = loss;
    v.decision = loss < tau;
    v.raw = json{{"loss", loss}}.dump();
    return v;
}

std::uint64_t zlib_entropy_bits(const std::string& raw_text) {
    uLongf dest_len = compressBound(static_cast<uLong>(raw_text.size()));
    std::vector<Bytef> dest(dest_len);
    int rc = compress2(dest.data(), &dest_len, reinterpret_cast<const Bytef*>(raw_text.data()),
                       static_cast<uLong>(raw_text.size()), 6);
    if (rc != Z_OK) throw CompressionError("zlib compress2 failed, rc=" + std::to_string(rc));
    return static_cast<std::uint64_t>(dest_len) * 8ULL;
}

DetectorVerdict pplzlib_detect(const ScoredText& st, const std::string& raw_text, double tau) {
    double ln_ppl = -mean_loglik(st);  // ln(perplexity)
    std::uint64_t bits = zlib_entropy_bits(raw_text);
    double score = ln_ppl / static_cast<double>(bits);
    DetectorVerdict v;
    v.method = DetectorMethod::PplZlib;
    v.score = score;
    v.decision = score < tau;
    v.raw = json{{"ln_perplexity", ln_ppl}, {"zlib_bits", bits}}.dump();
    return v;
}

double mink_score(const ScoredText& st, double k_percent) {
    if (st.tokens.empty()) throw PreconditionError("mink on empty ScoredText");
    if (!(k_percent > 0.0) || k_percent > 100.0) {
        throw PreconditionError("k_percent must be in (0, 100]");
    }
    const std::size_t n = st.logprobs.size();
    std::size_t m = static_cast<std::size_t>(
        std::floor(k_percent * static_cast<double>(n) / 100.0));
    if (m < 1) m = 1;
    if (m > n) m = n;
    std::vector<double> sorted = st.logprobs;
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum += sorted[i];
    return sum / static_cast<double>(m);
}

DetectorVerdict mink_detect(const ScoredText& st, double k_percent, double tau) {
    double score = mink_score(st, k_percent);
    DetectorVerdict v;
    v.method = DetectorMethod::MinK;
    v.score = score;
    v.decision = score > tau;
    v.raw = json{{"k_percent", k_percent}}.dump();
    return v;
}

namespace {

void validate_fewshot(const SelfDetectConfig& cfg) {
    if (cfg.n_shots % 2 != 0) throw PreconditionError("n_shots must be even");
    std::size_t leaked = 0, non_leaked = 0;
    for (const auto& [text, label] : cfg.examples) {
        (label ? leaked : non_leaked) += 1;
    }
    if (leaked < cfg.n_shots / 2 || non_leaked < cfg.n_shots / 2) {
        throw InsufficientExamples("need " + std::to_string(cfg.n_shots / 2) +
                                   " examples per class, have " + std::to_string(leaked) +
                                   " leaked / " + std::to_string(non_leaked) + " non-leaked");
    }
}

}  // namespace

std::string build_selfdetect_prompt(const SelfDetectConfig& cfg, const std::string& instance_text) {
    validate_fewshot(cfg);
    for (const auto& [text, label] : cfg.examples) {
        if (text == instance_text) {
            throw ExampleOverlap("instance text equals a few-shot example");
        }
    }

    std::string instruction;
    if (cfg.target_model_name) {
        instruction = "Please answer yes if the given text is included in " +
                      *cfg.target_model_name +
                      "'s pre-training data, and no if it is not included.";
    } else {
        instruction =
            "Please answer yes if the given text is included in your pre-training data, and no if "
            "it is not included.";
    }

    // First n/2 of each class in configured order, then one seeded shuffle.
    std::vector<std::pair<std::string, bool>> shots;
    std::size_t want = cfg.n_shots / 2;
    std::size_t got_leaked = 0, got_non = 0;
    for (const auto& example : cfg.examples) {
        if (example.second && got_leaked < want) {
            shots.push_back(example);
            ++got_leaked;
        } else if (!example.second && got_non < want) {
            shots.push_back(example);
            ++got_non;
        }
    }
    Rng rng(cfg.shuffle_seed);
    rng.shuffle(shots);

    std::string prompt = instruction + "\n\n";
    for (const auto& [text, label] : shots) {
        prompt += "Text: " + text + " Label: " + (label ? "yes" : "no") + "\n";
    }
    if (!shots.empty()) prompt += "\n";
    prompt += "Text: " + instance_text + " Label:";
    return prompt;
}

namespace {

// First alphabetic run of the completion, lowercased.
std::optional<std::string> first_alpha_token(const std::string& s) {
    std::size_t i = 0;
    auto is_alpha = [](unsigned char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    };
    while (i < s.size() && !is_alpha(static_cast<unsigned char>(s[i]))) ++i;
    if (i == s.size()) return std::nullopt;
    std::string token;
    while (i < s.size() && is_alpha(static_cast<unsigned char>(s[i]))) {
        char c = s[i++];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        token.push_back(c);
    }
    return token;
}

}  // namespace

DetectorVerdict selfdetect(Scorer& scorer, const SelfDetectConfig& cfg,
                           const std::string& instance_text) {
    std::string prompt = build_selfdetect_prompt(cfg, instance_text);
    Completion completion = scorer.complete(prompt, cfg.max_label_tokens);
    auto token = first_alpha_token(completion.text);
    if (!token || (*token != "yes" && *token != "no")) {
        throw UnparseableLabel(completion.text);
    }
    DetectorVerdict v;
    v.method = DetectorMethod::SelfDetect;
    v.decision = (*token == "yes");
    v.raw = json{{"completion", completion.text}}.dump();
    return v;
}

DetectorVerdict ensemble(const std::vector<DetectorVerdict>& verdicts, TieBreak tie_break) {
    if (verdicts.size() != 4) {
        throw ArityError("ensemble requires exactly 4 verdicts, got " +
                         std::to_string(verdicts.size()));
    }
    bool seen[4] = {false, false, false, false};
    int leaked_votes = 0;
    for (const auto& v : verdicts) {
        int idx;
        switch (v.method) {
            case DetectorMethod::Loss: idx = 0; break;
            case DetectorMethod::PplZlib: idx = 1; break;
            case DetectorMethod::MinK: idx = 2; break;
            case DetectorMethod::SelfDetect: idx = 3; break;
            default: throw ArityError("ensemble vote from ensemble verdict");
        }
        if (seen[idx]) throw ArityError("duplicate vote for " + detector_method_label(v.method));
        seen[idx] = true;
        if (v.decision) ++leaked_votes;
    }
    DetectorVerdict out;
    out.method = DetectorMethod::Ensemble;
    if (leaked_votes > 2) {
        out.decision = true;
    } else if (leaked_votes < 2) {
        out.decision = false;
    } else {
        out.decision = (tie_break == TieBreak::Leaked);
    }
    out.raw = json{{"leaked_votes", leaked_votes}}.dump();
    return out;
}

double calibrate_threshold(const std::vector<std::pair<double, bool>>& scores,
                           ThresholdDirection direction) {
    std::size_t leaked_total = 0, non_total = 0;
    for (const auto& [score, label] : scores) {
        (label ? leaked_total : non_total) += 1;
        if (!std::isfinite(score)) throw PreconditionError("non-finite calibration score");
    }
    if (leaked_total == 0 || non_total == 0) {
        throw DegenerateLabels("calibration needs both leaked and non-leaked scores");
    }

    std::vector<double> distinct;
    distinct.reserve(scores.size());
    for (const auto& [score, label] : scores) distinct.push_back(score);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<double> candidates;
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
        candidates.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
    }
    if (candidates.empty()) candidates.push_back(distinct.front());

    auto balanced_accuracy = [&](double tau) {
        std::size_t tp = 0, tn = 0;
        for (const auto& [score, label] : scores) {
            bool predicted = direction == ThresholdDirection::LeakedBelow ? score < tau : score > tau;
            if (label && predicted) ++tp;
            if (!label && !predicted) ++tn;
        }
        return 0.5 * (static_cast<double>(tp) / static_cast<double>(leaked_total) +
                      static_cast<double>(tn) / static_cast<double>(non_total));
    };

    double best_tau = candidates.front();
    double best_acc = balanced_accuracy(best_tau);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        double acc = balanced_accuracy(candidates[i]);
        if (acc > best_acc) {
            best_acc = acc;
            best_tau = candidates[i];
        }
    }
    return best_tau;
}

}  // namespace leakscan
