#include <set>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "leakscan/harness.hpp"
#include "leakscan/rng.hpp"
#include "testutil.hpp"

using namespace leakscan;

namespace {

// A separable world: `pairs` leaked/non-leaked instance pairs per kind, with
// the leaked texts memorized by the scorer.
struct MockWorld {
    std::vector<EvalInstance> instances;
    std::unordered_set<std::string> memorized;
    SelfDetectConfig fewshot;

    MockLookupScorer scorer() const { return MockLookupScorer(memorized, -0.1, -5.0); }
};

MockWorld make_world(std::size_t pairs_per_kind, std::uint64_t seed) {
    MockWorld world;
    Rng rng(seed);
    for (LeakKind kind : {LeakKind::PI, LeakKind::CT, LeakKind::BM}) {
        for (std::size_t i = 0; i < pairs_per_kind; ++i) {
            std::string stem = leak_kind_label(kind) + std::to_string(i);
            EvalInstance leaked;
            leaked.instance_id = stem;
            leaked.kind = kind;
            leaked.text = "member " + stem + " " + testutil::filler_text(rng, 30, 300);
            leaked.elicitation_prompt = "Prompt for " + stem;
            leaked.gold = GoldLabel::Leaked;
            leaked.provenance = Provenance::FromCorpusScan;
            world.memorized.insert(leaked.text);

            EvalInstance non = leaked;
            non.instance_id = stem + "#non";
            non.text = "outsider " + stem + " " + testutil::filler_text(rng, 30, 300);
            non.gold = GoldLabel::NonLeaked;
            non.provenance = Provenance::Perturbed;

            world.instances.push_back(leaked);
            world.instances.push_back(non);
        }
    }
    // few-shot examples disjoint from the instances
    world.fewshot.n_shots = 16;
    for (int i = 0; i < 8; ++i) {
        std::string leaked_example = "example member " + std::to_string(i);
        world.memorized.insert(leaked_example);
        world.fewshot.examples.push_back({leaked_example, true});
    }
    for (int i = 0; i < 8; ++i) {
        world.fewshot.examples.push_back({"example outsider " + std::to_string(i), false});
    }
    world.fewshot.shuffle_seed = seed;
    return world;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("output_rate is 1.0 when leaked texts are memorized, 0.0 when denials are") {
    MockWorld world = make_world(6, 1);
    std::vector<EvalInstance> leaked;
    for (const auto& instance : world.instances) {
        if (instance.gold == GoldLabel::Leaked) leaked.push_back(instance);
    }

    MockLookupScorer member_scorer = world.scorer();
    OutputRateConfig cfg;
    cfg.scorer = &member_scorer;
    OutputRateResult result = output_rate(leaked, cfg);
    CHECK(result.total == leaked.size());
    CHECK(result.rate() == Rational(1, 1));

    // memorize the denial texts instead
    DeniedSet defaults = DeniedSet::defaults();
    std::unordered_set<std::string> denials(defaults.texts().begin(), defaults.texts().end());
    MockLookupScorer denial_scorer(denials, -0.1, -5.0);
    OutputRateConfig cfg2;
    cfg2.scorer = &denial_scorer;
    OutputRateResult zero = output_rate(leaked, cfg2);
    CHECK(zero.rate() == Rational(0, 1));
}

TEST_CASE("output_rate counts ties as not-output") {
    // nothing memorized: leaked text and denials all score lo -> tie
    MockLookupScorer scorer({}, -0.1, -5.0);
    MockWorld world = make_world(3, 2);
    std::vector<EvalInstance> leaked;
    for (const auto& instance : world.instances) {
        if (instance.gold == GoldLabel::Leaked) leaked.push_back(instance);
    }
    OutputRateConfig cfg;
    cfg.scorer = &scorer;
    OutputRateResult result = output_rate(leaked, cfg);
    CHECK(result.output_count == 0);
}

TEST_CASE("output_rate requires prompts and a scorer") {
    MockWorld world = make_world(1, 3);
    MockLookupScorer scorer = world.scorer();
    std::vector<EvalInstance> missing_prompt = {world.instances[0]};
    missing_prompt[0].elicitation_prompt.clear();
    OutputRateConfig cfg;
    cfg.scorer = &scorer;
    CHECK_THROWS_AS(output_rate(missing_prompt, cfg), PreconditionError);
    OutputRateConfig no_scorer;
    CHECK_THROWS_AS(output_rate({}, no_scorer), PreconditionError);
}

TEST_CASE("output_rate is invariant under instance reordering") {
    MockWorld world = make_world(5, 4);
    std::vector<EvalInstance> leaked;
    for (const auto& instance : world.instances) {
        if (instance.gold == GoldLabel::Leaked) leaked.push_back(instance);
    }
    MockLookupScorer scorer = world.scorer();
    OutputRateConfig cfg;
    cfg.scorer = &scorer;
    auto forward = output_rate(leaked, cfg);
    std::reverse(leaked.begin(), leaked.end());
    auto reversed = output_rate(leaked, cfg);
    CHECK(forward.rate() == reversed.rate());
    CHECK(forward.output_count == reversed.output_count);
}

TEST_CASE("detection_rate accuracy, exclusions, and coverage gaps") {
    MockWorld world = make_world(4, 5);
    const auto& instances = world.instances;

    std::vector<InstanceVerdict> all_correct;
    for (const auto& instance : instances) {
        all_correct.push_back({instance.instance_id, instance.gold == GoldLabel::Leaked});
    }
    DetectionRateResult perfect = detection_rate(instances, all_correct);
    CHECK(perfect.rate() == doctest::Approx(1.0));
    CHECK(perfect.correct + perfect.incorrect + perfect.excluded == instances.size());

    // constant-yes on a balanced set -> 0.5
    std::vector<InstanceVerdict> constant_yes;
    for (const auto& instance : instances) {
        constant_yes.push_back({instance.instance_id, true});
    }
    CHECK(detection_rate(instances, constant_yes).rate() == doctest::Approx(0.5));

    // missing verdict -> CoverageGap
    std::vector<InstanceVerdict> missing(all_correct.begin(), all_correct.end() - 1);
    CHECK_THROWS_AS(detection_rate(instances, missing), CoverageGap);

    // excluded instances leave the denominator; >2% sets the warning
    std::vector<InstanceVerdict> with_excluded = all_correct;
    with_excluded[0].decision = std::nullopt;
    DetectionRateResult excluded = detection_rate(instances, with_excluded);
    CHECK(excluded.excluded == 1);
    CHECK(excluded.rate() == doctest::Approx(1.0));
    CHECK(excluded.exclusion_warning);  // 1/24 > 2%
}

TEST_CASE("split is deterministic, disjoint, and stratified") {
    MockWorld world = make_world(25, 6);
    auto [cal_a, eval_a] = split_calibration_eval(world.instances, 0.2, 11);
    auto [cal_b, eval_b] = split_calibration_eval(world.instances, 0.2, 11);
    CHECK(cal_a == cal_b);
    CHECK(eval_a == eval_b);
    CHECK(cal_a.size() + eval_a.size() == world.instances.size());
    std::set<std::size_t> seen(cal_a.begin(), cal_a.end());
    for (std::size_t i : eval_a) CHECK(seen.insert(i).second);
    // both gold labels present per kind on the calibration side
    std::map<std::pair<int, int>, int> strata;
    for (std::size_t i : cal_a) {
        strata[{static_cast<int>(world.instances[i].kind),
                static_cast<int>(world.instances[i].gold)}] += 1;
    }
    CHECK(strata.size() == 6);  // 3 kinds x 2 labels

    auto [cal_c, eval_c] = split_calibration_eval(world.instances, 0.2, 12);
    CHECK(cal_a != cal_c);
}

TEST_CASE("compare_methods: separable world gives rate 1.0 everywhere") {
    MockWorld world = make_world(20, 7);
    MockLookupScorer scorer = world.scorer();
    CompareConfig cfg;
    cfg.fewshot = world.fewshot;
    cfg.split_seed = 13;
    CompareResult result = compare_methods(world.instances, scorer, cfg);

    REQUIRE(result.rates.size() == 3);
    for (const auto& [kind, methods] : result.rates) {
        REQUIRE(methods.size() == 5);  // 4 methods + ensemble
        for (const auto& [method, r] : methods) {
            CAPTURE(detector_method_label(method));
            CHECK(r.rate() == doctest::Approx(1.0));
            CHECK(r.excluded == 0);
        }
    }
    CHECK(result.calibration_count + result.eval_count == world.instances.size());
}

TEST_CASE("compare_methods respects the requested method subset") {
    MockWorld world = make_world(10, 8);
    MockLookupScorer scorer = world.scorer();
    CompareConfig cfg;
    cfg.fewshot = world.fewshot;
    cfg.methods = {DetectorMethod::Loss, DetectorMethod::MinK};
    cfg.with_ensemble = false;
    CompareResult result = compare_methods(world.instances, scorer, cfg);
    for (const auto& [kind, methods] : result.rates) {
        CHECK(methods.size() == 2);
        CHECK(methods.count(DetectorMethod::Loss) == 1);
        CHECK(methods.count(DetectorMethod::MinK) == 1);
    }
    CompareConfig bad = cfg;
    bad.with_ensemble = true;
    CHECK_THROWS_AS(compare_methods(world.instances, scorer, bad), ArityError);
}

TEST_CASE("compare_methods rejects duplicate instance ids") {
    MockWorld world = make_world(3, 9);
    world.instances.push_back(world.instances.front());
    MockLookupScorer scorer = world.scorer();
    CompareConfig cfg;
    cfg.fewshot = world.fewshot;
    CHECK_THROWS_AS(compare_methods(world.instances, scorer, cfg), SplitOverlap);
}

TEST_CASE("label-shuffled world stays within the binomial band") {
    MockWorld world = make_world(150, 10);  // 900 instances
    // shuffle gold labels, keeping balance
    std::vector<GoldLabel> labels;
    for (const auto& instance : world.instances) labels.push_back(instance.gold);
    Rng rng(14);
    rng.shuffle(labels);
    for (std::size_t i = 0; i < labels.size(); ++i) world.instances[i].gold = labels[i];

    MockLookupScorer scorer = world.scorer();
    CompareConfig cfg;
    cfg.fewshot = world.fewshot;
    cfg.split_seed = 15;
    CompareResult result = compare_methods(world.instances, scorer, cfg);

    std::size_t correct = 0, evaluated = 0;
    for (const auto& [kind, methods] : result.rates) {
        for (const auto& [method, r] : methods) {
            correct += r.correct;
            evaluated += r.correct + r.incorrect;
        }
    }
    (void)correct;
    for (const auto& [kind, methods] : result.rates) {
        for (const auto& [method, r] : methods) {
            double n = static_cast<double>(r.correct + r.incorrect);
            REQUIRE(n > 0);
            double band = 3.0 * std::sqrt(0.25 / n);
            CAPTURE(detector_method_label(method));
            CHECK(std::abs(r.rate() - 0.5) <= band + 1e-9);
        }
    }
}

TEST_CASE("ensemble rate is at least the weakest method on the mock worlds") {
    for (std::uint64_t seed : {21ULL, 22ULL, 23ULL}) {
        MockWorld world = make_world(12, seed);
        MockLookupScorer scorer = world.scorer();
        CompareConfig cfg;
        cfg.fewshot = world.fewshot;
        cfg.split_seed = seed;
        CompareResult result = compare_methods(world.instances, scorer, cfg);
        for (const auto& [kind, methods] : result.rates) {
            double weakest = 1.0;
            for (const auto& [method, r] : methods) {
                if (method != DetectorMethod::Ensemble) weakest = std::min(weakest, r.rate());
            }
            CHECK(methods.at(DetectorMethod::Ensemble).rate() >= weakest - 1e-9);
        }
    }
}

TEST_CASE("ablate_fewshot: rule mock jumps from chance at 0 shots to perfect") {
    MockWorld world = make_world(12, 11);
    MockLookupScorer scorer = world.scorer();
    auto results = ablate_fewshot({0, 2, 4, 8, 16}, world.fewshot, scorer, world.instances);
    REQUIRE(results.size() == 5);
    CHECK(results.at(0).rate() == doctest::Approx(0.5));  // constant "no" on balanced set
    CHECK(results.at(2).rate() == doctest::Approx(1.0));
    CHECK(results.at(16).rate() == doctest::Approx(1.0));
    double prev = -1.0;
    for (const auto& [shots, r] : results) {
        CHECK(r.rate() >= prev - 1e-12);
        prev = r.rate();
    }
}

TEST_CASE("ablate_fewshot validates the shot list") {
    MockWorld world = make_world(2, 12);
    MockLookupScorer scorer = world.scorer();
    CHECK_THROWS_AS(ablate_fewshot({0, 3}, world.fewshot, scorer, world.instances),
                    PreconditionError);
    CHECK_THROWS_AS(ablate_fewshot({2, 4}, world.fewshot, scorer, world.instances),
                    PreconditionError);  // missing 0
    CHECK_THROWS_AS(ablate_fewshot({0, 40}, world.fewshot, scorer, world.instances),
                    InsufficientExamples);
}

TEST_CASE("ablation rates recompute bit-identically offline from a cassette") {
    MockWorld world = make_world(6, 19);

    // live server implementing the self-detection rule over HTTP
    httplib::Server server;
    server.Post("/complete", [&](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        std::string prompt = body["prompt"].get<std::string>();
        std::string answer = " no";
        std::size_t label_count = 0, pos = 0;
        while ((pos = prompt.find("Label:", pos)) != std::string::npos) {
            ++label_count;
            pos += 6;
        }
        if (label_count > 1) {
            std::size_t text_pos = prompt.rfind("Text: ");
            std::size_t label_pos = prompt.rfind(" Label:");
            std::string instance = prompt.substr(text_pos + 6, label_pos - text_pos - 6);
            if (world.memorized.count(instance)) answer = " yes";
        }
        res.set_content(nlohmann::json{{"text", answer}}.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    auto dir = testutil::scratch_dir("harness_cassette");
    RemoteScorerConfig record_cfg;
    record_cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    record_cfg.model = "m";
    record_cfg.cassette_path = (dir / "cassette.jsonl").string();
    record_cfg.cassette_mode = CassetteMode::Record;

    std::map<std::size_t, DetectionRateResult> live;
    {
        RemoteScorer scorer(record_cfg);
        live = ablate_fewshot({0, 2, 4}, world.fewshot, scorer, world.instances);
    }
    server.stop();
    server_thread.join();

    RemoteScorerConfig replay_cfg = record_cfg;
    replay_cfg.cassette_mode = CassetteMode::Replay;
    RemoteScorer replay(replay_cfg);
    auto offline = ablate_fewshot({0, 2, 4}, world.fewshot, replay, world.instances);

    REQUIRE(offline.size() == live.size());
    for (const auto& [shots, r] : live) {
        CHECK(offline.at(shots).correct == r.correct);
        CHECK(offline.at(shots).incorrect == r.incorrect);
        CHECK(offline.at(shots).excluded == r.excluded);
        CHECK(offline.at(shots).rate() == r.rate());
    }
    CHECK(live.at(0).rate() < live.at(4).rate());
}

TEST_CASE("eval instance jsonl round trip") {
    MockWorld world = make_world(1, 13);
    const EvalInstance& original = world.instances.front();
    EvalInstance parsed = eval_instance_from_jsonl(eval_instance_to_jsonl(original));
    CHECK(parsed.instance_id == original.instance_id);
    CHECK(parsed.kind == original.kind);
    CHECK(parsed.text == original.text);
    CHECK(parsed.elicitation_prompt == original.elicitation_prompt);
    CHECK(parsed.gold == original.gold);
    CHECK(parsed.provenance == original.provenance);
}

TEST_CASE("denied set arity is enforced") {
    CHECK_THROWS_AS(DeniedSet({"only one"}), ArityError);
    CHECK(DeniedSet::defaults().texts().size() == 8);
}

TEST_CASE("rates are invariant under parallel evaluation") {
    MockWorld world = make_world(16, 15);
    MockLookupScorer scorer = world.scorer();

    std::vector<EvalInstance> leaked;
    for (const auto& instance : world.instances) {
        if (instance.gold == GoldLabel::Leaked) leaked.push_back(instance);
    }
    OutputRateConfig serial;
    serial.scorer = &scorer;
    serial.jobs = 1;
    OutputRateConfig parallel = serial;
    parallel.jobs = 4;
    auto a = output_rate(leaked, serial);
    auto b = output_rate(leaked, parallel);
    CHECK(a.rate() == b.rate());
    REQUIRE(a.per_instance.size() == b.per_instance.size());
    for (std::size_t i = 0; i < a.per_instance.size(); ++i) {
        CHECK(a.per_instance[i].instance_id == b.per_instance[i].instance_id);
        CHECK(a.per_instance[i].leaked_loglik == b.per_instance[i].leaked_loglik);
    }

    CompareConfig cc;
    cc.fewshot = world.fewshot;
    cc.split_seed = 16;
    CompareConfig cc4 = cc;
    cc4.jobs = 4;
    CompareResult ra = compare_methods(world.instances, scorer, cc);
    CompareResult rb = compare_methods(world.instances, scorer, cc4);
    REQUIRE(ra.rates.size() == rb.rates.size());
    for (const auto& [kind, methods] : ra.rates) {
        for (const auto& [method, r] : methods) {
            CHECK(r.rate() == rb.rates.at(kind).at(method).rate());
        }
    }
    CHECK(ra.thresholds == rb.thresholds);
}

TEST_CASE("an eval instance equal to a few-shot example fails loudly") {
    MockWorld world = make_world(4, 18);
    for (auto& instance : world.instances) {
        if (instance.gold == GoldLabel::Leaked) {
            instance.text = world.fewshot.examples[0].first;
        }
    }
    MockLookupScorer scorer = world.scorer();
    CompareConfig cfg;
    cfg.fewshot = world.fewshot;
    CHECK_THROWS_AS(compare_methods(world.instances, scorer, cfg), ExampleOverlap);
}

TEST_CASE("scorer errors exclude the instance with a report entry") {
    struct FlakyScorer : Scorer {
        MockLookupScorer inner;
        explicit FlakyScorer(std::unordered_set<std::string> memorized)
            : inner(std::move(memorized), -0.1, -5.0) {}
        ScoredText score(const std::string& prompt, const std::string& continuation) override {
            if (continuation.find("poison") != std::string::npos) {
                throw RemoteError(500, "synthetic failure");
            }
            return inner.score(prompt, continuation);
        }
        Completion complete(const std::string& prompt, std::size_t max_tokens) override {
            return inner.complete(prompt, max_tokens);
        }
        std::string id() const override { return "flaky"; }
    };

    MockWorld world = make_world(4, 17);
    std::vector<EvalInstance> leaked;
    for (const auto& instance : world.instances) {
        if (instance.gold == GoldLabel::Leaked) leaked.push_back(instance);
    }
    leaked[1].text = "poison " + leaked[1].text;

    FlakyScorer scorer(world.memorized);
    OutputRateConfig cfg;
    cfg.scorer = &scorer;
    OutputRateResult result = output_rate(leaked, cfg);
    CHECK(result.excluded == 1);
    CHECK(result.total == leaked.size() - 1);
    REQUIRE(result.exclusion_reasons.size() == 1);
    CHECK(result.exclusion_reasons[0].find(leaked[1].instance_id) == 0);
}

}  // TEST_SUITE
