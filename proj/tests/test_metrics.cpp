#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "biasamp/errors.hpp"
#include "biasamp/metrics.hpp"
#include "biasamp/rng.hpp"

using namespace biasamp;

namespace {

AmplificationResult result_for(const std::string& occupation, double t, double g) {
    BiasMeasurement m;
    m.occupation = occupation;
    m.prompt_id = "1";
    m.t_pct = t;
    m.g_pct = g;
    m.n_train = 500;
    m.n_gen = 500;
    return evaluate_amplification(std::move(m));
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("amplification formula fixtures") {
    CHECK(amplification(25.0, 10.0) == 15.0);
    CHECK(amplification(10.0, 10.0) == 0.0);
    CHECK(amplification(73.5, 73.5) == 0.0);
    CHECK(amplification(25.0, 30.0) == -5.0);
    CHECK_THROWS_AS(amplification(-1.0, 50.0), std::invalid_argument);
    CHECK_THROWS_AS(amplification(50.0, 101.0), std::invalid_argument);
}

TEST_CASE("amplification symmetries") {
    Rng rng(5150);
    for (int trial = 0; trial < 2000; ++trial) {
        const double t = 100.0 * rng.uniform();
        const double g = 100.0 * rng.uniform();
        CHECK(amplification(t, g) == -amplification(g, t));
        CHECK(amplification(t, g) ==
              doctest::Approx(amplification(100.0 - t, 100.0 - g)).epsilon(1e-12));
        CHECK(std::fabs(amplification(t, g)) <= 50.0);
    }
    CHECK(amplification(50.0, 0.0) == 50.0);
    CHECK(amplification(50.0, 100.0) == 50.0);
}

TEST_CASE("direction switch rules") {
    CHECK(direction_switch(40.0, 55.0));
    CHECK(direction_switch(55.0, 40.0));
    CHECK_FALSE(direction_switch(50.0, 80.0));  // exactly 50 never switches
    CHECK_FALSE(direction_switch(80.0, 50.0));
    CHECK_FALSE(direction_switch(40.0, 45.0));
    CHECK_FALSE(direction_switch(60.0, 99.0));
}

TEST_CASE("expected amplification with exclusions") {
    std::vector<AmplificationResult> results = {
        result_for("a", 25.0, 10.0),  // A = 15
        result_for("b", 30.0, 30.0),  // A = 0
        result_for("c", 25.0, 30.0),  // A = -5
    };
    CHECK(expected_amplification(results) == doctest::Approx(10.0 / 3.0).epsilon(1e-12));

    results.push_back(result_for("d", 40.0, 60.0));  // direction switch, excluded
    CHECK(results.back().excluded);
    CHECK(results.back().reason == ExclusionReason::DirectionSwitch);
    CHECK(expected_amplification(results) == doctest::Approx(10.0 / 3.0).epsilon(1e-12));

    std::vector<AmplificationResult> all_excluded = {result_for("x", 40.0, 60.0)};
    CHECK_THROWS_AS(expected_amplification(all_excluded), DataError);
}

TEST_CASE("expected amplification is permutation-invariant and matches a plain mean") {
    Rng rng(62);
    std::vector<AmplificationResult> results;
    for (int i = 0; i < 62; ++i)
        results.push_back(
            result_for("occ" + std::to_string(i), 100.0 * rng.uniform(), 100.0 * rng.uniform()));

    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : results) {
        if (r.excluded) continue;
        sum += std::fabs(r.measurement.g_pct - 50.0) - std::fabs(r.measurement.t_pct - 50.0);
        ++n;
    }
    REQUIRE(n >= 1);
    const double want = sum / static_cast<double>(n);
    CHECK(std::fabs(expected_amplification(results) - want) < 1e-9);

    std::mt19937 shuffler(3);
    std::shuffle(results.begin(), results.end(), shuffler);
    CHECK(std::fabs(expected_amplification(results) - want) < 1e-12);
}

TEST_CASE("prompt averages over canned four-prompt rows") {
    const std::vector<double> naive = {10.24, 17.57, 10.77, 11.68};
    CHECK(prompt_average(naive) == doctest::Approx(12.565).epsilon(1e-9));
    const std::vector<double> no_ind = {6.49, 13.58, 7.09, 7.49};
    CHECK(prompt_average(no_ind) == doctest::Approx(8.6625).epsilon(1e-9));
    const std::vector<double> equal = {3.3, 3.3, 3.3, 3.3};
    CHECK(prompt_average(equal) == doctest::Approx(3.3).epsilon(1e-12));
    const std::vector<double> empty;
    CHECK_THROWS_AS(prompt_average(empty), std::invalid_argument);
}

TEST_CASE("gender match accuracy") {
    using P = std::pair<GenderLabel, GenderLabel>;
    const std::vector<P> all = {{GenderLabel::Female, GenderLabel::Female},
                                {GenderLabel::Male, GenderLabel::Male}};
    CHECK(gender_match_accuracy(all) == 100.0);
    const std::vector<P> half = {{GenderLabel::Female, GenderLabel::Female},
                                 {GenderLabel::Male, GenderLabel::Female}};
    CHECK(gender_match_accuracy(half) == 50.0);
    const std::vector<P> none;
    CHECK_THROWS_AS(gender_match_accuracy(none), DataError);
}

TEST_CASE("captions-as-prompts with a perfect mimic has zero amplification") {
    Corpus corpus;
    TrainingSubset subset;
    subset.occupation = "engineer";
    std::map<std::string, std::vector<GenerationRecord>> generations;
    Rng rng(17);
    for (int i = 0; i < 60; ++i) {
        const std::string id = "e" + std::to_string(i);
        const bool female = rng.bernoulli(0.3);
        corpus.add({id, "an engineer near the harbor " + std::to_string(i), 1,
                    female ? 0.99 : 0.01});
        subset.ids.push_back(id);
        for (int j = 0; j < 10; ++j)
            generations[id].push_back({"engineer", id, j, 1, female ? 0.99 : 0.01});
    }
    const auto out = captions_as_prompts_eval(corpus, subset, generations, 0.9, 10);
    CHECK(out.result.amplification == 0.0);
    CHECK_FALSE(out.result.excluded);
    CHECK(out.captions_evaluated == 60);
    CHECK(out.dropped_no_generations == 0);
    CHECK(out.result.measurement.n_gen == 600);
}

TEST_CASE("captions without usable generations are dropped and counted") {
    Corpus corpus;
    TrainingSubset subset;
    subset.occupation = "chef";
    std::map<std::string, std::vector<GenerationRecord>> generations;
    for (int i = 0; i < 10; ++i) {
        const std::string id = "c" + std::to_string(i);
        corpus.add({id, "a chef by the market " + std::to_string(i), 1, 0.99});
        subset.ids.push_back(id);
        if (i < 6) generations[id].push_back({"chef", id, 0, 1, 0.99});
        if (i == 6) generations[id].push_back({"chef", id, 0, 2, 0.99});  // filtered out
    }
    const auto out = captions_as_prompts_eval(corpus, subset, generations, 0.9, 10);
    CHECK(out.captions_evaluated == 6);
    CHECK(out.dropped_no_generations == 4);
    CHECK(out.short_generation_captions == 6);  // fewer than 10 images each

    const std::map<std::string, std::vector<GenerationRecord>> no_gens;
    CHECK_THROWS_AS(captions_as_prompts_eval(corpus, subset, no_gens, 0.9, 10), DataError);
}

}  // TEST_SUITE
