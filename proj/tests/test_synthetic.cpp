#include <doctest.h>

#include <cmath>
#include <set>

#include "biasamp/errors.hpp"
#include "biasamp/indicator.hpp"
#include "biasamp/labeling.hpp"
#include "biasamp/rng.hpp"
#include "biasamp/synthetic.hpp"
#include "testutil.hpp"

using namespace biasamp;

TEST_SUITE("synthetic") {

TEST_CASE("closed-form conditional") {
    // Indicator rate independent of gender: no shift.
    for (double r : {0.1, 0.25, 0.5, 0.9})
        CHECK(closed_form_conditional(r, 0.4, 0.4) == doctest::Approx(r).epsilon(1e-12));
    CHECK(closed_form_conditional(0.25, 0.68, 0.30) ==
          doctest::Approx(0.13223140495867772).epsilon(1e-12));
    // Composed with the amplification formula.
    const double g = 100.0 * closed_form_conditional(0.25, 0.68, 0.30);
    CHECK(std::fabs(g - 50.0) - std::fabs(25.0 - 50.0) ==
          doctest::Approx(11.776859504132226).epsilon(1e-9));
    CHECK_THROWS_AS(closed_form_conditional(0.5, 1.0, 1.0), DataError);
    CHECK_THROWS_AS(closed_form_conditional(1.2, 0.5, 0.5), std::invalid_argument);
}

TEST_CASE("hash vectors are deterministic unit vectors") {
    const auto v1 = hash_vector("some caption text", 64, 9);
    const auto v2 = hash_vector("some caption text", 64, 9);
    CHECK(v1 == v2);
    CHECK(hash_vector("some caption text", 64, 10) != v1);
    CHECK(hash_vector("other caption text", 64, 9) != v1);

    double norm_sq = 0.0;
    for (float x : v1) norm_sq += double(x) * double(x);
    CHECK(std::sqrt(norm_sq) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS_AS(hash_vector("x", 1, 0), std::invalid_argument);
}

TEST_CASE("distinct texts hash to nearly orthogonal vectors") {
    double max_abs_cos = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto a = hash_vector("text_a_" + std::to_string(trial), 64, 1);
        const auto b = hash_vector("text_b_" + std::to_string(trial), 64, 1);
        double dot = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) dot += double(a[i]) * double(b[i]);
        max_abs_cos = std::max(max_abs_cos, std::fabs(dot));
    }
    CHECK(max_abs_cos < 0.5);
}

TEST_CASE("shift_log_odds basics") {
    CHECK(shift_log_odds(0.5, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(shift_log_odds(0.25, 0.0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(shift_log_odds(0.0, 3.0) == 0.0);
    CHECK(shift_log_odds(1.0, -3.0) == 1.0);
    CHECK(shift_log_odds(0.6, 0.5) > 0.6);
    CHECK(shift_log_odds(0.6, 1.0) > shift_log_odds(0.6, 0.5));
}

TEST_CASE("bundles are deterministic and internally consistent") {
    SyntheticSpec spec = paradox_spec(77, 1500, 40);
    const auto a = gen_bundle(spec);
    const auto b = gen_bundle(spec);
    REQUIRE(a.corpus.size() == b.corpus.size());
    for (std::size_t i = 0; i < a.corpus.size(); ++i) {
        CHECK(a.corpus.records()[i].id == b.corpus.records()[i].id);
        CHECK(a.corpus.records()[i].text == b.corpus.records()[i].text);
    }
    REQUIRE(a.generations.size() == b.generations.size());
    for (std::size_t i = 0; i < a.generations.size(); ++i)
        CHECK(a.generations[i].p_female == b.generations[i].p_female);

    // Every caption id has an embedding; prompts are embedded too.
    for (const auto& rec : a.corpus.records()) CHECK(a.embeddings.contains(rec.id));
    for (int t = 1; t <= 4; ++t) CHECK(a.embeddings.contains(prompt_embedding_id(t, "mechanic")));
    CHECK(a.embeddings.size() == a.corpus.size() + 4);

    // 4 prompts x 40 generations + 500 captions-as-prompts x 10 images.
    CHECK(a.generations.size() == 4 * 40 + 500 * 10);
}

TEST_CASE("every injected indicator is detected and caption rates match the spec") {
    const auto bundle = gen_bundle(paradox_spec(31, 12'000, 10));
    testutil::TempDir dir("synth_names");
    write_bundle(bundle, dir.path());
    const auto names = NameGenderTable::load(dir / "names.tsv");
    const auto lexicon = IndicatorLexicon::defaults();

    std::size_t indicated = 0, female = 0, mixed = 0;
    for (const auto& rec : bundle.corpus.records()) {
        const auto verdict = detect_indicators(rec.text, lexicon, names);
        if (verdict.value == IndicatorVerdictKind::Mixed) ++mixed;
        if (verdict.value != IndicatorVerdictKind::None) {
            ++indicated;
            // Indicator gender equals the sampled image gender by construction.
            const bool is_female = *rec.p_female >= 0.5;
            CHECK(verdict.value ==
                  (is_female ? IndicatorVerdictKind::Female : IndicatorVerdictKind::Male));
        }
        if (*rec.p_female >= 0.5) ++female;
    }
    CHECK(mixed == 0);
    const double n = static_cast<double>(bundle.corpus.size());
    CHECK(std::fabs(100.0 * double(female) / n - 25.0) < 1.5);
    // Mixture share: 0.25*0.68 + 0.75*0.30 = 0.395.
    CHECK(std::fabs(100.0 * double(indicated) / n - 39.5) < 1.5);
}

TEST_CASE("faithful model with gender-independent indicators shows no amplification") {
    SyntheticSpec spec;
    spec.seed = 12;
    spec.classes = {{1, 0.9, 1.0}};
    spec.occupations = {{"teacher", 0.35, 0.4, 0.4, 8000, {}}};
    spec.generations_per_prompt = 500;
    const auto bundle = gen_bundle(spec);
    const auto& truth = bundle.ground_truth.at("teacher");
    CHECK(truth.no_indicator_female_rate == doctest::Approx(0.35).epsilon(1e-12));
    CHECK(truth.generation_female_rate == doctest::Approx(0.35).epsilon(1e-12));

    // Measured naive amplification: training rate vs pooled generation rate.
    std::vector<ImageMeta> train_metas, gen_metas;
    for (const auto& rec : bundle.corpus.records()) train_metas.push_back(to_image_meta(rec));
    for (const auto& rec : bundle.generations)
        if (rec.prompt_id.size() == 1) gen_metas.push_back(to_image_meta(rec));
    const double t = pct_female(filter_and_label(train_metas, 0.9));
    const double g = pct_female(filter_and_label(gen_metas, 0.9));
    CHECK(std::fabs((std::fabs(g - 50.0) - std::fabs(t - 50.0))) < 2.0);
}

TEST_CASE("nn selection concentrates on the high-affinity class") {
    SyntheticSpec spec;
    spec.seed = 21;
    spec.classes = {{1, 0.8, 1.0}, {2, 0.5, 1.0}};
    spec.occupations = {{"pilot", 0.5, 0.3, 0.3, 3000, {}}};
    spec.generations_per_prompt = 10;
    const auto bundle = gen_bundle(spec);

    // Class membership shows up as two well-separated similarity bands around
    // the prompt anchor; requiring the top-k to sit in the upper band checks
    // that selection lands on the high-affinity class.
    std::vector<std::string> ids;
    for (const auto& rec : bundle.corpus.records()) ids.push_back(rec.id);
    const auto query = bundle.embeddings.vec(prompt_embedding_id(1, "pilot"));
    const auto top = top_k_neighbors(bundle.embeddings, query, ids, 500);
    REQUIRE(top.size() == 500);
    std::size_t high = 0;
    for (const auto& nb : top)
        if (nb.similarity > 0.85) ++high;  // class-1 sits near 0.97, class-2 near 0.71
    CHECK(double(high) / 500.0 >= 0.95);
}

TEST_CASE("ground truth for the skewed suite stays on one side of 50%") {
    const auto spec = skew_suite_spec(5, 0.0, 10, 1);
    CHECK(spec.occupations.size() == 62);
    for (const auto& occ : spec.occupations) {
        const double r = occ.true_female_rate;
        CHECK(r >= 0.05 - 1e-12);
        CHECK(r <= 0.95 + 1e-12);
        for (const auto& tc : occ.classes) {
            const double rate = std::clamp(r * tc.female_rate_multiplier, 0.01, 0.99);
            CHECK((r < 0.5) == (rate < 0.5));  // class shift never crosses the midline
        }
        if (r < 0.5)
            CHECK(occ.indicator_rate_female > occ.indicator_rate_male);
        else
            CHECK(occ.indicator_rate_male > occ.indicator_rate_female);
    }
}

TEST_CASE("write_bundle emits a loadable, consistent directory") {
    testutil::TempDir dir("bundle_io");
    const auto bundle = gen_bundle(paradox_spec(3, 800, 20));
    write_bundle(bundle, dir.path());
    const Corpus corpus = Corpus::load(dir / "corpus.jsonl");
    CHECK(corpus.size() == bundle.corpus.size());
    const EmbeddingMatrix embeddings = EmbeddingMatrix::load(dir / "embeddings.aemb");
    CHECK(embeddings.size() == bundle.embeddings.size());
    const auto generations = load_generations(dir / "generations.jsonl");
    CHECK(generations.size() == bundle.generations.size());
    CHECK(std::filesystem::exists(dir / "ground_truth.json"));
    CHECK(std::filesystem::exists(dir / "audit.cfg"));
    CHECK(std::filesystem::exists(dir / "names.tsv"));
}

TEST_CASE("spec validation") {
    SyntheticSpec spec;
    spec.occupations.clear();
    CHECK_THROWS_AS(gen_bundle(spec), std::invalid_argument);
    spec = paradox_spec(1, 10, 1);
    spec.occupations[0].true_female_rate = 1.4;
    CHECK_THROWS_AS(gen_bundle(spec), std::invalid_argument);
    spec = paradox_spec(1, 10, 1);
    spec.dim = 1;
    CHECK_THROWS_AS(gen_bundle(spec), std::invalid_argument);
    spec = paradox_spec(1, 10, 1);
    spec.classes.clear();
    CHECK_THROWS_AS(gen_bundle(spec), std::invalid_argument);
}

}  // TEST_SUITE
