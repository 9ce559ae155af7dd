#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "biasamp/errors.hpp"
#include "biasamp/labeling.hpp"
#include "biasamp/rng.hpp"

using namespace biasamp;

namespace {

ImageMeta meta(const std::string& id, int faces, std::optional<double> p) {
    return {id, faces, p};
}

std::vector<ImageMeta> random_metas(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ImageMeta> metas;
    for (std::size_t i = 0; i < n; ++i) {
        std::optional<double> p;
        if (rng.index(10) != 0) p = rng.uniform();
        metas.push_back({"m" + std::to_string(i), static_cast<int>(rng.index(3)), p});
    }
    return metas;
}

}  // namespace

TEST_SUITE("labeling") {

TEST_CASE("filter keeps single-face confident records") {
    const std::vector<ImageMeta> metas = {
        meta("keep_f", 1, 0.95),
        meta("drop_faces", 2, 0.99),
        meta("keep_boundary", 1, 0.90),
        meta("drop_low", 1, 0.8999),
        meta("keep_m", 1, 0.02),
        meta("drop_missing", 1, std::nullopt),
        meta("drop_noface", 0, 0.99),
    };
    FilterCounts counts;
    const auto kept = filter_and_label(metas, 0.9, &counts);
    REQUIRE(kept.size() == 3);
    CHECK(kept[0].id == "keep_f");
    CHECK(kept[0].label == GenderLabel::Female);
    CHECK(kept[0].confidence == 0.95);
    CHECK(kept[1].id == "keep_boundary");  // >= 0.9 is inclusive
    CHECK(kept[2].label == GenderLabel::Male);
    CHECK(counts.kept == 3);
    CHECK(counts.dropped_face_count == 2);
    CHECK(counts.dropped_missing_prob == 1);
    CHECK(counts.dropped_low_confidence == 1);
    CHECK(counts.input() == metas.size());
}

TEST_CASE("min_prob must sit in (0.5, 1]") {
    const std::vector<ImageMeta> metas = {meta("a", 1, 0.9)};
    CHECK_THROWS_AS(filter_and_label(metas, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(filter_and_label(metas, 1.01), std::invalid_argument);
    CHECK_NOTHROW(filter_and_label(metas, 1.0));
}

TEST_CASE("pct_female arithmetic and empty error") {
    std::vector<LabeledImage> l;
    auto f = [](const std::string& id) { return LabeledImage{id, GenderLabel::Female, 0.99}; };
    auto m = [](const std::string& id) { return LabeledImage{id, GenderLabel::Male, 0.99}; };
    l = {f("1"), m("2"), f("3"), m("4")};
    CHECK(pct_female(l) == 50.0);
    l = {f("1"), m("2"), m("3"), m("4")};
    CHECK(pct_female(l) == 25.0);
    l.clear();
    CHECK_THROWS_AS(pct_female(l), DataError);
}

TEST_CASE("kept set grows monotonically as min_prob drops") {
    const auto metas = random_metas(2000, 77);
    FilterCounts strict_counts, loose_counts;
    const auto strict = filter_and_label(metas, 0.95, &strict_counts);
    const auto mid = filter_and_label(metas, 0.90);
    const auto loose = filter_and_label(metas, 0.85, &loose_counts);
    CHECK(strict.size() <= mid.size());
    CHECK(mid.size() <= loose.size());
    auto id_set = [](const std::vector<LabeledImage>& v) {
        std::set<std::string> out;
        for (const auto& img : v) out.insert(img.id);
        return out;
    };
    const auto mid_ids = id_set(mid), loose_ids = id_set(loose);
    for (const auto& img : strict) CHECK(mid_ids.count(img.id) == 1);
    for (const auto& id : mid_ids) CHECK(loose_ids.count(id) == 1);
    CHECK(strict_counts.input() == loose_counts.input());
}

TEST_CASE("probability reflection swaps every label") {
    auto metas = random_metas(1500, 99);
    auto reflected = metas;
    for (auto& m : reflected)
        if (m.p_female) m.p_female = 1.0 - *m.p_female;
    const auto kept = filter_and_label(metas, 0.9);
    const auto kept_reflected = filter_and_label(reflected, 0.9);
    REQUIRE(kept.size() == kept_reflected.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        CHECK(kept[i].id == kept_reflected[i].id);
        CHECK(kept[i].label == flip(kept_reflected[i].label));
    }
    if (!kept.empty())
        CHECK(pct_female(kept) == doctest::Approx(100.0 - pct_female(kept_reflected)).epsilon(1e-12));
}

TEST_CASE("binomial recovery of the generator rate") {
    Rng rng(12345);
    std::vector<ImageMeta> metas;
    const std::size_t n = 20'000;
    for (std::size_t i = 0; i < n; ++i)
        metas.push_back({"b" + std::to_string(i), 1, rng.bernoulli(0.25) ? 0.99 : 0.01});
    const auto kept = filter_and_label(metas, 0.9);
    REQUIRE(kept.size() == n);  // 0.99/0.01 never fall below the threshold
    CHECK(std::fabs(pct_female(kept) - 25.0) < 1.0);
}

TEST_CASE("generation records load and label through the same filter") {
    const GenerationRecord rec{"engineer", "1", 7, 1, 0.97};
    const ImageMeta m = to_image_meta(rec);
    CHECK(m.id == "engineer|1|7");
    const auto kept = filter_and_label({&m, 1}, 0.9);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].label == GenderLabel::Female);
}

}  // TEST_SUITE
