#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "biasamp/corpus.hpp"
#include "biasamp/errors.hpp"
#include "biasamp/rng.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace biasamp;

namespace {

Corpus make_corpus(const std::vector<std::pair<std::string, std::string>>& id_text) {
    Corpus corpus;
    for (const auto& [id, text] : id_text) corpus.add({id, text, 1, 0.5});
    return corpus;
}

// Caption generator mixing planted occupation phrases, near-miss words, and
// filler, used for the query-vs-oracle checks.
std::string random_caption(Rng& rng, const std::vector<std::string>& phrases) {
    static const std::vector<std::string> fillers = {
        "photo",  "of",     "the",     "night",   "market", "with",  "lights",
        "and",    "rain",   "against", "windows", "old",    "town",  "street",
        "summer", "autumn", "river",   "bridge",  "quiet",  "corner"};
    static const std::vector<std::string> near_misses = {
        "presidential", "president-elect", "teachers", "engineering", "interns",
        "cookbook",     "authority",       "managers", "chefs",       "nursery"};
    std::string text;
    const std::size_t words = 3 + rng.index(10);
    for (std::size_t w = 0; w < words; ++w) {
        if (!text.empty()) text += rng.index(12) == 0 ? ",  " : " ";
        const std::size_t pick = rng.index(10);
        if (pick < 6)
            text += fillers[rng.index(fillers.size())];
        else if (pick < 8)
            text += near_misses[rng.index(near_misses.size())];
        else
            text += phrases[rng.index(phrases.size())];
    }
    return text;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("jsonl load round trip") {
    testutil::TempDir dir("corpus_jsonl");
    testutil::write_file(dir / "c.jsonl",
                         R"({"id":"c1","text":"a teacher smiling","face_count":1,"p_female":0.95})"
                         "\n"
                         R"({"id":"c2","text":"night market","face_count":0,"p_female":null})"
                         "\n"
                         R"({"id":"c3","text":"an engineer at work","face_count":2,"p_female":0.2})"
                         "\n");
    const Corpus corpus = Corpus::load(dir / "c.jsonl");
    REQUIRE(corpus.size() == 3);
    CHECK(corpus.at("c1").text == "a teacher smiling");
    CHECK(corpus.at("c2").p_female == std::nullopt);
    CHECK(corpus.at("c3").face_count == 2);
    CHECK(corpus.records()[0].id == "c1");  // insertion order preserved
}

TEST_CASE("duplicate id rejected with line number") {
    testutil::TempDir dir("corpus_dup");
    testutil::write_file(dir / "c.jsonl",
                         R"({"id":"c1","text":"one","face_count":1,"p_female":0.9})"
                         "\n"
                         R"({"id":"c1","text":"two","face_count":1,"p_female":0.9})"
                         "\n");
    CHECK_THROWS_WITH_AS(Corpus::load(dir / "c.jsonl"), doctest::Contains(":2:"), ParseError);
}

TEST_CASE("malformed record reports its line") {
    testutil::TempDir dir("corpus_bad");
    testutil::write_file(dir / "c.jsonl",
                         R"({"id":"c1","text":"ok","face_count":1,"p_female":0.9})"
                         "\n"
                         "{not json}\n");
    CHECK_THROWS_WITH_AS(Corpus::load(dir / "c.jsonl"), doctest::Contains(":2:"), ParseError);
}

TEST_CASE("p_female outside [0,1] rejected") {
    testutil::TempDir dir("corpus_range");
    testutil::write_file(dir / "c.jsonl",
                         R"({"id":"c1","text":"ok","face_count":1,"p_female":1.2})"
                         "\n");
    CHECK_THROWS_AS(Corpus::load(dir / "c.jsonl"), ParseError);
    Corpus corpus;
    CHECK_THROWS_AS(corpus.add({"x", "text", 1, -0.1}), DataError);
}

TEST_CASE("csv load matches jsonl, quoted fields included") {
    testutil::TempDir dir("corpus_csv");
    testutil::write_file(dir / "c.csv",
                         "id,text,face_count,p_female\n"
                         "c1,\"a teacher, smiling\",1,0.95\n"
                         "c2,\"she said \"\"hi\"\"\",1,\n"
                         "c3,plain text,0,0.25\n");
    const Corpus corpus = Corpus::load(dir / "c.csv");
    REQUIRE(corpus.size() == 3);
    CHECK(corpus.at("c1").text == "a teacher, smiling");
    CHECK(corpus.at("c2").text == "she said \"hi\"");
    CHECK(corpus.at("c2").p_female == std::nullopt);
    CHECK(corpus.at("c3").p_female == 0.25);
}

TEST_CASE("csv rejects unknown and missing columns") {
    testutil::TempDir dir("corpus_csv_cols");
    testutil::write_file(dir / "a.csv", "id,text,face_count,p_female,extra\nc1,t,1,0.9,x\n");
    CHECK_THROWS_AS(Corpus::load(dir / "a.csv"), ParseError);
    testutil::write_file(dir / "b.csv", "id,text,face_count\nc1,t,1\n");
    CHECK_THROWS_AS(Corpus::load(dir / "b.csv"), ParseError);
}

TEST_CASE("large synthetic file round trip preserves the record count") {
    testutil::TempDir dir("corpus_large");
    const std::size_t emitted = 1'000'000;
    {
        std::ofstream out(dir / "big.jsonl", std::ios::binary);
        Rng rng(11);
        const auto phrases = OccupationLexicon::defaults().phrases();
        for (std::size_t i = 0; i < emitted; ++i) {
            out << R"({"id":"r)" << i << R"(","text":")" << random_caption(rng, phrases)
                << R"(","face_count":1,"p_female":0.9})"
                << "\n";
        }
    }
    const Corpus corpus = Corpus::load(dir / "big.jsonl");
    CHECK(corpus.size() == emitted);
}

TEST_CASE("query matches token-boundary occupation mentions") {
    const Corpus corpus = make_corpus({
        {"a", "BCCI president N Srinivasan at the annual meeting"},
        {"b", "presidential suite photo"},
        {"c", "the PRESIDENT spoke"},
        {"d", "ex-president waves"},
        {"e", "presidents gather"},
    });
    CHECK(query_occupation(corpus, "president") == std::vector<std::string>{"a", "c", "d"});
}

TEST_CASE("multiword phrases need exactly one whitespace run between words") {
    const Corpus corpus = make_corpus({
        {"a", "the prime minister arrives"},
        {"b", "the prime  \t minister arrives"},
        {"c", "prime-minister arrives"},
        {"d", "prime, minister arrives"},
        {"e", "a primeminister arrives"},
        {"f", "Prime Minister speaks"},
    });
    CHECK(query_occupation(corpus, "prime minister") == std::vector<std::string>{"a", "b", "f"});
}

TEST_CASE("query is invariant to caption casing") {
    Rng rng(21);
    const auto lexicon = OccupationLexicon::defaults();
    Corpus lower, upper;
    for (int i = 0; i < 300; ++i) {
        std::string text = random_caption(rng, lexicon.phrases());
        std::string up = text;
        std::transform(up.begin(), up.end(), up.begin(),
                       [](unsigned char c) { return std::toupper(c); });
        lower.add({"c" + std::to_string(i), text, 1, 0.9});
        upper.add({"c" + std::to_string(i), up, 1, 0.9});
    }
    CHECK(query_all(lower, lexicon) == query_all(upper, lexicon));
}

TEST_CASE("query equals the brute-force oracle on random fixtures") {
    Rng rng(31);
    const auto lexicon = OccupationLexicon::defaults();
    Corpus corpus;
    for (int i = 0; i < 200; ++i)
        corpus.add({"c" + std::to_string(i), random_caption(rng, lexicon.phrases()), 1, 0.9});
    const auto all = query_all(corpus, lexicon);
    for (const auto& phrase : lexicon.phrases()) {
        CHECK(all.at(phrase) == oracles::brute_force_query(corpus, phrase));
        CHECK(all.at(phrase) == query_occupation(corpus, phrase));
    }
}

TEST_CASE("render_prompt resolves the article") {
    const PromptSet prompts = PromptSet::defaults();
    CHECK(render_prompt(prompts.at(1), "engineer") == "A photo of the face of an engineer");
    CHECK(render_prompt(prompts.at(1), "teacher") == "A photo of the face of a teacher");
    CHECK(render_prompt(prompts.at(4), "attorney") == "A photo of an attorney at work");
    const std::map<std::string, std::string> overrides = {{"heirloom keeper", "an"}};
    CHECK(render_prompt(prompts.at(2), "heirloom keeper", overrides) ==
          "A portrait photo of an heirloom keeper");
}

TEST_CASE("every default rendering is placeholder- and article-free") {
    const PromptSet prompts = PromptSet::defaults();
    const auto lexicon = OccupationLexicon::defaults();
    std::set<std::string> seen;
    for (const auto& tmpl : prompts.templates()) {
        for (const auto& occupation : lexicon.phrases()) {
            const std::string rendered = render_prompt(tmpl, occupation);
            CHECK(rendered.find("[OCCUPATION]") == std::string::npos);
            CHECK(rendered.find("a/an") == std::string::npos);
            CHECK(rendered.find("A/an") == std::string::npos);
            CHECK(seen.insert(rendered).second);  // injective over occupations
        }
    }
    CHECK(seen.size() == 62 * 4);
}

TEST_CASE("missing placeholder is an error") {
    CHECK_THROWS_AS(render_prompt({9, "A photo of a person"}, "teacher"), std::invalid_argument);
    CHECK_THROWS_AS(PromptSet::from_templates({{1, "no placeholder"}}), DataError);
}

TEST_CASE("undersized pools are used whole and flagged") {
    const auto subset = sample_subset({"b", "a", "c"}, 500, 7);
    CHECK(subset.short_sample);
    std::vector<std::string> sorted = subset.ids;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("sampling is deterministic and order-independent") {
    std::vector<std::string> ids;
    for (int i = 0; i < 1000; ++i) ids.push_back("id" + std::to_string(i));
    const auto first = sample_subset(ids, 100, 99);
    const auto second = sample_subset(ids, 100, 99);
    CHECK(first.ids == second.ids);
    CHECK_FALSE(first.short_sample);

    std::mt19937 shuffler(5);
    std::shuffle(ids.begin(), ids.end(), shuffler);
    const auto shuffled = sample_subset(ids, 100, 99);
    CHECK(shuffled.ids == first.ids);

    const auto other_seed = sample_subset(ids, 100, 100);
    CHECK(other_seed.ids != first.ids);
}

TEST_CASE("chi-square uniformity of repeated sampling") {
    const std::size_t pool = 10'000;
    const int draws = 1'000;
    const int take = 500;
    std::vector<std::string> ids;
    ids.reserve(pool);
    for (std::size_t i = 0; i < pool; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "id%05zu", i);
        ids.emplace_back(buf);
    }
    std::vector<double> counts(pool, 0.0);
    std::unordered_map<std::string, std::size_t> where;
    for (std::size_t i = 0; i < pool; ++i) where[ids[i]] = i;
    for (int d = 0; d < draws; ++d) {
        const auto subset = sample_subset(ids, take, derive_seed(4242, "chi2", std::to_string(d)));
        for (const auto& id : subset.ids) counts[where[id]] += 1.0;
    }
    const double expected = double(draws) * double(take) / double(pool);  // 50
    double stat = 0.0;
    for (double c : counts) stat += (c - expected) * (c - expected) / expected;
    // 0.99 quantile of chi-square with 9999 degrees of freedom.
    CHECK(stat < 10330.917127604109);
}

TEST_CASE("lexicon validation") {
    CHECK_THROWS_AS(OccupationLexicon::from_phrases({"Teacher"}), DataError);
    CHECK_THROWS_AS(OccupationLexicon::from_phrases({"prime  minister"}), DataError);
    CHECK_THROWS_AS(OccupationLexicon::from_phrases({"teacher", "teacher"}), DataError);
    CHECK_THROWS_AS(OccupationLexicon::from_phrases({""}), DataError);
    CHECK(OccupationLexicon::defaults().size() == 62);
    CHECK(OccupationLexicon::defaults().contains("prime minister"));
}

}  // TEST_SUITE
