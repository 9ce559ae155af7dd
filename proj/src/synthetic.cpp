#include "biasamp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "biasamp/errors.hpp"
#include "biasamp/rng.hpp"
#include "biasamp/text_match.hpp"

namespace biasamp {

using nlohmann::json;

double closed_form_conditional(double r, double q_f, double q_m) {
    if (r < 0.0 || r > 1.0 || q_f < 0.0 || q_f > 1.0 || q_m < 0.0 || q_m > 1.0)
        throw std::invalid_argument("closed_form_conditional: rates must be in [0,1]");
    const double numerator = r * (1.0 - q_f);
    const double denominator = numerator + (1.0 - r) * (1.0 - q_m);
    if (denominator <= 0.0)
        throw DataError("closed_form_conditional: every caption carries an indicator");
    return numerator / denominator;
}

std::vector<float> hash_vector(std::string_view text, std::size_t dim, std::uint64_t seed) {
    if (dim < 2) throw std::invalid_argument("hash_vector: dim must be >= 2");
    Rng rng(derive_seed(seed, text, "hash_vector"));
    std::vector<double> raw(dim);
    double norm_sq = 0.0;
    do {
        for (std::size_t i = 0; i < dim; ++i) {
            raw[i] = rng.normal();
            norm_sq += raw[i] * raw[i];
        }
    } while (norm_sq == 0.0);
    const double inv = 1.0 / std::sqrt(norm_sq);
    std::vector<float> out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(raw[i] * inv);
    return out;
}

double shift_log_odds(double p, double gamma) {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    const double z = std::log(p / (1.0 - p)) + gamma;
    return 1.0 / (1.0 + std::exp(-z));
}

namespace {

constexpr double kClampLo = 0.01;
constexpr double kClampHi = 0.99;

double clamp_rate(double rate) { return std::clamp(rate, kClampLo, kClampHi); }

const std::vector<std::string>& prompt_like_templates() {
    static const std::vector<std::string> t = {
        "a photo of the face of %OCC%",
        "a portrait photo of %OCC%",
        "picture of %OCC% smiling",
        "a photo of %OCC% at work",
        "closeup headshot of %OCC%",
    };
    return t;
}

const std::vector<std::string>& contextual_templates() {
    static const std::vector<std::string> t = {
        "%OCC% reviewing notes during a busy afternoon at the office",
        "candid shot of %OCC% near the old market downtown",
        "%OCC% preparing equipment before the morning shift",
        "stock image of %OCC% with colleagues in the meeting room",
        "%OCC% outdoors on a rainy tuesday",
    };
    return t;
}

const std::vector<std::string>& surnames() {
    static const std::vector<std::string> s = {"Draper", "Walker", "Novak",    "Tanaka",
                                               "Okafor", "Silva",  "Reyes",    "Kowalski",
                                               "Larsen", "Moretti"};
    return s;
}

const std::vector<std::string>& name_tails() {
    static const std::vector<std::string> t = {"at the studio", "on assignment",
                                               "at the annual conference",
                                               "photographed downtown"};
    return t;
}

// Neutral location tails diversify caption texts so no two captions are
// forced to share a hash vector.
const std::vector<std::string>& location_tails() {
    static const std::vector<std::string> tails = [] {
        const std::vector<std::string> preps = {"in", "near", "by", "at", "behind", "beside"};
        const std::vector<std::string> places = {"the old station", "the city square",
                                                 "the harbor",      "the campus",
                                                 "the workshop",    "the market"};
        std::vector<std::string> out;
        for (const auto& prep : preps)
            for (const auto& place : places) out.push_back(prep + " " + place);
        return out;
    }();
    return tails;
}

std::string article_for(std::string_view noun) {
    const char c = noun.empty() ? 'x' : noun.front();
    const bool vowel = c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
    return vowel ? "an" : "a";
}

std::string fill_template(const std::string& tmpl, const std::string& noun_phrase) {
    const auto pos = tmpl.find("%OCC%");
    return tmpl.substr(0, pos) + noun_phrase + tmpl.substr(pos + 5);
}

std::string make_caption_text(const std::string& occupation, const TemplateClass& tc,
                              bool female, bool has_indicator, Rng& rng) {
    const auto& bank =
        tc.prompt_affinity >= 0.65 ? prompt_like_templates() : contextual_templates();
    const std::string tail = " " + location_tails()[rng.index(location_tails().size())];
    if (!has_indicator) {
        const std::string& tmpl = bank[rng.index(bank.size())];
        return fill_template(tmpl, article_for(occupation) + " " + occupation) + tail;
    }
    static const std::vector<std::string> female_words = {"female", "woman", "lady"};
    static const std::vector<std::string> male_words = {"male", "man", "gentleman"};
    static const std::vector<std::string> female_suffix = {" while she works", " as she smiles",
                                                           " with her team"};
    static const std::vector<std::string> male_suffix = {" while he works", " as he smiles",
                                                         " with his team"};
    switch (rng.index(3)) {
        case 0: {  // gender word before the occupation
            const auto& words = female ? female_words : male_words;
            const std::string& word = words[rng.index(words.size())];
            const std::string& tmpl = bank[rng.index(bank.size())];
            return fill_template(tmpl, article_for(word) + " " + word + " " + occupation) + tail;
        }
        case 1: {  // pronoun clause appended
            const std::string& tmpl = bank[rng.index(bank.size())];
            const auto& suffixes = female ? female_suffix : male_suffix;
            return fill_template(tmpl, article_for(occupation) + " " + occupation) + tail +
                   suffixes[rng.index(suffixes.size())];
        }
        default: {  // "Name Surname, <occupation> <tail>"
            const auto& pool = female ? synthetic_female_names() : synthetic_male_names();
            const std::string& name = pool[rng.index(pool.size())];
            const std::string& surname = surnames()[rng.index(surnames().size())];
            const std::string& name_tail = name_tails()[rng.index(name_tails().size())];
            return name + " " + surname + ", " + occupation + " " + name_tail + tail;
        }
    }
}

std::string caption_id(const std::string& occupation, int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06d", i);
    return "cap:" + occupation + ":" + buf;
}

void validate_spec(const SyntheticSpec& spec) {
    if (spec.occupations.empty()) throw std::invalid_argument("synthetic spec: no occupations");
    if (spec.dim < 2) throw std::invalid_argument("synthetic spec: dim must be >= 2");
    if (spec.generations_per_prompt < 1 || spec.images_per_caption < 1 || spec.cap_subset_n < 1)
        throw std::invalid_argument("synthetic spec: counts must be >= 1");
    auto check_classes = [](const std::vector<TemplateClass>& classes) {
        if (classes.empty()) throw std::invalid_argument("synthetic spec: no template classes");
        for (const auto& tc : classes) {
            if (tc.prompt_affinity < 0.0 || tc.prompt_affinity > 1.0)
                throw std::invalid_argument("synthetic spec: prompt_affinity outside [0,1]");
            if (tc.female_rate_multiplier < 0.0)
                throw std::invalid_argument("synthetic spec: negative female_rate_multiplier");
        }
    };
    check_classes(spec.classes);
    for (const auto& occ : spec.occupations) {
        if (occ.occupation.empty()) throw std::invalid_argument("synthetic spec: empty occupation");
        for (double v : {occ.true_female_rate, occ.indicator_rate_female, occ.indicator_rate_male})
            if (v < 0.0 || v > 1.0)
                throw std::invalid_argument("synthetic spec: rate outside [0,1] for '" +
                                            occ.occupation + "'");
        if (occ.n_captions < 1)
            throw std::invalid_argument("synthetic spec: n_captions must be >= 1");
        if (!occ.classes.empty()) check_classes(occ.classes);
    }
}

}  // namespace

const std::vector<std::string>& synthetic_male_names() {
    static const std::vector<std::string> names = {"Derek", "Marcus", "Alan",  "Brad",
                                                   "Victor", "Samuel", "Peter", "Omar",
                                                   "Felix",  "Hugo"};
    return names;
}

const std::vector<std::string>& synthetic_female_names() {
    static const std::vector<std::string> names = {"Susan", "Leana", "Maria", "Priya",
                                                   "Elena", "Rosa",  "Nina",  "Clara",
                                                   "Wendy", "Amara"};
    return names;
}

SyntheticBundle gen_bundle(const SyntheticSpec& spec) {
    validate_spec(spec);
    SyntheticBundle bundle;
    bundle.spec = spec;
    const PromptSet prompts = PromptSet::defaults();

    for (const auto& occ : spec.occupations) {
        const auto& classes = occ.classes.empty() ? spec.classes : occ.classes;
        OccupationTruth truth;
        truth.n_captions = occ.n_captions;

        truth.top_affinity_class = 0;
        for (std::size_t c = 1; c < classes.size(); ++c)
            if (classes[c].prompt_affinity > classes[truth.top_affinity_class].prompt_affinity)
                truth.top_affinity_class = c;

        double no_ind_num = 0.0, no_ind_den = 0.0;
        for (const auto& tc : classes) {
            const double rate = clamp_rate(occ.true_female_rate * tc.female_rate_multiplier);
            truth.class_female_rate.push_back(rate);
            truth.naive_female_rate += rate / static_cast<double>(classes.size());
            truth.class_no_indicator_female_rate.push_back(closed_form_conditional(
                rate, occ.indicator_rate_female, occ.indicator_rate_male));
            no_ind_num += rate * (1.0 - occ.indicator_rate_female);
            no_ind_den += rate * (1.0 - occ.indicator_rate_female) +
                          (1.0 - rate) * (1.0 - occ.indicator_rate_male);
        }
        if (no_ind_den <= 0.0)
            throw DataError("synthetic spec: every caption of '" + occ.occupation +
                            "' would carry an indicator");
        truth.no_indicator_female_rate = no_ind_num / no_ind_den;
        truth.generation_female_rate = shift_log_odds(
            truth.class_no_indicator_female_rate[truth.top_affinity_class], spec.gamma);

        // Captions and their embeddings.
        const auto anchor = hash_vector("anchor::" + occ.occupation, spec.dim, spec.seed);
        Rng rng(derive_seed(spec.seed, occ.occupation, "captions"));
        std::vector<std::string> ids;
        std::vector<std::uint8_t> cap_class, cap_female, cap_indicated;
        ids.reserve(static_cast<std::size_t>(occ.n_captions));
        std::vector<float> vec(spec.dim);
        for (int i = 0; i < occ.n_captions; ++i) {
            const std::size_t c = rng.index(classes.size());
            const bool female = rng.bernoulli(truth.class_female_rate[c]);
            const bool indicated = rng.bernoulli(female ? occ.indicator_rate_female
                                                        : occ.indicator_rate_male);
            const std::string text =
                make_caption_text(occ.occupation, classes[c], female, indicated, rng);
            std::string id = caption_id(occ.occupation, i);

            bundle.corpus.add({id, text, 1, female ? 0.99 : 0.01});
            const auto noise = hash_vector(text, spec.dim, spec.seed);
            const double alpha = classes[c].prompt_affinity;
            for (std::size_t k = 0; k < spec.dim; ++k)
                vec[k] = static_cast<float>(alpha * anchor[k] + (1.0 - alpha) * noise[k]);
            bundle.embeddings.add(id, vec);

            ids.push_back(std::move(id));
            cap_class.push_back(static_cast<std::uint8_t>(c));
            cap_female.push_back(female);
            cap_indicated.push_back(indicated);
        }

        // Prompt embeddings sit close to the anchor.
        for (const auto& tmpl : prompts.templates()) {
            const auto noise =
                hash_vector(render_prompt(tmpl, occ.occupation), spec.dim, spec.seed);
            for (std::size_t k = 0; k < spec.dim; ++k)
                vec[k] = static_cast<float>(0.95 * anchor[k] + 0.05 * noise[k]);
            bundle.embeddings.add(prompt_embedding_id(tmpl.id, occ.occupation), vec);
        }

        // Standard-prompt generations: the model resolves an indicator-free
        // prompt to its most prompt-like caption class.
        for (const auto& tmpl : prompts.templates()) {
            Rng gen_rng(derive_seed(spec.seed, occ.occupation,
                                    "generations:prompt:" + std::to_string(tmpl.id)));
            for (int j = 0; j < spec.generations_per_prompt; ++j) {
                const bool female = gen_rng.bernoulli(truth.generation_female_rate);
                bundle.generations.push_back({occ.occupation, std::to_string(tmpl.id), j, 1,
                                              female ? 0.99 : 0.01});
            }
        }

        // Captions-as-prompts generations for the naive subset. The stream
        // label matches the pipeline's naive selection so both sides pick the
        // same captions.
        const TrainingSubset subset =
            sample_subset(ids, spec.cap_subset_n,
                          derive_seed(spec.seed, occ.occupation, "select:naive"));
        std::unordered_map<std::string, std::size_t> pos;
        pos.reserve(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) pos.emplace(ids[i], i);
        Rng cap_rng(derive_seed(spec.seed, occ.occupation, "generations:captions"));
        for (const auto& id : subset.ids) {
            const std::size_t i = pos.at(id);
            double rate;
            if (cap_indicated[i]) {
                rate = cap_female[i] ? 1.0 : 0.0;  // the model obeys explicit indicators
            } else {
                rate = shift_log_odds(truth.class_no_indicator_female_rate[cap_class[i]],
                                      spec.gamma);
            }
            for (int j = 0; j < spec.images_per_caption; ++j) {
                const bool female = cap_rng.bernoulli(rate);
                bundle.generations.push_back({occ.occupation, id, j, 1, female ? 0.99 : 0.01});
            }
        }

        bundle.ground_truth.emplace(occ.occupation, std::move(truth));
    }
    return bundle;
}

void write_bundle(const SyntheticBundle& bundle, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    bundle.corpus.save_jsonl(dir / "corpus.jsonl");
    bundle.embeddings.save(dir / "embeddings.aemb");
    save_generations(bundle.generations, dir / "generations.jsonl");

    {
        std::ofstream names(dir / "names.tsv", std::ios::binary);
        if (!names) throw DataError("cannot write " + (dir / "names.tsv").string());
        auto lower = [](std::string s) {
            for (char& c : s) c = to_lower_ascii(c);
            return s;
        };
        for (const auto& n : synthetic_male_names()) names << lower(n) << "\tmale\n";
        for (const auto& n : synthetic_female_names()) names << lower(n) << "\tfemale\n";
    }

    {
        nlohmann::ordered_json truth;
        truth["seed"] = bundle.spec.seed;
        truth["gamma"] = bundle.spec.gamma;
        truth["generations_per_prompt"] = bundle.spec.generations_per_prompt;
        truth["images_per_caption"] = bundle.spec.images_per_caption;
        truth["cap_subset_n"] = bundle.spec.cap_subset_n;
        nlohmann::ordered_json occs;
        for (const auto& [occupation, t] : bundle.ground_truth) {
            nlohmann::ordered_json o;
            o["n_captions"] = t.n_captions;
            o["class_female_rate"] = t.class_female_rate;
            o["class_no_indicator_female_rate"] = t.class_no_indicator_female_rate;
            o["top_affinity_class"] = t.top_affinity_class;
            o["naive_female_rate"] = t.naive_female_rate;
            o["no_indicator_female_rate"] = t.no_indicator_female_rate;
            o["generation_female_rate"] = t.generation_female_rate;
            occs[occupation] = std::move(o);
        }
        truth["occupations"] = std::move(occs);
        std::ofstream out(dir / "ground_truth.json", std::ios::binary);
        if (!out) throw DataError("cannot write " + (dir / "ground_truth.json").string());
        out << truth.dump(2) << '\n';
    }

    {
        std::ofstream cfg(dir / "audit.cfg", std::ios::binary);
        if (!cfg) throw DataError("cannot write " + (dir / "audit.cfg").string());
        cfg << "corpus = corpus.jsonl\n";
        cfg << "generations = generations.jsonl\n";
        cfg << "caption_embeddings = embeddings.aemb\n";
        cfg << "prompt_embeddings = embeddings.aemb\n";
        cfg << "name_table = names.tsv\n";
        cfg << "seed = " << bundle.spec.seed << "\n";
        cfg << "sample_n = " << bundle.spec.cap_subset_n << "\n";
        cfg << "images_per_caption = " << bundle.spec.images_per_caption << "\n";
        cfg << "occupations = ";
        for (std::size_t i = 0; i < bundle.spec.occupations.size(); ++i) {
            if (i) cfg << ", ";
            cfg << bundle.spec.occupations[i].occupation;
        }
        cfg << "\n";
    }
}

SyntheticSpec paradox_spec(std::uint64_t seed, int n_captions, int generations_per_prompt) {
    SyntheticSpec spec;
    spec.seed = seed;
    spec.classes = {{1, 0.9, 1.0}};
    spec.occupations = {{"mechanic", 0.25, 0.68, 0.30, n_captions, {}}};
    spec.generations_per_prompt = generations_per_prompt;
    return spec;
}

SyntheticSpec skew_suite_spec(std::uint64_t seed, double gamma, int n_captions,
                              int generations_per_prompt) {
    SyntheticSpec spec;
    spec.seed = seed;
    spec.gamma = gamma;
    spec.generations_per_prompt = generations_per_prompt;
    const auto lexicon = OccupationLexicon::defaults();
    const std::size_t total = lexicon.size();
    for (std::size_t i = 0; i < total; ++i) {
        SyntheticOccupation occ;
        occ.occupation = lexicon.phrases()[i];
        occ.n_captions = n_captions;
        const double r = 0.05 + 0.90 * static_cast<double>(i) / static_cast<double>(total - 1);
        occ.true_female_rate = r;
        // Marking concentrates on the minority gender, and its intensity
        // fades as that gender approaches parity; the majority gender is
        // marked rarely, the more rarely the more common it is.
        auto minority_mark = [](double share) { return 0.85 - 1.1 * share; };
        auto majority_mark = [](double share) {
            return std::clamp(0.055 / share - 0.02, 0.0, 1.0);
        };
        if (r < 0.5) {
            occ.indicator_rate_female = minority_mark(r);
            occ.indicator_rate_male = majority_mark(1.0 - r);
        } else {
            occ.indicator_rate_female = majority_mark(r);
            occ.indicator_rate_male = minority_mark(1.0 - r);
        }
        // The prompt-like class skews further from 50% than the corpus mix.
        const double away = r < 0.5 ? 0.7 : 1.3;
        occ.classes = {{1, 0.85, away}, {2, 0.45, 1.0}};
        spec.occupations.push_back(std::move(occ));
    }
    return spec;
}

SyntheticSpec gamma_probe_spec(std::uint64_t seed, double gamma, int n_captions,
                               int generations_per_prompt) {
    SyntheticSpec spec;
    spec.seed = seed;
    spec.gamma = gamma;
    spec.generations_per_prompt = generations_per_prompt;
    spec.classes = {{1, 0.9, 1.0}};
    const std::vector<std::pair<std::string, double>> occs = {
        {"nurse", 0.55},        {"librarian", 0.60}, {"teacher", 0.65},
        {"receptionist", 0.70}, {"dietitian", 0.75}, {"hairdresser", 0.80},
    };
    for (const auto& [name, rate] : occs)
        spec.occupations.push_back({name, rate, 0.30, 0.30, n_captions, {}});
    return spec;
}

}  // namespace biasamp
