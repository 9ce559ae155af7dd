#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "biasamp/corpus.hpp"
#include "biasamp/embednn.hpp"
#include "biasamp/labeling.hpp"

namespace biasamp {

/// A phrasing class for synthetic captions. prompt_affinity controls how
/// close the class's caption embeddings sit to the occupation's prompt
/// embeddings; female_rate_multiplier scales the occupation's true female
/// rate for captions of this class (clamped to [0.01, 0.99]).
struct TemplateClass {
    int id = 0;
    double prompt_affinity = 0.5;
    double female_rate_multiplier = 1.0;
};

struct SyntheticOccupation {
    std::string occupation;
    double true_female_rate = 0.5;       // r
    double indicator_rate_female = 0.5;  // q_f: P(indicator | female image)
    double indicator_rate_male = 0.5;    // q_m: P(indicator | male image)
    int n_captions = 1000;
    /// Optional per-occupation override of the spec-level classes.
    std::vector<TemplateClass> classes;
};

struct SyntheticSpec {
    std::vector<SyntheticOccupation> occupations;
    std::vector<TemplateClass> classes = {{1, 0.9, 1.0}};
    double gamma = 0.0;  // log-odds true-amplification knob; 0 = faithful model
    std::size_t dim = 64;
    std::uint64_t seed = 0;
    int generations_per_prompt = 500;
    int images_per_caption = 10;  // captions-as-prompts generations per caption
    int cap_subset_n = 500;       // naive-subset size that receives those generations
};

/// Closed-form rates implied by one occupation's parameters.
struct OccupationTruth {
    std::vector<double> class_female_rate;
    std::vector<double> class_no_indicator_female_rate;
    std::size_t top_affinity_class = 0;      // index into the class lists
    double naive_female_rate = 0.0;          // mean over classes
    double no_indicator_female_rate = 0.0;   // pooled over classes
    double generation_female_rate = 0.0;     // model rate for indicator-free prompts
    int n_captions = 0;
};

struct SyntheticBundle {
    SyntheticSpec spec;
    Corpus corpus;
    EmbeddingMatrix embeddings;  // captions and prompts
    std::vector<GenerationRecord> generations;  // standard-prompt + captions-as-prompts
    std::map<std::string, OccupationTruth> ground_truth;
};

/// P(female | no indicator) = r(1-q_f) / (r(1-q_f) + (1-r)(1-q_m)).
/// Throws DataError when every caption carries an indicator (denominator 0).
double closed_form_conditional(double r, double q_f, double q_m);

/// Deterministic pseudo-random unit vector from a seeded hash of the text.
std::vector<float> hash_vector(std::string_view text, std::size_t dim, std::uint64_t seed);

/// sigmoid(logit(p) + gamma); exact 0 and 1 are fixed points.
double shift_log_odds(double p, double gamma);

SyntheticBundle gen_bundle(const SyntheticSpec& spec);

/// Writes corpus.jsonl, embeddings.aemb, generations.jsonl, names.tsv,
/// ground_truth.json, and a ready-to-run audit.cfg into dir.
void write_bundle(const SyntheticBundle& bundle, const std::filesystem::path& dir);

/// Names injected into synthetic captions; the bundle's names.tsv carries
/// exactly these.
const std::vector<std::string>& synthetic_male_names();
const std::vector<std::string>& synthetic_female_names();

/// One male-skewed occupation with indicators concentrated on the
/// underrepresented gender: keyword-level measurement shows strong
/// amplification while the indicator-free subset shows none.
SyntheticSpec paradox_spec(std::uint64_t seed, int n_captions = 20000,
                           int generations_per_prompt = 500);

/// All 62 occupations with graded skew, minority-marked indicators, and a
/// prompt-like caption class that is more extreme than the corpus mix.
SyntheticSpec skew_suite_spec(std::uint64_t seed, double gamma = 0.0, int n_captions = 3000,
                              int generations_per_prompt = 250);

/// Female-skewed occupations with gender-independent indicator rates; the
/// only distribution shift is the gamma knob itself.
SyntheticSpec gamma_probe_spec(std::uint64_t seed, double gamma, int n_captions = 4000,
                               int generations_per_prompt = 400);

}  // namespace biasamp
