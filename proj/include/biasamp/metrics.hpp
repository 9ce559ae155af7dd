#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "biasamp/corpus.hpp"
#include "biasamp/labeling.hpp"
#include "biasamp/stats.hpp"

namespace biasamp {

/// A = |G - 50| - |T - 50|: the increase in deviation from a balanced gender
/// ratio going from training (T) to generated (G) percentages.
double amplification(double t_pct, double g_pct);

/// True iff training and generation skew to opposite sides of 50%. Values of
/// exactly 50 never switch.
bool direction_switch(double t_pct, double g_pct);

struct BiasMeasurement {
    std::string occupation;
    std::string prompt_id;  // template id, or "captions" for captions-as-prompts
    SelectionMethod method = SelectionMethod::Naive;
    double t_pct = 0.0;  // pct female in training subset images
    double g_pct = 0.0;  // pct female in generated images
    std::size_t n_train = 0;
    std::size_t n_gen = 0;
    bool short_sample = false;
};

enum class ExclusionReason { DirectionSwitch, EmptySet };
std::string_view exclusion_reason_name(ExclusionReason reason);

struct AmplificationResult {
    BiasMeasurement measurement;
    double amplification = 0.0;
    bool excluded = false;
    std::optional<ExclusionReason> reason;
};

/// Computes A and applies the direction-switch exclusion rule.
AmplificationResult evaluate_amplification(BiasMeasurement measurement);

/// Mean A over non-excluded results. Throws DataError when every result is
/// excluded.
double expected_amplification(std::span<const AmplificationResult> results);

/// Arithmetic mean of the per-prompt expected amplifications.
double prompt_average(std::span<const double> per_prompt);

/// Percentage of pairs whose indicated and generated labels agree. The
/// indicated label must come from a Male-only or Female-only verdict.
double gender_match_accuracy(std::span<const std::pair<GenderLabel, GenderLabel>> pairs);

/// Captions-as-prompts evaluation for one occupation: prompts are the subset
/// captions themselves and G pools every usable generation for them, so any
/// caption-prompt distribution shift is removed by construction.
struct CaptionsAsPromptsResult {
    AmplificationResult result;
    std::size_t captions_evaluated = 0;
    std::size_t dropped_no_generations = 0;      // caption had zero usable generations
    std::size_t dropped_unusable_training = 0;   // caption's own image failed the filter
    std::size_t short_generation_captions = 0;   // fewer than images_per_caption usable
};

CaptionsAsPromptsResult captions_as_prompts_eval(
    const Corpus& corpus, const TrainingSubset& subset,
    const std::map<std::string, std::vector<GenerationRecord>>& generations_by_caption,
    double min_prob = 0.9, int images_per_caption = 10);

}  // namespace biasamp
