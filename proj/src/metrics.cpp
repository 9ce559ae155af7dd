#include "biasamp/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "biasamp/errors.hpp"

namespace biasamp {

double amplification(double t_pct, double g_pct) {
    if (t_pct < 0.0 || t_pct > 100.0 || g_pct < 0.0 || g_pct > 100.0)
        throw std::invalid_argument("amplification: percentages must be in [0,100]");
    return std::fabs(g_pct - 50.0) - std::fabs(t_pct - 50.0);
}

bool direction_switch(double t_pct, double g_pct) {
    if (t_pct < 0.0 || t_pct > 100.0 || g_pct < 0.0 || g_pct > 100.0)
        throw std::invalid_argument("direction_switch: percentages must be in [0,100]");
    return (t_pct > 50.0 && g_pct < 50.0) || (t_pct < 50.0 && g_pct > 50.0);
}

std::string_view exclusion_reason_name(ExclusionReason reason) {
    switch (reason) {
        case ExclusionReason::DirectionSwitch: return "direction_switch";
        case ExclusionReason::EmptySet: return "empty_set";
    }
    return "unknown";
}

AmplificationResult evaluate_amplification(BiasMeasurement measurement) {
    AmplificationResult result;
    result.amplification = amplification(measurement.t_pct, measurement.g_pct);
    if (direction_switch(measurement.t_pct, measurement.g_pct)) {
        result.excluded = true;
        result.reason = ExclusionReason::DirectionSwitch;
    }
    result.measurement = std::move(measurement);
    return result;
}

double expected_amplification(std::span<const AmplificationResult> results) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : results) {
        if (r.excluded) continue;
        sum += r.amplification;
        ++n;
    }
    if (n == 0) throw DataError("expected_amplification: every result is excluded");
    return sum / static_cast<double>(n);
}

double prompt_average(std::span<const double> per_prompt) {
    if (per_prompt.empty())
        throw std::invalid_argument("prompt_average: no per-prompt values");
    double sum = 0.0;
    for (double v : per_prompt) sum += v;
    return sum / static_cast<double>(per_prompt.size());
}

double gender_match_accuracy(std::span<const std::pair<GenderLabel, GenderLabel>> pairs) {
    if (pairs.empty()) throw DataError("gender_match_accuracy over an empty set");
    std::size_t agree = 0;
    for (const auto& [indicated, generated] : pairs)
        if (indicated == generated) ++agree;
    return 100.0 * static_cast<double>(agree) / static_cast<double>(pairs.size());
}

CaptionsAsPromptsResult captions_as_prompts_eval(
    const Corpus& corpus, const TrainingSubset& subset,
    const std::map<std::string, std::vector<GenerationRecord>>& generations_by_caption,
    double min_prob, int images_per_caption) {
    CaptionsAsPromptsResult out;
    std::vector<LabeledImage> training;
    std::vector<LabeledImage> generated;

    for (const auto& id : subset.ids) {
        const CaptionRecord& rec = corpus.at(id);

        const ImageMeta train_meta = to_image_meta(rec);
        auto train_labeled = filter_and_label({&train_meta, 1}, min_prob);
        if (train_labeled.empty()) {
            ++out.dropped_unusable_training;
            continue;
        }

        auto it = generations_by_caption.find(id);
        std::vector<LabeledImage> gen_labeled;
        if (it != generations_by_caption.end()) {
            std::vector<ImageMeta> metas;
            metas.reserve(it->second.size());
            for (const auto& g : it->second) metas.push_back(to_image_meta(g));
            gen_labeled = filter_and_label(metas, min_prob);
        }
        if (gen_labeled.empty()) {
            ++out.dropped_no_generations;
            continue;
        }
        if (gen_labeled.size() < static_cast<std::size_t>(images_per_caption))
            ++out.short_generation_captions;

        training.push_back(std::move(train_labeled.front()));
        generated.insert(generated.end(), gen_labeled.begin(), gen_labeled.end());
        ++out.captions_evaluated;
    }

    if (training.empty())
        throw DataError("captions_as_prompts_eval: no usable caption for occupation '" +
                        subset.occupation + "'");

    BiasMeasurement m;
    m.occupation = subset.occupation;
    m.prompt_id = "captions";
    m.method = SelectionMethod::CaptionsAsPrompts;
    m.t_pct = pct_female(training);
    m.g_pct = pct_female(generated);
    m.n_train = training.size();
    m.n_gen = generated.size();
    m.short_sample = subset.short_sample;
    out.result = evaluate_amplification(std::move(m));
    return out;
}

}  // namespace biasamp
