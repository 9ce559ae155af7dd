#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biasamp/corpus.hpp"

namespace biasamp {

enum class GenderLabel { Female, Male };

inline GenderLabel flip(GenderLabel label) {
    return label == GenderLabel::Female ? GenderLabel::Male : GenderLabel::Female;
}

std::string_view label_name(GenderLabel label);

struct LabeledImage {
    std::string id;
    GenderLabel label = GenderLabel::Female;
    double confidence = 1.0;  // >= the min_prob threshold in force when created
};

/// One generated image's metadata. prompt_id is a template id ("1".."4") for
/// the standard prompts, or a caption id in captions-as-prompts mode.
struct GenerationRecord {
    std::string occupation;
    std::string prompt_id;
    long long seed = 0;
    int face_count = 0;
    std::optional<double> p_female;
};

/// Common shape fed to the filter: training captions and generated images
/// both carry (id, face_count, p_female).
struct ImageMeta {
    std::string id;
    int face_count = 0;
    std::optional<double> p_female;
};

ImageMeta to_image_meta(const CaptionRecord& record);
ImageMeta to_image_meta(const GenerationRecord& record);

struct FilterCounts {
    std::size_t kept = 0;
    std::size_t dropped_face_count = 0;    // face_count != 1
    std::size_t dropped_missing_prob = 0;  // classifier produced no output
    std::size_t dropped_low_confidence = 0;
    std::size_t input() const {
        return kept + dropped_face_count + dropped_missing_prob + dropped_low_confidence;
    }
    FilterCounts& operator+=(const FilterCounts& other);
};

/// Keeps records with exactly one face and max(p, 1-p) >= min_prob; labels
/// Female iff p_female >= 0.5. min_prob must be in (0.5, 1], which makes a
/// p_female of exactly 0.5 impossible to keep.
std::vector<LabeledImage> filter_and_label(std::span<const ImageMeta> records,
                                           double min_prob = 0.9,
                                           FilterCounts* counts = nullptr);

/// 100 * (#Female / total). Throws DataError on an empty list: the caller
/// must drop the occupation and report it.
double pct_female(std::span<const LabeledImage> labeled);

std::vector<GenerationRecord> load_generations(const std::filesystem::path& path);
void save_generations(std::span<const GenerationRecord> records,
                      const std::filesystem::path& path);

}  // namespace biasamp
