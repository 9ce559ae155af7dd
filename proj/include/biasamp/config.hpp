#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "biasamp/corpus.hpp"

namespace biasamp {

struct AuditConfig {
    // Input artifacts. Paths in the config file are resolved relative to the
    // file's directory; existence is checked when the inputs are loaded.
    std::filesystem::path corpus_path;
    std::optional<CorpusFormat> corpus_format;  // default: by extension
    std::filesystem::path generations_path;
    std::filesystem::path caption_embeddings_path;
    std::filesystem::path prompt_embeddings_path;
    std::optional<std::filesystem::path> image_embeddings_path;
    std::filesystem::path name_table_path;

    OccupationLexicon occupations = OccupationLexicon::defaults();
    PromptSet prompts = PromptSet::defaults();
    std::map<std::string, std::string> article_overrides;

    double min_prob = 0.9;
    int k = 500;
    int sample_n = 500;
    int images_per_caption = 10;
    std::uint64_t seed = 0;
    double significance = 0.05;
    bool strict_lexicon = false;
    bool pooled_nn = false;  // one NN subset per occupation instead of per prompt

    /// Canonical key=value form, stable across runs (snapshot format).
    std::string canonical() const;
};

struct ConfigResult {
    std::optional<AuditConfig> config;
    std::vector<std::string> errors;  // empty iff config is set
};

/// Parses and validates; unknown keys are rejected and all problems are
/// aggregated rather than failing on the first.
ConfigResult validate_config(const std::filesystem::path& path);

/// validate_config that throws ConfigError with the full error list.
AuditConfig load_config(const std::filesystem::path& path);

}  // namespace biasamp
