#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace biasamp {

struct CaptionRecord {
    std::string id;
    std::string text;
    int face_count = 0;
    std::optional<double> p_female;  // absent when no face was detected upstream
};

enum class CorpusFormat { Jsonl, Csv };

struct TransparentStringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
        return std::hash<std::string_view>{}(s);
    }
};

/// Caption corpus. Immutable once loaded; insertion order is preserved and
/// all query results are reported in that order.
class Corpus {
public:
    Corpus() = default;

    static Corpus load(const std::filesystem::path& path, CorpusFormat format);
    /// Picks the format from the extension (.csv vs anything else = JSONL).
    static Corpus load(const std::filesystem::path& path);

    /// Validates and appends one record. Throws DataError on duplicate id,
    /// empty id/text, negative face_count, or p_female outside [0,1].
    void add(CaptionRecord record);

    const std::vector<CaptionRecord>& records() const { return records_; }
    const CaptionRecord* find(std::string_view id) const;
    const CaptionRecord& at(std::string_view id) const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }
    std::size_t size() const { return records_.size(); }

    void save_jsonl(const std::filesystem::path& path) const;

private:
    std::vector<CaptionRecord> records_;
    std::unordered_map<std::string, std::size_t, TransparentStringHash, std::equal_to<>> index_;
};

/// Ordered set of lowercase occupation phrases.
class OccupationLexicon {
public:
    /// The 62 default occupations.
    static OccupationLexicon defaults();
    /// Validates: non-empty, lowercase, single-space-separated, unique.
    static OccupationLexicon from_phrases(std::vector<std::string> phrases);

    const std::vector<std::string>& phrases() const { return phrases_; }
    bool contains(std::string_view phrase) const;
    std::size_t size() const { return phrases_.size(); }

private:
    std::vector<std::string> phrases_;
};

struct PromptTemplate {
    int id = 0;
    std::string text;  // contains exactly one "[OCCUPATION]" placeholder
};

/// Prompt templates used to generate images, keyed by stable id.
class PromptSet {
public:
    /// The four default templates (ids 1..4).
    static PromptSet defaults();
    static PromptSet from_templates(std::vector<PromptTemplate> templates);

    const std::vector<PromptTemplate>& templates() const { return templates_; }
    const PromptTemplate& at(int id) const;
    std::size_t size() const { return templates_.size(); }

private:
    std::vector<PromptTemplate> templates_;
};

/// Replaces the placeholder, resolving a leading "a/an" by the first-letter
/// vowel rule. article_overrides maps occupation -> "a" or "an" for
/// pronunciation exceptions.
std::string render_prompt(const PromptTemplate& tmpl, std::string_view occupation,
                          const std::map<std::string, std::string>& article_overrides = {});

enum class SelectionMethod { Naive, NoIndicator, NN, NNNoIndicator, CaptionsAsPrompts };

std::string_view method_name(SelectionMethod method);
std::string_view method_display_name(SelectionMethod method);
std::optional<SelectionMethod> method_from_name(std::string_view name);
/// Canonical ordering: Naive, NoIndicator, NN, NNNoIndicator, CaptionsAsPrompts.
const std::vector<SelectionMethod>& all_methods();

struct SelectionSpec {
    SelectionMethod method = SelectionMethod::Naive;
    int k = 500;
    int sample_n = 500;
    std::uint64_t seed = 0;
};

struct TrainingSubset {
    std::string occupation;
    std::optional<int> prompt_id;  // set for per-prompt NN selections
    SelectionSpec spec;
    std::vector<std::string> ids;
    bool short_sample = false;  // fewer than sample_n candidates were available
};

/// Ids of captions containing the phrase as a case-insensitive token-boundary
/// match, in corpus order. occupation must be in lexicon form (lowercase).
std::vector<std::string> query_occupation(const Corpus& corpus, std::string_view occupation);

/// Single-pass multi-occupation query; equals per-occupation query_occupation.
std::map<std::string, std::vector<std::string>> query_all(const Corpus& corpus,
                                                          const OccupationLexicon& lexicon);

/// Uniform sample of min(sample_n, |ids|) ids without replacement. Depends
/// only on (sorted ids, sample_n, seed); input order is irrelevant.
TrainingSubset sample_subset(std::vector<std::string> ids, int sample_n, std::uint64_t seed);

}  // namespace biasamp
