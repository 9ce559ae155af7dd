#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "biasamp/corpus.hpp"
#include "biasamp/labeling.hpp"

namespace biasamp {

/// One token of a caption. begin/end are byte offsets of the alphanumeric
/// core in the original text (a trailing possessive "'s" is not part of it).
struct Token {
    std::string lower;
    std::size_t begin = 0;
    std::size_t end = 0;
    bool was_capitalized = false;
    bool sentence_initial = false;
};

/// Splits on non-alphanumeric boundaries, strips trailing possessive "'s",
/// and records original capitalization.
std::vector<Token> tokenize(std::string_view text);

enum class IndicatorSource { Word, Pronoun, Name };
std::string_view indicator_source_name(IndicatorSource source);

struct IndicatorEvidence {
    std::string token;
    IndicatorSource source = IndicatorSource::Word;
    GenderLabel gender = GenderLabel::Female;
};

enum class IndicatorVerdictKind { None, Male, Female, Mixed };
std::string_view verdict_name(IndicatorVerdictKind kind);

struct IndicatorVerdict {
    IndicatorVerdictKind value = IndicatorVerdictKind::None;
    std::vector<IndicatorEvidence> evidence;
};

/// Gender words and binary pronouns, lowercase. Male and female sets are
/// disjoint within each category.
class IndicatorLexicon {
public:
    /// include_plurals adds men/women/boys/girls/ladies/gentlemen to the
    /// singular word lists; pass false for the strict singular-only lexicon.
    static IndicatorLexicon defaults(bool include_plurals = true);
    static IndicatorLexicon from_sets(std::vector<std::string> male_words,
                                      std::vector<std::string> female_words,
                                      std::vector<std::string> male_pronouns,
                                      std::vector<std::string> female_pronouns);

    bool is_male_word(std::string_view t) const { return male_words_.count(std::string(t)) > 0; }
    bool is_female_word(std::string_view t) const { return female_words_.count(std::string(t)) > 0; }
    bool is_male_pronoun(std::string_view t) const { return male_pronouns_.count(std::string(t)) > 0; }
    bool is_female_pronoun(std::string_view t) const { return female_pronouns_.count(std::string(t)) > 0; }

private:
    std::unordered_set<std::string> male_words_, female_words_;
    std::unordered_set<std::string> male_pronouns_, female_pronouns_;
};

enum class NameCategory { Male, MostlyMale, Female, MostlyFemale, Androgynous, Unknown };

/// Lowercase given name -> category, loaded from a name<TAB>category file.
class NameGenderTable {
public:
    static NameGenderTable load(const std::filesystem::path& path);
    static NameGenderTable from_entries(
        std::vector<std::pair<std::string, NameCategory>> entries);

    NameCategory lookup(std::string_view name) const;
    std::size_t size() const { return table_.size(); }

private:
    std::unordered_map<std::string, NameCategory, TransparentStringHash, std::equal_to<>> table_;
};

NameCategory name_category_from_string(std::string_view s);
std::string_view name_category_name(NameCategory category);

/// Explicit-indicator detection: gender words and pronouns anywhere, plus
/// capitalized tokens whose name-table category is gendered. A capitalized
/// token counts as a name mention only if it is not sentence-initial or is
/// adjacent to another capitalized token; lowercase-only text never yields
/// name evidence. mostly_male/mostly_female count as male/female evidence;
/// androgynous and unknown names contribute nothing.
IndicatorVerdict detect_indicators(std::string_view caption, const IndicatorLexicon& lexicon,
                                   const NameGenderTable& names);

/// Disjoint, exhaustive partition of ids by verdict.
struct IndicatorPartition {
    std::vector<std::string> none, male, female, mixed;
};

IndicatorPartition split_by_indicator(const Corpus& corpus, std::span<const std::string> ids,
                                      const IndicatorLexicon& lexicon,
                                      const NameGenderTable& names);

/// Per-occupation indicator statistics over captions that have a labeled
/// training image.
struct IndicatorStats {
    std::string occupation;
    std::size_t n = 0;                   // labeled images with a known caption
    std::size_t n_indicated = 0;         // verdict != None
    std::size_t n_female_indicated = 0;  // verdict == Female
    std::size_t n_female_images = 0;

    double pct_with_indicator() const { return 100.0 * double(n_indicated) / double(n); }
    double pct_female_indicated() const { return 100.0 * double(n_female_indicated) / double(n); }
    double pct_female_images() const { return 100.0 * double(n_female_images) / double(n); }
};

IndicatorStats indicator_gender_stats(const Corpus& corpus, std::string_view occupation,
                                      std::span<const LabeledImage> labeled_training_images,
                                      const IndicatorLexicon& lexicon,
                                      const NameGenderTable& names);

}  // namespace biasamp
