#include "biasamp/indicator.hpp"

#include <algorithm>
#include <fstream>

#include "biasamp/errors.hpp"
#include "biasamp/text_match.hpp"

namespace biasamp {

namespace {

bool is_upper_ascii(unsigned char c) { return c >= 'A' && c <= 'Z'; }

// Byte length of an apostrophe at pos (ASCII ' or U+2019), else 0.
std::size_t apostrophe_len(std::string_view text, std::size_t pos) {
    if (pos >= text.size()) return 0;
    if (text[pos] == '\'') return 1;
    if (pos + 3 <= text.size() && static_cast<unsigned char>(text[pos]) == 0xE2 &&
        static_cast<unsigned char>(text[pos + 1]) == 0x80 &&
        static_cast<unsigned char>(text[pos + 2]) == 0x99)
        return 3;
    return 0;
}

bool gap_ends_sentence(std::string_view gap) {
    return gap.find_first_of(".!?") != std::string_view::npos;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    std::size_t prev_end = 0;
    // U+2019 acts as a boundary like the ASCII apostrophe, despite being a
    // multi-byte sequence that would otherwise count as word bytes.
    auto word_byte_at = [&](std::size_t pos) {
        return is_word_byte(static_cast<unsigned char>(text[pos])) &&
               apostrophe_len(text, pos) != 3;
    };
    while (i < text.size()) {
        if (!word_byte_at(i)) {
            i += apostrophe_len(text, i) == 3 ? 3 : 1;
            continue;
        }
        const std::size_t begin = i;
        while (i < text.size() && word_byte_at(i)) ++i;

        Token tok;
        tok.begin = begin;
        tok.end = i;
        tok.was_capitalized = is_upper_ascii(static_cast<unsigned char>(text[begin]));
        tok.sentence_initial =
            tokens.empty() || gap_ends_sentence(text.substr(prev_end, begin - prev_end));
        tok.lower.reserve(i - begin);
        for (std::size_t k = begin; k < i; ++k) tok.lower.push_back(to_lower_ascii(text[k]));

        // Possessive strip: a lone "s"/"S" right after an apostrophe that
        // itself follows the previous token is the possessive marker.
        bool possessive_s = false;
        if (tok.lower == "s" && !tokens.empty()) {
            if (begin >= 1 && apostrophe_len(text, begin - 1) == 1 &&
                tokens.back().end == begin - 1)
                possessive_s = true;
            else if (begin >= 3 && apostrophe_len(text, begin - 3) == 3 &&
                     tokens.back().end == begin - 3)
                possessive_s = true;
        }
        if (!possessive_s) {
            tokens.push_back(std::move(tok));
            prev_end = i;
        }
    }
    return tokens;
}

std::string_view indicator_source_name(IndicatorSource source) {
    switch (source) {
        case IndicatorSource::Word: return "word";
        case IndicatorSource::Pronoun: return "pronoun";
        case IndicatorSource::Name: return "name";
    }
    return "unknown";
}

std::string_view verdict_name(IndicatorVerdictKind kind) {
    switch (kind) {
        case IndicatorVerdictKind::None: return "none";
        case IndicatorVerdictKind::Male: return "male";
        case IndicatorVerdictKind::Female: return "female";
        case IndicatorVerdictKind::Mixed: return "mixed";
    }
    return "unknown";
}

IndicatorLexicon IndicatorLexicon::defaults(bool include_plurals) {
    std::vector<std::string> male_words = {"male", "man", "gent", "gentleman", "boy"};
    std::vector<std::string> female_words = {"female", "woman", "lady", "girl"};
    if (include_plurals) {
        male_words.insert(male_words.end(), {"men", "gentlemen", "boys"});
        female_words.insert(female_words.end(), {"women", "ladies", "girls"});
    }
    return from_sets(std::move(male_words), std::move(female_words),
                     {"he", "him", "his", "himself"}, {"she", "her", "hers", "herself"});
}

IndicatorLexicon IndicatorLexicon::from_sets(std::vector<std::string> male_words,
                                             std::vector<std::string> female_words,
                                             std::vector<std::string> male_pronouns,
                                             std::vector<std::string> female_pronouns) {
    IndicatorLexicon lex;
    lex.male_words_.insert(male_words.begin(), male_words.end());
    lex.female_words_.insert(female_words.begin(), female_words.end());
    lex.male_pronouns_.insert(male_pronouns.begin(), male_pronouns.end());
    lex.female_pronouns_.insert(female_pronouns.begin(), female_pronouns.end());
    for (const auto& w : lex.male_words_)
        if (lex.female_words_.count(w))
            throw DataError("indicator word in both male and female sets: '" + w + "'");
    for (const auto& w : lex.male_pronouns_)
        if (lex.female_pronouns_.count(w))
            throw DataError("pronoun in both male and female sets: '" + w + "'");
    return lex;
}

NameCategory name_category_from_string(std::string_view s) {
    if (s == "male") return NameCategory::Male;
    if (s == "mostly_male") return NameCategory::MostlyMale;
    if (s == "female") return NameCategory::Female;
    if (s == "mostly_female") return NameCategory::MostlyFemale;
    if (s == "androgynous") return NameCategory::Androgynous;
    if (s == "unknown") return NameCategory::Unknown;
    throw DataError("unknown name category '" + std::string(s) + "'");
}

std::string_view name_category_name(NameCategory category) {
    switch (category) {
        case NameCategory::Male: return "male";
        case NameCategory::MostlyMale: return "mostly_male";
        case NameCategory::Female: return "female";
        case NameCategory::MostlyFemale: return "mostly_female";
        case NameCategory::Androgynous: return "androgynous";
        case NameCategory::Unknown: return "unknown";
    }
    return "unknown";
}

NameGenderTable NameGenderTable::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string(), 0, "cannot open file");
    std::vector<std::pair<std::string, NameCategory>> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError(path.string(), lineno, "expected name<TAB>category");
        try {
            entries.emplace_back(line.substr(0, tab),
                                 name_category_from_string(line.substr(tab + 1)));
        } catch (const DataError& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
    }
    try {
        return from_entries(std::move(entries));
    } catch (const DataError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

NameGenderTable NameGenderTable::from_entries(
    std::vector<std::pair<std::string, NameCategory>> entries) {
    NameGenderTable table;
    for (auto& [name, category] : entries) {
        if (name.empty()) throw DataError("empty name in name-gender table");
        for (char c : name)
            if (is_upper_ascii(static_cast<unsigned char>(c)))
                throw DataError("name-gender table keys must be lowercase: '" + name + "'");
        if (!table.table_.emplace(std::move(name), category).second)
            throw DataError("duplicate name in name-gender table");
    }
    return table;
}

NameCategory NameGenderTable::lookup(std::string_view name) const {
    auto it = table_.find(name);
    return it == table_.end() ? NameCategory::Unknown : it->second;
}

IndicatorVerdict detect_indicators(std::string_view caption, const IndicatorLexicon& lexicon,
                                   const NameGenderTable& names) {
    const auto tokens = tokenize(caption);
    IndicatorVerdict verdict;
    bool any_male = false, any_female = false;

    auto add = [&](const std::string& token, IndicatorSource source, GenderLabel gender) {
        verdict.evidence.push_back({token, source, gender});
        (gender == GenderLabel::Male ? any_male : any_female) = true;
    };

    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token& tok = tokens[i];
        if (lexicon.is_male_word(tok.lower)) add(tok.lower, IndicatorSource::Word, GenderLabel::Male);
        if (lexicon.is_female_word(tok.lower))
            add(tok.lower, IndicatorSource::Word, GenderLabel::Female);
        if (lexicon.is_male_pronoun(tok.lower))
            add(tok.lower, IndicatorSource::Pronoun, GenderLabel::Male);
        if (lexicon.is_female_pronoun(tok.lower))
            add(tok.lower, IndicatorSource::Pronoun, GenderLabel::Female);

        if (!tok.was_capitalized) continue;
        const bool adjacent_capitalized = (i > 0 && tokens[i - 1].was_capitalized) ||
                                          (i + 1 < tokens.size() && tokens[i + 1].was_capitalized);
        if (tok.sentence_initial && !adjacent_capitalized) continue;
        switch (names.lookup(tok.lower)) {
            case NameCategory::Male:
            case NameCategory::MostlyMale:
                add(tok.lower, IndicatorSource::Name, GenderLabel::Male);
                break;
            case NameCategory::Female:
            case NameCategory::MostlyFemale:
                add(tok.lower, IndicatorSource::Name, GenderLabel::Female);
                break;
            default:
                break;
        }
    }

    if (any_male && any_female)
        verdict.value = IndicatorVerdictKind::Mixed;
    else if (any_male)
        verdict.value = IndicatorVerdictKind::Male;
    else if (any_female)
        verdict.value = IndicatorVerdictKind::Female;
    else
        verdict.value = IndicatorVerdictKind::None;
    return verdict;
}

IndicatorPartition split_by_indicator(const Corpus& corpus, std::span<const std::string> ids,
                                      const IndicatorLexicon& lexicon,
                                      const NameGenderTable& names) {
    IndicatorPartition partition;
    for (const auto& id : ids) {
        const CaptionRecord& rec = corpus.at(id);
        switch (detect_indicators(rec.text, lexicon, names).value) {
            case IndicatorVerdictKind::None: partition.none.push_back(id); break;
            case IndicatorVerdictKind::Male: partition.male.push_back(id); break;
            case IndicatorVerdictKind::Female: partition.female.push_back(id); break;
            case IndicatorVerdictKind::Mixed: partition.mixed.push_back(id); break;
        }
    }
    return partition;
}

IndicatorStats indicator_gender_stats(const Corpus& corpus, std::string_view occupation,
                                      std::span<const LabeledImage> labeled_training_images,
                                      const IndicatorLexicon& lexicon,
                                      const NameGenderTable& names) {
    IndicatorStats stats;
    stats.occupation = std::string(occupation);
    for (const auto& img : labeled_training_images) {
        const CaptionRecord* rec = corpus.find(img.id);
        if (!rec) continue;
        ++stats.n;
        if (img.label == GenderLabel::Female) ++stats.n_female_images;
        const auto verdict = detect_indicators(rec->text, lexicon, names).value;
        if (verdict != IndicatorVerdictKind::None) ++stats.n_indicated;
        if (verdict == IndicatorVerdictKind::Female) ++stats.n_female_indicated;
    }
    if (stats.n == 0)
        throw DataError("occupation '" + stats.occupation +
                        "' has no caption with a labeled training image");
    return stats;
}

}  // namespace biasamp
