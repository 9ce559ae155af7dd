#include "biasamp/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "biasamp/errors.hpp"
#include "biasamp/rng.hpp"
#include "biasamp/text_match.hpp"

namespace biasamp {

namespace {

using nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string(), 0, "cannot open file");
    return in;
}

CaptionRecord record_from_json(const json& j, const std::string& file, std::size_t line) {
    if (!j.is_object()) throw ParseError(file, line, "record is not a JSON object");
    CaptionRecord rec;
    try {
        rec.id = j.at("id").get<std::string>();
        rec.text = j.at("text").get<std::string>();
        rec.face_count = j.at("face_count").get<int>();
        const auto& p = j.at("p_female");
        if (!p.is_null()) rec.p_female = p.get<double>();
    } catch (const json::exception& e) {
        throw ParseError(file, line, std::string("bad record: ") + e.what());
    }
    return rec;
}

// Minimal RFC-4180 CSV row reader: quoted fields, doubled-quote escapes,
// embedded newlines inside quotes.
bool read_csv_row(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
    fields.clear();
    int c = in.get();
    if (c == EOF) return false;
    std::string field;
    bool quoted = false;
    ++line;
    while (true) {
        if (c == EOF) {
            fields.push_back(std::move(field));
            return true;
        }
        char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                if (ch == '\n') ++line;
                field.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (ch == '\r') {
            // swallow; handled with the following \n
        } else if (ch == '\n') {
            fields.push_back(std::move(field));
            return true;
        } else {
            field.push_back(ch);
        }
        c = in.get();
    }
}

}  // namespace

void Corpus::add(CaptionRecord record) {
    if (record.id.empty()) throw DataError("caption record with empty id");
    if (record.text.empty()) throw DataError("caption '" + record.id + "' has empty text");
    if (record.face_count < 0)
        throw DataError("caption '" + record.id + "' has negative face_count");
    if (record.p_female && (*record.p_female < 0.0 || *record.p_female > 1.0))
        throw DataError("caption '" + record.id + "' has p_female outside [0,1]");
    auto [it, inserted] = index_.emplace(record.id, records_.size());
    if (!inserted) throw DataError("duplicate caption id '" + record.id + "'");
    records_.push_back(std::move(record));
}

const CaptionRecord* Corpus::find(std::string_view id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &records_[it->second];
}

const CaptionRecord& Corpus::at(std::string_view id) const {
    const CaptionRecord* rec = find(id);
    if (!rec) throw DataError("unknown caption id '" + std::string(id) + "'");
    return *rec;
}

Corpus Corpus::load(const std::filesystem::path& path) {
    return load(path, path.extension() == ".csv" ? CorpusFormat::Csv : CorpusFormat::Jsonl);
}

Corpus Corpus::load(const std::filesystem::path& path, CorpusFormat format) {
    auto in = open_input(path);
    const std::string file = path.string();
    Corpus corpus;

    if (format == CorpusFormat::Jsonl) {
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error& e) {
                throw ParseError(file, lineno, std::string("invalid JSON: ") + e.what());
            }
            try {
                corpus.add(record_from_json(j, file, lineno));
            } catch (const DataError& e) {
                throw ParseError(file, lineno, e.what());
            }
        }
        return corpus;
    }

    std::vector<std::string> fields;
    std::size_t lineno = 0;
    if (!read_csv_row(in, fields, lineno)) throw ParseError(file, 0, "empty CSV file");
    static const std::vector<std::string> expected = {"id", "text", "face_count", "p_female"};
    std::vector<int> col(expected.size(), -1);
    for (std::size_t i = 0; i < fields.size(); ++i) {
        auto it = std::find(expected.begin(), expected.end(), fields[i]);
        if (it == expected.end())
            throw ParseError(file, 1, "unknown CSV column '" + fields[i] + "'");
        col[static_cast<std::size_t>(it - expected.begin())] = static_cast<int>(i);
    }
    for (std::size_t i = 0; i < expected.size(); ++i)
        if (col[i] < 0) throw ParseError(file, 1, "missing CSV column '" + expected[i] + "'");

    while (read_csv_row(in, fields, lineno)) {
        if (fields.size() == 1 && fields[0].empty()) continue;  // trailing blank line
        const std::size_t row_line = lineno;
        if (fields.size() != expected.size())
            throw ParseError(file, row_line, "expected 4 CSV fields, got " +
                                                 std::to_string(fields.size()));
        CaptionRecord rec;
        rec.id = fields[static_cast<std::size_t>(col[0])];
        rec.text = fields[static_cast<std::size_t>(col[1])];
        try {
            rec.face_count = std::stoi(fields[static_cast<std::size_t>(col[2])]);
        } catch (const std::exception&) {
            throw ParseError(file, row_line, "face_count is not an integer");
        }
        const std::string& p = fields[static_cast<std::size_t>(col[3])];
        if (!p.empty()) {
            try {
                rec.p_female = std::stod(p);
            } catch (const std::exception&) {
                throw ParseError(file, row_line, "p_female is not a number");
            }
        }
        try {
            corpus.add(std::move(rec));
        } catch (const DataError& e) {
            throw ParseError(file, row_line, e.what());
        }
    }
    return corpus;
}

void Corpus::save_jsonl(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& rec : records_) {
        json j;
        j["id"] = rec.id;
        j["text"] = rec.text;
        j["face_count"] = rec.face_count;
        if (rec.p_female)
            j["p_female"] = *rec.p_female;
        else
            j["p_female"] = nullptr;
        out << j.dump() << '\n';
    }
}

OccupationLexicon OccupationLexicon::defaults() {
    return from_phrases({
        "accountant",  "architect",        "assistant",    "athlete",      "attorney",
        "author",      "baker",            "bartender",    "ceo",          "chef",
        "comedian",    "cook",             "dancer",       "dentist",      "dietitian",
        "doctor",      "engineer",         "entrepreneur", "fashion designer",
        "filmmaker",   "firefighter",      "graphic designer",             "hairdresser",
        "housekeeper", "intern",           "janitor",      "journalist",   "lawyer",
        "librarian",   "manager",          "mechanic",     "musician",     "nurse",
        "nutritionist","painter",          "pharmacist",   "photographer", "physician",
        "pilot",       "poet",             "politician",   "president",    "prime minister",
        "professor",   "programmer",       "psychologist", "receptionist", "reporter",
        "researcher",  "salesperson",      "scientist",    "senator",      "singer",
        "student",     "supervisor",       "surgeon",      "teacher",      "technician",
        "therapist",   "tutor",            "veterinarian", "writer",
    });
}

OccupationLexicon OccupationLexicon::from_phrases(std::vector<std::string> phrases) {
    OccupationLexicon lex;
    for (const auto& phrase : phrases) {
        if (phrase.empty()) throw DataError("empty occupation phrase");
        bool prev_space = true;
        for (char c : phrase) {
            if (c >= 'A' && c <= 'Z')
                throw DataError("occupation phrase not lowercase: '" + phrase + "'");
            if (c == ' ') {
                if (prev_space)
                    throw DataError("occupation phrase has stray spaces: '" + phrase + "'");
                prev_space = true;
            } else if (is_space_byte(static_cast<unsigned char>(c))) {
                throw DataError("occupation phrase has non-space whitespace: '" + phrase + "'");
            } else {
                prev_space = false;
            }
        }
        if (prev_space) throw DataError("occupation phrase has stray spaces: '" + phrase + "'");
        if (lex.contains(phrase)) throw DataError("duplicate occupation phrase: '" + phrase + "'");
        lex.phrases_.push_back(phrase);
    }
    return lex;
}

bool OccupationLexicon::contains(std::string_view phrase) const {
    return std::find(phrases_.begin(), phrases_.end(), phrase) != phrases_.end();
}

PromptSet PromptSet::defaults() {
    return from_templates({
        {1, "A photo of the face of a/an [OCCUPATION]"},
        {2, "A portrait photo of a/an [OCCUPATION]"},
        {3, "A photo of a/an [OCCUPATION] smiling"},
        {4, "A photo of a/an [OCCUPATION] at work"},
    });
}

namespace {
constexpr std::string_view kPlaceholder = "[OCCUPATION]";
}

PromptSet PromptSet::from_templates(std::vector<PromptTemplate> templates) {
    PromptSet set;
    for (auto& tmpl : templates) {
        const auto first = tmpl.text.find(kPlaceholder);
        if (first == std::string::npos)
            throw DataError("prompt template " + std::to_string(tmpl.id) +
                            " is missing the [OCCUPATION] placeholder");
        if (tmpl.text.find(kPlaceholder, first + 1) != std::string::npos)
            throw DataError("prompt template " + std::to_string(tmpl.id) +
                            " has more than one [OCCUPATION] placeholder");
        for (const auto& existing : set.templates_)
            if (existing.id == tmpl.id)
                throw DataError("duplicate prompt template id " + std::to_string(tmpl.id));
        set.templates_.push_back(std::move(tmpl));
    }
    return set;
}

const PromptTemplate& PromptSet::at(int id) const {
    for (const auto& tmpl : templates_)
        if (tmpl.id == id) return tmpl;
    throw DataError("unknown prompt template id " + std::to_string(id));
}

std::string render_prompt(const PromptTemplate& tmpl, std::string_view occupation,
                          const std::map<std::string, std::string>& article_overrides) {
    const auto pos = tmpl.text.find(kPlaceholder);
    if (pos == std::string::npos)
        throw std::invalid_argument("prompt template " + std::to_string(tmpl.id) +
                                    " is missing the [OCCUPATION] placeholder");
    if (occupation.empty()) throw std::invalid_argument("empty occupation");

    std::string article;
    std::size_t article_at = std::string::npos;
    // Resolve an "a/an " literal immediately before the placeholder.
    if (pos >= 5) {
        std::string_view before(tmpl.text.data() + pos - 5, 5);
        if ((before == "a/an " || before == "A/an " || before == "A/AN ")) {
            article_at = pos - 5;
            auto it = article_overrides.find(std::string(occupation));
            if (it != article_overrides.end()) {
                article = it->second;
            } else {
                const char first = to_lower_ascii(occupation.front());
                const bool vowel =
                    first == 'a' || first == 'e' || first == 'i' || first == 'o' || first == 'u';
                article = vowel ? "an" : "a";
            }
            if (before.front() == 'A') article.front() = 'A';
        }
    }

    std::string out;
    if (article_at != std::string::npos) {
        out = tmpl.text.substr(0, article_at);
        out += article;
        out += ' ';
    } else {
        out = tmpl.text.substr(0, pos);
    }
    out += occupation;
    out += tmpl.text.substr(pos + kPlaceholder.size());
    return out;
}

std::string_view method_name(SelectionMethod method) {
    switch (method) {
        case SelectionMethod::Naive: return "naive";
        case SelectionMethod::NoIndicator: return "no_indicator";
        case SelectionMethod::NN: return "nn";
        case SelectionMethod::NNNoIndicator: return "nn_no_indicator";
        case SelectionMethod::CaptionsAsPrompts: return "captions_as_prompts";
    }
    return "unknown";
}

std::string_view method_display_name(SelectionMethod method) {
    switch (method) {
        case SelectionMethod::Naive: return "Naive";
        case SelectionMethod::NoIndicator: return "No Gender Indicators";
        case SelectionMethod::NN: return "Nearest Neighbors";
        case SelectionMethod::NNNoIndicator: return "NN + No Gender Indicators";
        case SelectionMethod::CaptionsAsPrompts: return "Captions as Prompts";
    }
    return "unknown";
}

std::optional<SelectionMethod> method_from_name(std::string_view name) {
    std::string n(name);
    std::replace(n.begin(), n.end(), '-', '_');
    for (auto m : all_methods())
        if (method_name(m) == n) return m;
    return std::nullopt;
}

const std::vector<SelectionMethod>& all_methods() {
    static const std::vector<SelectionMethod> methods = {
        SelectionMethod::Naive, SelectionMethod::NoIndicator, SelectionMethod::NN,
        SelectionMethod::NNNoIndicator, SelectionMethod::CaptionsAsPrompts};
    return methods;
}

std::vector<std::string> query_occupation(const Corpus& corpus, std::string_view occupation) {
    PhraseMatcher matcher({std::string(occupation)});
    std::vector<std::string> out;
    std::vector<bool> hits;
    std::string scratch;
    for (const auto& rec : corpus.records()) {
        matcher.match(rec.text, hits, scratch);
        if (hits[0]) out.push_back(rec.id);
    }
    return out;
}

std::map<std::string, std::vector<std::string>> query_all(const Corpus& corpus,
                                                          const OccupationLexicon& lexicon) {
    PhraseMatcher matcher(lexicon.phrases());
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& phrase : lexicon.phrases()) out[phrase];
    std::vector<bool> hits;
    std::string scratch;
    for (const auto& rec : corpus.records()) {
        matcher.match(rec.text, hits, scratch);
        for (std::size_t p = 0; p < hits.size(); ++p)
            if (hits[p]) out[lexicon.phrases()[p]].push_back(rec.id);
    }
    return out;
}

TrainingSubset sample_subset(std::vector<std::string> ids, int sample_n, std::uint64_t seed) {
    if (sample_n < 1) throw std::invalid_argument("sample_n must be >= 1");
    TrainingSubset subset;
    subset.spec.sample_n = sample_n;
    subset.spec.seed = seed;
    std::sort(ids.begin(), ids.end());
    const std::size_t want = static_cast<std::size_t>(sample_n);
    subset.short_sample = ids.size() < want;
    const std::size_t take = std::min(want, ids.size());
    Rng rng(seed);
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + rng.index(ids.size() - i);
        std::swap(ids[i], ids[j]);
    }
    ids.resize(take);
    subset.ids = std::move(ids);
    return subset;
}

}  // namespace biasamp
