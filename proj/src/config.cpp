#include "biasamp/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "biasamp/errors.hpp"

namespace biasamp {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::string item;
    std::stringstream ss(value);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

bool parse_int(const std::string& s, long long& out) {
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

bool parse_double(const std::string& s, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

bool parse_bool(const std::string& s, bool& out) {
    if (s == "true" || s == "1" || s == "yes") { out = true; return true; }
    if (s == "false" || s == "0" || s == "no") { out = false; return true; }
    return false;
}

}  // namespace

ConfigResult validate_config(const std::filesystem::path& path) {
    ConfigResult result;
    std::ifstream in(path);
    if (!in) {
        result.errors.push_back("cannot open config file: " + path.string());
        return result;
    }
    const std::filesystem::path base = path.has_parent_path() ? path.parent_path() : ".";
    auto resolve = [&](const std::string& value) -> std::filesystem::path {
        std::filesystem::path p(value);
        return p.is_absolute() ? p : base / p;
    };

    AuditConfig config;
    std::vector<std::string>& errors = result.errors;
    std::map<int, std::string> template_overrides;
    std::vector<std::string> occupation_list;
    bool saw_corpus = false, saw_generations = false, saw_cap_emb = false, saw_prompt_emb = false,
         saw_names = false;
    std::map<std::string, int> seen;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            errors.push_back("line " + std::to_string(lineno) + ": empty key");
            continue;
        }
        if (++seen[key] > 1) {
            errors.push_back("duplicate key '" + key + "'");
            continue;
        }

        if (key == "corpus") {
            config.corpus_path = resolve(value);
            saw_corpus = true;
        } else if (key == "corpus_format") {
            if (value == "jsonl") config.corpus_format = CorpusFormat::Jsonl;
            else if (value == "csv") config.corpus_format = CorpusFormat::Csv;
            else errors.push_back("corpus_format: expected jsonl or csv, got '" + value + "'");
        } else if (key == "generations") {
            config.generations_path = resolve(value);
            saw_generations = true;
        } else if (key == "caption_embeddings") {
            config.caption_embeddings_path = resolve(value);
            saw_cap_emb = true;
        } else if (key == "prompt_embeddings") {
            config.prompt_embeddings_path = resolve(value);
            saw_prompt_emb = true;
        } else if (key == "image_embeddings") {
            config.image_embeddings_path = resolve(value);
        } else if (key == "name_table") {
            config.name_table_path = resolve(value);
            saw_names = true;
        } else if (key == "min_prob") {
            if (!parse_double(value, config.min_prob) ||
                !(config.min_prob > 0.5 && config.min_prob <= 1.0))
                errors.push_back("min_prob: must be a number in (0.5, 1]");
        } else if (key == "k") {
            long long v = 0;
            if (!parse_int(value, v) || v < 1)
                errors.push_back("k: must be an integer >= 1");
            else
                config.k = static_cast<int>(v);
        } else if (key == "sample_n") {
            long long v = 0;
            if (!parse_int(value, v) || v < 1)
                errors.push_back("sample_n: must be an integer >= 1");
            else
                config.sample_n = static_cast<int>(v);
        } else if (key == "images_per_caption") {
            long long v = 0;
            if (!parse_int(value, v) || v < 1)
                errors.push_back("images_per_caption: must be an integer >= 1");
            else
                config.images_per_caption = static_cast<int>(v);
        } else if (key == "seed") {
            if (!parse_u64(value, config.seed))
                errors.push_back("seed: must be an unsigned 64-bit integer");
        } else if (key == "significance") {
            if (!parse_double(value, config.significance) ||
                !(config.significance > 0.0 && config.significance < 1.0))
                errors.push_back("significance: must be a number in (0, 1)");
        } else if (key == "strict_lexicon") {
            if (!parse_bool(value, config.strict_lexicon))
                errors.push_back("strict_lexicon: must be true or false");
        } else if (key == "pooled_nn") {
            if (!parse_bool(value, config.pooled_nn))
                errors.push_back("pooled_nn: must be true or false");
        } else if (key == "occupations") {
            occupation_list = split_list(value);
            if (occupation_list.empty()) errors.push_back("occupations: empty list");
        } else if (key.starts_with("prompt_template.")) {
            long long id = 0;
            if (!parse_int(key.substr(16), id) || id < 1)
                errors.push_back("bad prompt template key '" + key + "'");
            else
                template_overrides[static_cast<int>(id)] = value;
        } else if (key.starts_with("article_exception.")) {
            const std::string occupation = key.substr(18);
            if (value != "a" && value != "an")
                errors.push_back(key + ": article must be 'a' or 'an'");
            else
                config.article_overrides[occupation] = value;
        } else {
            errors.push_back("unknown key '" + key + "'");
        }
    }

    if (!saw_corpus) errors.push_back("missing required key 'corpus'");
    if (!saw_generations) errors.push_back("missing required key 'generations'");
    if (!saw_cap_emb) errors.push_back("missing required key 'caption_embeddings'");
    if (!saw_prompt_emb) errors.push_back("missing required key 'prompt_embeddings'");
    if (!saw_names) errors.push_back("missing required key 'name_table'");

    if (!occupation_list.empty()) {
        try {
            config.occupations = OccupationLexicon::from_phrases(occupation_list);
        } catch (const DataError& e) {
            errors.push_back(std::string("occupations: ") + e.what());
        }
    }
    if (!template_overrides.empty()) {
        std::vector<PromptTemplate> templates;
        for (const auto& [id, text] : template_overrides) templates.push_back({id, text});
        try {
            config.prompts = PromptSet::from_templates(std::move(templates));
        } catch (const DataError& e) {
            errors.push_back(std::string("prompt templates: ") + e.what());
        }
    }

    if (errors.empty()) result.config = std::move(config);
    return result;
}

AuditConfig load_config(const std::filesystem::path& path) {
    ConfigResult result = validate_config(path);
    if (!result.config) {
        std::string joined = "invalid config " + path.string();
        for (const auto& e : result.errors) joined += "\n  - " + e;
        throw ConfigError(joined, result.errors);
    }
    return *std::move(result.config);
}

std::string AuditConfig::canonical() const {
    std::ostringstream out;
    out << "corpus = " << corpus_path.string() << "\n";
    if (corpus_format)
        out << "corpus_format = " << (*corpus_format == CorpusFormat::Csv ? "csv" : "jsonl")
            << "\n";
    out << "generations = " << generations_path.string() << "\n";
    out << "caption_embeddings = " << caption_embeddings_path.string() << "\n";
    out << "prompt_embeddings = " << prompt_embeddings_path.string() << "\n";
    if (image_embeddings_path)
        out << "image_embeddings = " << image_embeddings_path->string() << "\n";
    out << "name_table = " << name_table_path.string() << "\n";
    out << "min_prob = " << min_prob << "\n";
    out << "k = " << k << "\n";
    out << "sample_n = " << sample_n << "\n";
    out << "images_per_caption = " << images_per_caption << "\n";
    out << "seed = " << seed << "\n";
    out << "significance = " << significance << "\n";
    out << "strict_lexicon = " << (strict_lexicon ? "true" : "false") << "\n";
    out << "pooled_nn = " << (pooled_nn ? "true" : "false") << "\n";
    out << "occupations = ";
    for (std::size_t i = 0; i < occupations.phrases().size(); ++i) {
        if (i) out << ", ";
        out << occupations.phrases()[i];
    }
    out << "\n";
    for (const auto& tmpl : prompts.templates())
        out << "prompt_template." << tmpl.id << " = " << tmpl.text << "\n";
    for (const auto& [occupation, article] : article_overrides)
        out << "article_exception." << occupation << " = " << article << "\n";
    return out.str();
}

}  // namespace biasamp
