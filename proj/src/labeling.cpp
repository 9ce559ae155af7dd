#include "biasamp/labeling.hpp"

#include <cassert>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "biasamp/errors.hpp"

namespace biasamp {

using nlohmann::json;

std::string_view label_name(GenderLabel label) {
    return label == GenderLabel::Female ? "female" : "male";
}

ImageMeta to_image_meta(const CaptionRecord& record) {
    return {record.id, record.face_count, record.p_female};
}

ImageMeta to_image_meta(const GenerationRecord& record) {
    return {record.occupation + "|" + record.prompt_id + "|" + std::to_string(record.seed),
            record.face_count, record.p_female};
}

FilterCounts& FilterCounts::operator+=(const FilterCounts& other) {
    kept += other.kept;
    dropped_face_count += other.dropped_face_count;
    dropped_missing_prob += other.dropped_missing_prob;
    dropped_low_confidence += other.dropped_low_confidence;
    return *this;
}

std::vector<LabeledImage> filter_and_label(std::span<const ImageMeta> records, double min_prob,
                                           FilterCounts* counts) {
    if (!(min_prob > 0.5 && min_prob <= 1.0))
        throw std::invalid_argument("min_prob must be in (0.5, 1]");
    FilterCounts local;
    FilterCounts& c = counts ? *counts : local;
    std::vector<LabeledImage> kept;
    for (const auto& rec : records) {
        if (rec.face_count != 1) {
            ++c.dropped_face_count;
            continue;
        }
        if (!rec.p_female) {
            ++c.dropped_missing_prob;
            continue;
        }
        const double p = *rec.p_female;
        const double confidence = std::max(p, 1.0 - p);
        if (confidence < min_prob) {
            ++c.dropped_low_confidence;
            continue;
        }
        assert(p != 0.5);  // unreachable: max(p, 1-p) = 0.5 < min_prob
        kept.push_back({rec.id, p >= 0.5 ? GenderLabel::Female : GenderLabel::Male, confidence});
        ++c.kept;
    }
    return kept;
}

double pct_female(std::span<const LabeledImage> labeled) {
    if (labeled.empty()) throw DataError("pct_female over an empty set");
    std::size_t females = 0;
    for (const auto& img : labeled)
        if (img.label == GenderLabel::Female) ++females;
    return 100.0 * static_cast<double>(females) / static_cast<double>(labeled.size());
}

std::vector<GenerationRecord> load_generations(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string(), 0, "cannot open file");
    const std::string file = path.string();
    std::vector<GenerationRecord> records;
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
        GenerationRecord rec;
        try {
            rec.occupation = j.at("occupation").get<std::string>();
            rec.prompt_id = j.at("prompt_id").get<std::string>();
            rec.seed = j.at("seed").get<long long>();
            rec.face_count = j.at("face_count").get<int>();
            const auto& p = j.at("p_female");
            if (!p.is_null()) rec.p_female = p.get<double>();
        } catch (const json::exception& e) {
            throw ParseError(file, lineno, std::string("bad record: ") + e.what());
        }
        if (rec.face_count < 0) throw ParseError(file, lineno, "negative face_count");
        if (rec.p_female && (*rec.p_female < 0.0 || *rec.p_female > 1.0))
            throw ParseError(file, lineno, "p_female outside [0,1]");
        records.push_back(std::move(rec));
    }
    return records;
}

void save_generations(std::span<const GenerationRecord> records,
                      const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& rec : records) {
        json j;
        j["occupation"] = rec.occupation;
        j["prompt_id"] = rec.prompt_id;
        j["seed"] = rec.seed;
        j["face_count"] = rec.face_count;
        if (rec.p_female)
            j["p_female"] = *rec.p_female;
        else
            j["p_female"] = nullptr;
        out << j.dump() << '\n';
    }
}

}  // namespace biasamp
