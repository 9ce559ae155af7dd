#include "biasamp/embednn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "biasamp/errors.hpp"

namespace biasamp {

namespace {

constexpr char kMagic[4] = {'A', 'E', 'M', 'B'};
constexpr unsigned char kVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_uint(const unsigned char* p, int bytes) {
    std::uint64_t v = 0;
    for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace

void EmbeddingMatrix::add(std::string id, std::span<const float> raw) {
    if (id.empty()) throw DataError("embedding with empty id");
    if (raw.size() < 1) throw DataError("embedding '" + id + "' has no components");
    if (dim_ == 0 && ids_.empty()) dim_ = raw.size();
    if (raw.size() != dim_)
        throw DataError("embedding '" + id + "' has dimension " + std::to_string(raw.size()) +
                        ", expected " + std::to_string(dim_));
    double norm_sq = 0.0;
    for (float x : raw) norm_sq += static_cast<double>(x) * static_cast<double>(x);
    if (!(norm_sq > 0.0) || !std::isfinite(norm_sq))
        throw DataError("embedding '" + id + "' is zero or non-finite");
    const double inv_norm = 1.0 / std::sqrt(norm_sq);
    if (!index_.emplace(id, ids_.size()).second)
        throw DataError("duplicate embedding id '" + id + "'");
    ids_.push_back(std::move(id));
    for (float x : raw) data_.push_back(static_cast<float>(x * inv_norm));
}

EmbeddingMatrix EmbeddingMatrix::from_vectors(
    std::vector<std::pair<std::string, std::vector<float>>> rows) {
    EmbeddingMatrix m;
    for (auto& [id, vec] : rows) m.add(std::move(id), vec);
    return m;
}

bool EmbeddingMatrix::contains(std::string_view id) const { return index_.contains(id); }

std::span<const float> EmbeddingMatrix::vec(std::string_view id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw DataError("unknown embedding id '" + std::string(id) + "'");
    return row(it->second);
}

std::span<const float> EmbeddingMatrix::row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
}

EmbeddingMatrix EmbeddingMatrix::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string(), 0, "cannot open file");
    const std::string file = path.string();

    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0) {
        unsigned char header[13];
        in.read(reinterpret_cast<char*>(header), 13);
        if (in.gcount() != 13) throw ParseError(file + ": truncated header");
        if (header[0] != kVersion)
            throw ParseError(file + ": unsupported version " + std::to_string(header[0]));
        const auto dim = static_cast<std::size_t>(get_uint(header + 1, 4));
        const auto count = static_cast<std::size_t>(get_uint(header + 5, 8));
        if (dim == 0) throw ParseError(file + ": zero dimension");
        EmbeddingMatrix m;
        std::vector<float> vec(dim);
        std::string id;
        for (std::size_t i = 0; i < count; ++i) {
            unsigned char len_bytes[2];
            in.read(reinterpret_cast<char*>(len_bytes), 2);
            if (in.gcount() != 2) throw ParseError(file + ": truncated entry");
            const auto id_len = static_cast<std::size_t>(get_uint(len_bytes, 2));
            id.resize(id_len);
            in.read(id.data(), static_cast<std::streamsize>(id_len));
            in.read(reinterpret_cast<char*>(vec.data()),
                    static_cast<std::streamsize>(dim * sizeof(float)));
            if (!in) throw ParseError(file + ": truncated entry for id '" + id + "'");
            m.add(id, vec);
        }
        return m;
    }

    // JSONL fallback: {"id": str, "v": [floats]}
    in.clear();
    in.seekg(0);
    EmbeddingMatrix m;
    std::string line;
    std::size_t lineno = 0;
    std::vector<float> vec;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(file, lineno, std::string("invalid JSON: ") + e.what());
        }
        try {
            vec.clear();
            for (const auto& x : j.at("v")) vec.push_back(x.get<float>());
            m.add(j.at("id").get<std::string>(), vec);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(file, lineno, std::string("bad record: ") + e.what());
        } catch (const DataError& e) {
            throw ParseError(file, lineno, e.what());
        }
    }
    return m;
}

void EmbeddingMatrix::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    std::string header;
    header.append(kMagic, 4);
    header.push_back(static_cast<char>(kVersion));
    put_u32(header, static_cast<std::uint32_t>(dim_));
    put_u64(header, static_cast<std::uint64_t>(ids_.size()));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        const std::string& id = ids_[i];
        if (id.size() > 0xffff) throw DataError("embedding id too long: '" + id + "'");
        std::string entry;
        put_u16(entry, static_cast<std::uint16_t>(id.size()));
        entry += id;
        out.write(entry.data(), static_cast<std::streamsize>(entry.size()));
        out.write(reinterpret_cast<const char*>(data_.data() + i * dim_),
                  static_cast<std::streamsize>(dim_ * sizeof(float)));
    }
}

double cosine(std::span<const float> u, std::span<const float> v) {
    if (u.size() != v.size())
        throw std::invalid_argument("cosine: dimension mismatch (" + std::to_string(u.size()) +
                                    " vs " + std::to_string(v.size()) + ")");
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        acc += static_cast<double>(u[i]) * static_cast<double>(v[i]);
    return std::clamp(acc, -1.0, 1.0);
}

std::vector<Neighbor> top_k_neighbors(const EmbeddingMatrix& matrix, std::span<const float> query,
                                      std::span<const std::string> candidate_ids, std::size_t k) {
    struct Scored {
        double similarity;
        const std::string* id;
    };
    std::vector<Scored> scored;
    scored.reserve(candidate_ids.size());
    for (const auto& id : candidate_ids)
        scored.push_back({cosine(query, matrix.vec(id)), &id});

    const auto better = [](const Scored& a, const Scored& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return *a.id < *b.id;
    };
    const std::size_t take = std::min(k, scored.size());
    std::nth_element(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                     scored.end(), better);
    scored.resize(take);
    std::sort(scored.begin(), scored.end(), better);

    std::vector<Neighbor> out;
    out.reserve(take);
    for (const auto& s : scored) out.push_back({*s.id, s.similarity});
    return out;
}

std::vector<Neighbor> top_k_neighbors(const EmbeddingMatrix& matrix, std::string_view query_id,
                                      std::span<const std::string> candidate_ids, std::size_t k) {
    return top_k_neighbors(matrix, matrix.vec(query_id), candidate_ids, k);
}

SimilarityStat avg_pairwise_similarity(const EmbeddingMatrix& captions,
                                       std::span<const std::string> caption_ids,
                                       const EmbeddingMatrix& prompts,
                                       std::span<const std::string> prompt_ids,
                                       std::string_view occupation) {
    if (caption_ids.empty() || prompt_ids.empty())
        throw DataError("avg_pairwise_similarity over an empty id list");
    double acc = 0.0;
    for (const auto& cid : caption_ids) {
        const auto cvec = captions.vec(cid);
        for (const auto& pid : prompt_ids) acc += cosine(cvec, prompts.vec(pid));
    }
    SimilarityStat stat;
    stat.occupation = std::string(occupation);
    stat.n_pairs = caption_ids.size() * prompt_ids.size();
    stat.mean_pairwise = acc / static_cast<double>(stat.n_pairs);
    return stat;
}

SimilarityStat avg_pairwise_similarity(const EmbeddingMatrix& matrix,
                                       std::span<const std::string> caption_ids,
                                       std::span<const std::string> prompt_ids,
                                       std::string_view occupation) {
    return avg_pairwise_similarity(matrix, caption_ids, matrix, prompt_ids, occupation);
}

std::string prompt_embedding_id(int template_id, std::string_view occupation) {
    return "prompt:" + std::to_string(template_id) + ":" + std::string(occupation);
}

}  // namespace biasamp
