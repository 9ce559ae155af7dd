#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "biasamp/corpus.hpp"

namespace biasamp {

/// Id-aligned unit-norm float32 vectors. Raw input vectors are renormalized
/// on construction, so downstream similarities are invariant to positive
/// rescaling of the inputs.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;

    /// Reads the binary "AEMB" format or, when the magic is absent, JSONL
    /// records {"id": str, "v": [floats]}.
    static EmbeddingMatrix load(const std::filesystem::path& path);
    static EmbeddingMatrix from_vectors(
        std::vector<std::pair<std::string, std::vector<float>>> rows);

    void add(std::string id, std::span<const float> vec);
    void save(const std::filesystem::path& path) const;

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return ids_.size(); }
    bool contains(std::string_view id) const;
    std::span<const float> vec(std::string_view id) const;  // throws DataError if absent
    std::span<const float> row(std::size_t i) const;
    const std::vector<std::string>& ids() const { return ids_; }

private:
    std::size_t dim_ = 0;
    std::vector<float> data_;
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t, TransparentStringHash, std::equal_to<>> index_;
};

/// Dot product of unit vectors, accumulated in double and clamped to [-1,1].
double cosine(std::span<const float> u, std::span<const float> v);

struct Neighbor {
    std::string id;
    double similarity = 0.0;
};

/// Exact top-k by descending similarity, ties broken by ascending id. Returns
/// all candidates when fewer than k are available.
std::vector<Neighbor> top_k_neighbors(const EmbeddingMatrix& matrix, std::span<const float> query,
                                      std::span<const std::string> candidate_ids, std::size_t k);
std::vector<Neighbor> top_k_neighbors(const EmbeddingMatrix& matrix, std::string_view query_id,
                                      std::span<const std::string> candidate_ids, std::size_t k);

struct SimilarityStat {
    std::string occupation;
    double mean_pairwise = 0.0;
    std::size_t n_pairs = 0;  // |captions| x |prompts|
};

/// Mean cosine over all caption x prompt pairs.
SimilarityStat avg_pairwise_similarity(const EmbeddingMatrix& captions,
                                       std::span<const std::string> caption_ids,
                                       const EmbeddingMatrix& prompts,
                                       std::span<const std::string> prompt_ids,
                                       std::string_view occupation = {});
SimilarityStat avg_pairwise_similarity(const EmbeddingMatrix& matrix,
                                       std::span<const std::string> caption_ids,
                                       std::span<const std::string> prompt_ids,
                                       std::string_view occupation = {});

/// Embedding-file id for the prompt of (template, occupation).
std::string prompt_embedding_id(int template_id, std::string_view occupation);

}  // namespace biasamp
