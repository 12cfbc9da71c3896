#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rectify/catalog.hpp"
#include "rectify/embedding.hpp"
#include "rectify/types.hpp"

namespace rectify {

// Everything map() learned about one token. `mapped_class` is engaged when
// the token resolved to a catalog class (exact match or cosine >= threshold).
// near_miss marks tokens whose best similarity landed in [0.35, threshold):
// likely objects the mapping could not place.
struct MapResult {
    std::optional<std::string> mapped_class;
    double similarity = 0.0;      // similarity of mapped_class when engaged
    bool exact_match = false;
    bool near_miss = false;
    std::string best_class;       // argmax class even when below threshold
    double best_similarity = 0.0;
    bool has_embedding = false;
};

// Maps free-vocabulary tokens onto catalog classes via word-embedding
// nearest neighbors. Pure and immutable after construction: safe to share
// across threads.
//
// Resolution order per token (after normalization):
//   1. exact catalog match -> (class, 1.0), regardless of threshold
//   2. cosine argmax over class vectors, accepted when >= threshold;
//      ties broken by lexicographically smallest class name
//   3. when the raw token has no embedding and no exact match, retry once
//      with a trailing "es"/"s" stripped
//
// Class vectors: a single-word class uses its own vector; a multiword class
// uses the mean of its member-word vectors present in the store; a class
// with no member vectors is matchable only by exact string match.
class TokenClassMapper {
public:
    static constexpr double kNearMissFloor = 0.35;

    TokenClassMapper(EmbeddingStore store, ClassCatalog catalog,
                     double similarity_threshold = 0.5);

    MapResult map(std::string_view token) const;

    // (class, similarity) or absent; the operation most callers need.
    std::optional<std::pair<std::string, double>> map_token(std::string_view token) const;

    // Set of classes hit across all tokens, plus near-miss bookkeeping.
    ExplanationObjects extract_objects(const std::vector<std::string>& tokens,
                                       const std::string& image_id) const;

    const ClassCatalog& catalog() const { return catalog_; }
    double similarity_threshold() const { return threshold_; }

private:
    MapResult map_normalized(const std::string& token) const;

    EmbeddingStore store_;
    ClassCatalog catalog_;
    double threshold_;
    // Parallel to catalog order; empty vector = class has no embedding.
    std::vector<std::vector<double>> class_vectors_;
};

}  // namespace rectify
