#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rectify {

// In-memory word-vector table loaded from word2vec text format.
class EmbeddingStore {
public:
    EmbeddingStore() = default;
    EmbeddingStore(std::size_t dimension,
                   std::unordered_map<std::string, std::vector<double>> vectors);

    std::size_t dimension() const { return dimension_; }
    std::size_t vocab_size() const { return vectors_.size(); }

    // Missing tokens yield an empty span, not an error.
    std::span<const double> lookup(std::string_view token) const;

    // Copy with every component multiplied by `factor`; cosine decisions
    // are invariant under positive scaling, which tests exploit.
    EmbeddingStore scaled(double factor) const;

private:
    std::size_t dimension_ = 0;
    std::unordered_map<std::string, std::vector<double>> vectors_;
};

// Parses "N D" header then one "token v1 ... vD" row per line.
// When restrict_to is given, only those tokens are retained.
// Malformed headers, wrong-arity rows, non-numeric components and
// duplicate tokens are rejected with the offending line number.
EmbeddingStore load_embeddings(const std::string& path,
                               const std::set<std::string>* restrict_to = nullptr);

}  // namespace rectify
