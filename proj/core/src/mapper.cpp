#include "rectify/mapper.hpp"

#include <algorithm>
#include <cmath>

#include "rectify/text.hpp"

namespace rectify {

namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Candidate singular forms for a plural-looking token, most specific first.
std::vector<std::string> plural_stems(const std::string& token) {
    std::vector<std::string> stems;
    if (token.size() > 2 && token.ends_with("es")) {
        stems.push_back(token.substr(0, token.size() - 2));
    }
    if (token.size() > 1 && token.ends_with("s")) {
        stems.push_back(token.substr(0, token.size() - 1));
    }
    return stems;
}

}  // namespace

TokenClassMapper::TokenClassMapper(EmbeddingStore store, ClassCatalog catalog,
                                   double similarity_threshold)
    : store_(std::move(store)), catalog_(std::move(catalog)), threshold_(similarity_threshold) {
    class_vectors_.reserve(catalog_.size());
    for (const std::string& cls : catalog_.classes()) {
        std::vector<std::string> words = split_words(cls);
        std::vector<double> mean;
        std::size_t contributing = 0;
        for (const std::string& word : words) {
            std::span<const double> vec = store_.lookup(word);
            if (vec.empty()) continue;
            if (mean.empty()) mean.assign(vec.begin(), vec.end());
            else {
                for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += vec[i];
            }
            ++contributing;
        }
        if (contributing > 1) {
            for (double& v : mean) v /= double(contributing);
        }
        class_vectors_.push_back(std::move(mean));  // empty = exact match only
    }
}

MapResult TokenClassMapper::map_normalized(const std::string& token) const {
    MapResult result;
    if (catalog_.contains(token)) {
        result.mapped_class = token;
        result.similarity = 1.0;
        result.exact_match = true;
        result.best_class = token;
        result.best_similarity = 1.0;
        return result;
    }

    std::span<const double> vec = store_.lookup(token);
    if (vec.empty()) return result;

    result.has_embedding = true;
    double best = -2.0;
    const std::string* best_class = nullptr;
    for (std::size_t i = 0; i < class_vectors_.size(); ++i) {
        if (class_vectors_[i].empty()) continue;
        double sim = cosine(vec, class_vectors_[i]);
        // ties resolve to the lexicographically smallest class name, which
        // is the first hit in catalog order only if sorted; compare names.
        if (sim > best ||
            (sim == best && best_class != nullptr && catalog_.classes()[i] < *best_class)) {
            best = sim;
            best_class = &catalog_.classes()[i];
        }
    }
    if (best_class == nullptr) return result;

    result.best_class = *best_class;
    result.best_similarity = best;
    if (best >= threshold_) {
        result.mapped_class = *best_class;
        result.similarity = best;
    } else if (best >= kNearMissFloor) {
        result.near_miss = true;
    }
    return result;
}

MapResult TokenClassMapper::map(std::string_view token) const {
    std::string normalized = normalize_token(token);
    if (normalized.empty()) return {};

    MapResult result = map_normalized(normalized);
    if (result.mapped_class || result.has_embedding) return result;

    // No embedding and no exact match: retry once with the plural stripped.
    for (const std::string& stem : plural_stems(normalized)) {
        MapResult retry = map_normalized(stem);
        if (retry.mapped_class || retry.has_embedding) return retry;
    }
    return result;
}

std::optional<std::pair<std::string, double>> TokenClassMapper::map_token(
    std::string_view token) const {
    MapResult result = map(token);
    if (!result.mapped_class) return std::nullopt;
    return std::make_pair(*result.mapped_class, result.similarity);
}

ExplanationObjects TokenClassMapper::extract_objects(const std::vector<std::string>& tokens,
                                                     const std::string& image_id) const {
    ExplanationObjects objects;
    objects.image_id = image_id;
    std::set<std::string> seen_unmapped;
    for (const std::string& token : tokens) {
        MapResult result = map(token);
        if (result.mapped_class) {
            objects.classes.insert(*result.mapped_class);
        } else if (result.near_miss && seen_unmapped.insert(token).second) {
            objects.unmapped_tokens.push_back(token);
        }
    }
    return objects;
}

}  // namespace rectify
