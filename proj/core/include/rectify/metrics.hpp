#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rectify/types.hpp"

namespace rectify {

// Area-fraction cutoff: classes whose most prominent instance covers less
// than `threshold` of the image are dropped before scoring.
struct ProminenceSpec {
    double threshold = 0.0;  // in [0,1]
};

enum class Aggregation { macro, micro };

struct AggregateReport {
    std::vector<MetricsRecord> per_image;  // image_id order
    // Absent when no image could be scored.
    std::optional<double> mean_inconsistency;
    std::optional<double> mean_completeness;
    int n_scored = 0;
    int n_skipped = 0;
    Aggregation mode = Aggregation::macro;
};

// |D \ R| and |D ∩ R| over |R|; an empty rectifier set marks the record
// skipped rather than failing (the ratios are undefined there).
MetricsRecord score_image(const ExplanationObjects& detected, const RectifierSet& rect);

double inconsistency(const ExplanationObjects& detected, const RectifierSet& rect);
double completeness(const ExplanationObjects& detected, const RectifierSet& rect);

// Keeps exactly the classes whose effective area (max area_frac per class)
// is >= spec.threshold; detections of dropped classes are removed.
RectifierSet prominence_filter(const RectifierSet& rect, const ProminenceSpec& spec);

// Joins the two streams by image_id (rejecting unmatched ids on either
// side), scores each pair, and aggregates. macro averages per-image values
// over scored images; micro divides summed numerators by summed
// denominators. Records are ordered by image_id.
AggregateReport evaluate_corpus(std::span<const ExplanationObjects> detected,
                                std::span<const RectifierSet> rects,
                                Aggregation mode = Aggregation::macro,
                                std::optional<ProminenceSpec> prominence = std::nullopt);

}  // namespace rectify
