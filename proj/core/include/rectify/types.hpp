#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace rectify {

// One detector hit: catalog class, confidence, and the fraction of the
// image area its instance covers. Scores and areas live in [0,1].
struct Detection {
    std::string class_name;
    double score = 0.0;
    double area_frac = 0.0;
};

// Per-image detector output; the reference set every explanation is
// reconciled against.
struct RectifierSet {
    std::string image_id;
    std::vector<Detection> detections;

    // Distinct class names, sorted for deterministic iteration.
    std::set<std::string> class_set() const;

    // Per-class effective area: the maximum area_frac among that class's
    // detections (the most prominent instance keeps the class alive).
    std::map<std::string, double> effective_areas() const;
};

// Object classes asserted by an image-explaining model's output after
// token-to-class mapping. classes is always a subset of the catalog;
// unmapped_tokens records object-like tokens that mapped to nothing.
struct ExplanationObjects {
    std::string image_id;
    std::set<std::string> classes;
    std::vector<std::string> unmapped_tokens;
};

// Per-image metric outcome. Counts are kept as exact integers so the
// identity  inconsistency + completeness == detected/rectifier  holds
// without rounding; the double views are for rendering.
struct MetricsRecord {
    std::string image_id;
    int hallucinated_count = 0;  // |D \ R|
    int matched_count = 0;       // |D ∩ R|
    int rectifier_count = 0;     // |R|
    int detected_count = 0;      // |D|
    bool skipped = false;        // true when |R| == 0 (metrics undefined)

    double inconsistency() const {
        return skipped ? std::nan("") : double(hallucinated_count) / rectifier_count;
    }
    double completeness() const {
        return skipped ? std::nan("") : double(matched_count) / rectifier_count;
    }
};

}  // namespace rectify
