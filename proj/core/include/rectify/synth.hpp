#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rectify/caption.hpp"
#include "rectify/catalog.hpp"
#include "rectify/types.hpp"
#include "rectify/vqa.hpp"

namespace rectify {

// Synthetic corpus shape: per-image class counts and area-fraction range.
// Generation is a pure function of (spec, catalog): identical bytes across
// runs and platforms.
struct SceneSpec {
    std::uint64_t seed = 0;
    int n_images = 0;
    int min_classes = 2;
    int max_classes = 4;
    double area_min = 0.01;
    double area_max = 0.60;
};

// Controlled failure modes of a simulated explainer: off-scene classes
// injected per slot, scene classes dropped, and rank-order jitter.
struct NoiseSpec {
    double hallucination_rate = 0.0;
    double omission_rate = 0.0;
    double rank_jitter = 0.0;
};

enum class ExplainerShape { object_list, ranked_answers, caption_beam };

struct ObjectListRecord {
    std::string image_id;
    std::vector<std::string> objects;

    friend bool operator==(const ObjectListRecord&, const ObjectListRecord&) = default;
};

using ExplainerOutput = std::variant<ObjectListRecord, RankedAnswers, CaptionBranch>;

// n_images rectifier sets with class counts in [min_classes, max_classes],
// classes drawn uniformly without replacement, areas uniform in
// [area_min, area_max] clipped to <= 1. Per-image sums may exceed 1.
std::vector<RectifierSet> generate_scenes(const SceneSpec& spec,
                                          const ClassCatalog& catalog);

// Simulated explainer output for one scene in the requested shape. With
// zero noise its extracted classes equal the scene's class set; injected
// slots draw uniformly from catalog minus the scene.
ExplainerOutput noisy_explainer(const RectifierSet& scene, const NoiseSpec& noise,
                                ExplainerShape shape, const ClassCatalog& catalog,
                                std::uint64_t seed);

// Independent re-implementation of the two metrics by element-by-element
// membership counting over plain vectors. Shares no set utilities with the
// metrics engine; used to cross-check it. Throws on an empty rectifier set
// (the oracle does not define the skip policy).
std::pair<double, double> oracle_metrics(const std::vector<std::string>& detected,
                                         const std::vector<std::string>& rect);

}  // namespace rectify
