#include "rectify/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rectify/errors.hpp"
#include "rectify/prompt.hpp"
#include "rectify/rng.hpp"

namespace rectify {

namespace {

std::string scene_id(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "img-%06d", index);
    return buf;
}

// Positional probability for ranked/caption slots: strictly decreasing,
// always in (0,1], so jittered orders still satisfy ingestion contracts.
double slot_prob(std::size_t position) {
    return 0.9 * std::pow(0.85, double(position));
}

}  // namespace

std::vector<RectifierSet> generate_scenes(const SceneSpec& spec,
                                          const ClassCatalog& catalog) {
    if (catalog.size() == 0) throw ValidationError("generate_scenes: empty catalog");
    if (spec.n_images < 0) throw ValidationError("generate_scenes: n_images must be >= 0");
    if (spec.min_classes < 1 || spec.max_classes < spec.min_classes) {
        throw ValidationError("generate_scenes: need 1 <= min_classes <= max_classes");
    }
    if (std::size_t(spec.max_classes) > catalog.size()) {
        throw ValidationError("generate_scenes: max_classes exceeds catalog size");
    }
    if (!(spec.area_min >= 0.0) || spec.area_max < spec.area_min) {
        throw ValidationError("generate_scenes: need 0 <= area_min <= area_max");
    }

    std::vector<RectifierSet> scenes;
    scenes.reserve(std::size_t(spec.n_images));
    for (int i = 0; i < spec.n_images; ++i) {
        SplitMix64 rng(mix_seed(spec.seed, std::uint64_t(i)));
        const int span = spec.max_classes - spec.min_classes + 1;
        const int n_classes = spec.min_classes + int(rng.next_below(std::uint64_t(span)));

        // Partial Fisher-Yates: first n_classes entries are a uniform draw
        // without replacement.
        std::vector<std::size_t> order(catalog.size());
        for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
        for (int j = 0; j < n_classes; ++j) {
            const std::size_t pick =
                std::size_t(j) + std::size_t(rng.next_below(order.size() - std::size_t(j)));
            std::swap(order[std::size_t(j)], order[pick]);
        }

        RectifierSet scene;
        scene.image_id = scene_id(i);
        for (int j = 0; j < n_classes; ++j) {
            Detection d;
            d.class_name = catalog.classes()[order[std::size_t(j)]];
            d.area_frac = std::min(1.0, spec.area_min +
                                            rng.next_double() * (spec.area_max - spec.area_min));
            d.score = 0.5 + 0.5 * rng.next_double();
            scene.detections.push_back(std::move(d));
        }
        scenes.push_back(std::move(scene));
    }
    return scenes;
}

ExplainerOutput noisy_explainer(const RectifierSet& scene, const NoiseSpec& noise,
                                ExplainerShape shape, const ClassCatalog& catalog,
                                std::uint64_t seed) {
    auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!in_unit(noise.hallucination_rate) || !in_unit(noise.omission_rate) ||
        !in_unit(noise.rank_jitter)) {
        throw ValidationError("noisy_explainer: noise rates must lie in [0,1]");
    }

    SplitMix64 rng(seed);
    const std::set<std::string> scene_classes = scene.class_set();

    // Slot order: surviving scene classes (sorted), then injected off-scene
    // classes, then a jitter pass of adjacent swaps.
    std::vector<std::string> slots;
    for (const std::string& cls : scene_classes) {
        if (!rng.next_bernoulli(noise.omission_rate)) slots.push_back(cls);
    }

    std::vector<std::string> off_scene;
    for (const std::string& cls : catalog.classes()) {
        if (!scene_classes.count(cls)) off_scene.push_back(cls);
    }
    std::sort(off_scene.begin(), off_scene.end());
    for (std::size_t slot = 0; slot < scene_classes.size(); ++slot) {
        if (off_scene.empty()) break;
        if (rng.next_bernoulli(noise.hallucination_rate)) {
            const std::size_t pick = std::size_t(rng.next_below(off_scene.size()));
            slots.push_back(off_scene[pick]);
            off_scene.erase(off_scene.begin() + std::ptrdiff_t(pick));
        }
    }

    for (std::size_t i = 0; i + 1 < slots.size(); ++i) {
        if (rng.next_bernoulli(noise.rank_jitter)) std::swap(slots[i], slots[i + 1]);
    }

    switch (shape) {
        case ExplainerShape::object_list: {
            ObjectListRecord record;
            record.image_id = scene.image_id;
            record.objects = slots;
            return record;
        }
        case ExplainerShape::ranked_answers: {
            RankedAnswers record;
            record.image_id = scene.image_id;
            record.question = kBaseQuestion;
            for (std::size_t i = 0; i < slots.size(); ++i) {
                record.answers.push_back({slots[i], slot_prob(i)});
            }
            return record;
        }
        case ExplainerShape::caption_beam: {
            // Each step asserts one slot token; alternatives offer the
            // scene's own classes plus a class-free filler, so rectification
            // always has a usable substitute to reach for.
            CaptionBranch branch;
            branch.image_id = scene.image_id;
            for (std::size_t i = 0; i < slots.size(); ++i) {
                BeamStep step;
                step.chosen = slots[i];
                step.top_k.push_back({slots[i], slot_prob(0)});
                std::size_t alt = 1;
                for (const std::string& cls : scene_classes) {
                    if (cls == slots[i]) continue;
                    step.top_k.push_back({cls, slot_prob(alt++)});
                }
                step.top_k.push_back({"the", slot_prob(alt)});
                branch.steps.push_back(std::move(step));
            }
            return branch;
        }
    }
    throw ValidationError("noisy_explainer: unknown shape");
}

std::pair<double, double> oracle_metrics(const std::vector<std::string>& detected,
                                         const std::vector<std::string>& rect) {
    // Brute-force membership counting over plain vectors; deliberately free
    // of the set machinery the metrics engine is built on.
    auto seen_before = [](const std::vector<std::string>& v, std::size_t i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (v[j] == v[i]) return true;
        }
        return false;
    };
    auto contains = [](const std::vector<std::string>& v, const std::string& x) {
        for (const std::string& item : v) {
            if (item == x) return true;
        }
        return false;
    };

    int rect_distinct = 0;
    for (std::size_t i = 0; i < rect.size(); ++i) {
        if (!seen_before(rect, i)) ++rect_distinct;
    }
    if (rect_distinct == 0) {
        throw ValidationError("oracle_metrics: rectifier set must be non-empty");
    }

    int hallucinated = 0;
    int matched = 0;
    for (std::size_t i = 0; i < detected.size(); ++i) {
        if (seen_before(detected, i)) continue;
        if (contains(rect, detected[i])) {
            ++matched;
        } else {
            ++hallucinated;
        }
    }
    return {double(hallucinated) / rect_distinct, double(matched) / rect_distinct};
}

}  // namespace rectify
