#include "rectify/metrics.hpp"

#include <algorithm>
#include <iterator>
#include <map>

#include "rectify/errors.hpp"

namespace rectify {

MetricsRecord score_image(const ExplanationObjects& detected, const RectifierSet& rect) {
    MetricsRecord record;
    record.image_id = rect.image_id;

    const std::set<std::string> rect_classes = rect.class_set();
    record.rectifier_count = int(rect_classes.size());
    record.detected_count = int(detected.classes.size());

    if (rect_classes.empty()) {
        record.skipped = true;
        return record;
    }

    std::set<std::string> hallucinated;
    std::set_difference(detected.classes.begin(), detected.classes.end(),
                        rect_classes.begin(), rect_classes.end(),
                        std::inserter(hallucinated, hallucinated.begin()));
    std::set<std::string> matched;
    std::set_intersection(detected.classes.begin(), detected.classes.end(),
                          rect_classes.begin(), rect_classes.end(),
                          std::inserter(matched, matched.begin()));

    record.hallucinated_count = int(hallucinated.size());
    record.matched_count = int(matched.size());
    return record;
}

double inconsistency(const ExplanationObjects& detected, const RectifierSet& rect) {
    return score_image(detected, rect).inconsistency();
}

double completeness(const ExplanationObjects& detected, const RectifierSet& rect) {
    return score_image(detected, rect).completeness();
}

RectifierSet prominence_filter(const RectifierSet& rect, const ProminenceSpec& spec) {
    const std::map<std::string, double> areas = rect.effective_areas();
    RectifierSet filtered;
    filtered.image_id = rect.image_id;
    for (const Detection& d : rect.detections) {
        if (areas.at(d.class_name) >= spec.threshold) {
            filtered.detections.push_back(d);
        }
    }
    return filtered;
}

AggregateReport evaluate_corpus(std::span<const ExplanationObjects> detected,
                                std::span<const RectifierSet> rects,
                                Aggregation mode,
                                std::optional<ProminenceSpec> prominence) {
    std::map<std::string, const ExplanationObjects*> detected_by_id;
    for (const ExplanationObjects& d : detected) {
        auto [it, inserted] = detected_by_id.emplace(d.image_id, &d);
        if (!inserted) {
            throw ValidationError("evaluate: duplicate image_id '" + d.image_id +
                                  "' in detected-objects stream");
        }
    }
    std::map<std::string, const RectifierSet*> rects_by_id;
    for (const RectifierSet& r : rects) {
        auto [it, inserted] = rects_by_id.emplace(r.image_id, &r);
        if (!inserted) {
            throw ValidationError("evaluate: duplicate image_id '" + r.image_id +
                                  "' in rectifier stream");
        }
    }

    std::vector<std::string> unmatched;
    for (const auto& [id, ptr] : detected_by_id) {
        if (!rects_by_id.count(id)) unmatched.push_back(id + " (no rectifier set)");
    }
    for (const auto& [id, ptr] : rects_by_id) {
        if (!detected_by_id.count(id)) unmatched.push_back(id + " (no detected objects)");
    }
    if (!unmatched.empty()) {
        std::string msg = "evaluate: unmatched image ids:";
        for (const std::string& u : unmatched) msg += " " + u + ";";
        throw ValidationError(msg);
    }

    AggregateReport report;
    report.mode = mode;

    long long sum_hallucinated = 0, sum_matched = 0, sum_rect = 0;
    double macro_inconsistency = 0.0, macro_completeness = 0.0;
    for (const auto& [id, det_ptr] : detected_by_id) {
        const RectifierSet* rect = rects_by_id.at(id);
        RectifierSet filtered;
        if (prominence) {
            filtered = prominence_filter(*rect, *prominence);
            rect = &filtered;
        }
        MetricsRecord record = score_image(*det_ptr, *rect);
        if (record.skipped) {
            ++report.n_skipped;
        } else {
            ++report.n_scored;
            sum_hallucinated += record.hallucinated_count;
            sum_matched += record.matched_count;
            sum_rect += record.rectifier_count;
            macro_inconsistency += record.inconsistency();
            macro_completeness += record.completeness();
        }
        report.per_image.push_back(std::move(record));
    }

    if (report.n_scored > 0) {
        if (mode == Aggregation::macro) {
            report.mean_inconsistency = macro_inconsistency / report.n_scored;
            report.mean_completeness = macro_completeness / report.n_scored;
        } else {
            report.mean_inconsistency = double(sum_hallucinated) / double(sum_rect);
            report.mean_completeness = double(sum_matched) / double(sum_rect);
        }
    }
    return report;
}

}  // namespace rectify
