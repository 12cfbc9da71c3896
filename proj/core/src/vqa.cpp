#include "rectify/vqa.hpp"

#include <set>

#include "rectify/errors.hpp"

namespace rectify {

RectifiedAnswers rectify_answers(const RankedAnswers& ranked, int k,
                                 const RectifierSet& rect,
                                 const TokenClassMapper& mapper) {
    if (k < 1) throw ValidationError("rectify-vqa: k must be >= 1");

    const std::set<std::string> allowed = rect.class_set();

    RectifiedAnswers result;
    result.image_id = ranked.image_id;
    result.question = ranked.question;

    std::set<std::string> emitted_classes;
    for (const TokenProb& candidate : ranked.answers) {
        if (int(result.answers.size()) == k) break;

        const auto mapping = mapper.map_token(candidate.token);
        if (!mapping) {
            result.skipped.push_back({candidate.token, candidate.p, SkipReason::unmapped});
            continue;
        }
        if (!allowed.count(mapping->first)) {
            result.skipped.push_back({candidate.token, candidate.p, SkipReason::not_in_rectifier});
            continue;
        }
        if (!emitted_classes.insert(mapping->first).second) {
            result.skipped.push_back({candidate.token, candidate.p, SkipReason::duplicate_class});
            continue;
        }
        result.answers.push_back({candidate.token, candidate.p, mapping->first});
    }

    result.shortfall = k - int(result.answers.size());
    return result;
}

ExplanationObjects vqa_objects(const RectifiedAnswers& rectified,
                               const TokenClassMapper& mapper) {
    ExplanationObjects objects;
    objects.image_id = rectified.image_id;
    for (const RectifiedAnswer& a : rectified.answers) {
        const auto mapping = mapper.map_token(a.answer);
        // Emitted answers were mapped once already; the stored class covers
        // hand-built records whose answer text the mapper cannot place.
        objects.classes.insert(mapping ? mapping->first : a.class_name);
    }
    return objects;
}

}  // namespace rectify
