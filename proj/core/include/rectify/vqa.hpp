#pragma once

#include <string>
#include <vector>

#include "rectify/caption.hpp"
#include "rectify/mapper.hpp"
#include "rectify/types.hpp"

namespace rectify {

// Ranked answer list from a VQA head: probabilities non-increasing,
// answers distinct. The question travels as opaque metadata.
struct RankedAnswers {
    std::string image_id;
    std::string question;
    std::vector<TokenProb> answers;

    friend bool operator==(const RankedAnswers&, const RankedAnswers&) = default;
};

struct RectifiedAnswer {
    std::string answer;
    double p = 0.0;
    std::string class_name;  // catalog class the answer mapped to
};

// Why an answer was passed over during the scan.
enum class SkipReason { not_in_rectifier, duplicate_class, unmapped };

struct AnswerSkip {
    std::string answer;
    double p = 0.0;
    SkipReason reason = SkipReason::not_in_rectifier;
};

struct RectifiedAnswers {
    std::string image_id;
    std::string question;
    std::vector<RectifiedAnswer> answers;
    std::vector<AnswerSkip> skipped;
    // Number of slots left unfilled when fewer than k agreed answers
    // existed; 0 means the full top-k was emitted. Never padded.
    int shortfall = 0;
};

// Scans the ranking in order and emits answers whose mapped class is in
// rect's class set and not already emitted, until k answers are out or the
// list is exhausted.
RectifiedAnswers rectify_answers(const RankedAnswers& ranked, int k,
                                 const RectifierSet& rect,
                                 const TokenClassMapper& mapper);

ExplanationObjects vqa_objects(const RectifiedAnswers& rectified,
                               const TokenClassMapper& mapper);

}  // namespace rectify
