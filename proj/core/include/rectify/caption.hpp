#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rectify/mapper.hpp"
#include "rectify/types.hpp"

namespace rectify {

inline constexpr const char* kBeginToken = "<s>";
inline constexpr const char* kEndToken = "</s>";

struct TokenProb {
    std::string token;
    double p = 0.0;

    friend bool operator==(const TokenProb&, const TokenProb&) = default;
};

// One decode step: the token taken plus the full top-k distribution it was
// taken from (probabilities non-increasing).
struct BeamStep {
    std::string chosen;
    std::vector<TokenProb> top_k;

    friend bool operator==(const BeamStep&, const BeamStep&) = default;
};

// A single recorded caption branch, as ingested from beam JSONL or peeled
// off a caption tree leaf.
struct CaptionBranch {
    std::string image_id;
    std::vector<BeamStep> steps;

    std::vector<std::string> tokens() const;

    friend bool operator==(const CaptionBranch&, const CaptionBranch&) = default;
};

// Next-token source for tree building. Implementations must be
// deterministic for a fixed (image, prefix) and return probabilities in
// (0,1], non-increasing. The prefix excludes the begin token.
class NextTokenProvider {
public:
    virtual ~NextTokenProvider() = default;
    virtual std::vector<TokenProb> top_k(const std::string& image_id,
                                         std::span<const std::string> prefix,
                                         int k) const = 0;
};

// Table-driven provider: (image_id, space-joined prefix) -> distribution.
// Missing prefixes return an empty distribution, which tree building
// reports as an error naming the prefix.
class TableProvider final : public NextTokenProvider {
public:
    using Table = std::map<std::string, std::map<std::string, std::vector<TokenProb>>>;

    explicit TableProvider(Table table) : table_(std::move(table)) {}

    std::vector<TokenProb> top_k(const std::string& image_id,
                                 std::span<const std::string> prefix,
                                 int k) const override;

private:
    Table table_;
};

struct CaptionTreeNode {
    std::string token;
    double log_prob = 0.0;      // log of this step's probability
    double cum_log_prob = 0.0;  // sum along the path from the root
    std::vector<std::size_t> children;
};

// A retained leaf: the branch body (end token stripped) plus its cumulative
// log-probability over all steps including the terminator.
struct CaptionLeaf {
    CaptionBranch branch;
    double cum_log_prob = 0.0;
    bool terminated = false;  // ended with the end token (vs max length)
};

// Branching decode structure: every node expands at most `b` children taken
// from the provider's top-k; leaves are kept by highest cumulative
// log-probability up to beam_cap, ties broken by lexicographic tokens.
struct CaptionTree {
    std::string image_id;
    std::vector<CaptionTreeNode> nodes;  // nodes[0] is the begin-token root
    std::vector<CaptionLeaf> leaves;     // sorted: cum_log_prob desc, tokens asc
};

struct TreeParams {
    int branching = 3;   // b >= 1
    int top_k = 10;      // k >= b
    int max_len = 20;    // body tokens per branch
    int beam_cap = 16;   // retained leaves
};

CaptionTree build_caption_tree(const NextTokenProvider& provider,
                               const std::string& image_id,
                               const TreeParams& params);

// One substituted step. replacement_class is absent when the fallback chose
// a token that maps to no object class at all.
struct Replacement {
    std::size_t position = 0;
    std::string original_token;
    std::string replacement_token;
    std::string original_class;
    std::optional<std::string> replacement_class;
};

struct RectifiedCaption {
    std::string image_id;
    std::vector<std::string> tokens;
    std::vector<Replacement> replacements;
    // Steps whose token maps outside the rectifier set but no usable
    // substitute existed; the original token was kept.
    std::vector<std::size_t> flagged_positions;
};

// For each step whose chosen token maps to a class outside rect's class
// set: substitute the highest-probability alternative at that step that
// maps into the set; failing that, the highest-probability alternative
// mapping to no class at all; failing that, keep the token and flag the
// position. Alternatives are the step's own top-k (the provider is never
// re-queried).
RectifiedCaption rectify_branch(const CaptionBranch& branch,
                                const RectifierSet& rect,
                                const TokenClassMapper& mapper);

// One rectified caption per retained leaf, in leaf order.
std::vector<RectifiedCaption> rectify_tree(const CaptionTree& tree,
                                           const RectifierSet& rect,
                                           const TokenClassMapper& mapper);

}  // namespace rectify
