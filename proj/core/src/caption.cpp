#include "rectify/caption.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rectify/errors.hpp"
#include "rectify/text.hpp"

namespace rectify {

std::vector<std::string> CaptionBranch::tokens() const {
    std::vector<std::string> out;
    out.reserve(steps.size());
    for (const BeamStep& s : steps) out.push_back(s.chosen);
    return out;
}

std::vector<TokenProb> TableProvider::top_k(const std::string& image_id,
                                            std::span<const std::string> prefix,
                                            int k) const {
    auto image_it = table_.find(image_id);
    if (image_it == table_.end()) return {};
    const std::string key = join(std::vector<std::string>(prefix.begin(), prefix.end()), " ");
    auto prefix_it = image_it->second.find(key);
    if (prefix_it == image_it->second.end()) return {};
    std::vector<TokenProb> out = prefix_it->second;
    if (int(out.size()) > k) out.resize(std::size_t(k));
    return out;
}

namespace {

// Ordering of retained leaves: higher cumulative log-probability first,
// lexicographically smaller token sequence on ties.
bool leaf_before(const CaptionLeaf& a, const CaptionLeaf& b) {
    if (a.cum_log_prob != b.cum_log_prob) return a.cum_log_prob > b.cum_log_prob;
    return a.branch.tokens() < b.branch.tokens();
}

struct TreeBuilder {
    const NextTokenProvider& provider;
    const std::string& image_id;
    const TreeParams& params;
    CaptionTree& tree;
    std::vector<std::string> prefix;   // body tokens from the root
    std::vector<BeamStep> path_steps;  // one per body token

    void offer_leaf(double cum_log_prob, bool terminated) {
        CaptionLeaf leaf;
        leaf.branch.image_id = image_id;
        leaf.branch.steps = path_steps;
        leaf.cum_log_prob = cum_log_prob;
        leaf.terminated = terminated;
        auto pos = std::lower_bound(tree.leaves.begin(), tree.leaves.end(), leaf, leaf_before);
        tree.leaves.insert(pos, std::move(leaf));
        if (int(tree.leaves.size()) > params.beam_cap) tree.leaves.pop_back();
    }

    // A subtree can only lower cum_log_prob, so once the retained set is
    // full anything strictly below its floor is unreachable. Equal values
    // stay expandable: a tying leaf can still win on token order.
    bool prunable(double cum_log_prob) const {
        return int(tree.leaves.size()) == params.beam_cap &&
               cum_log_prob < tree.leaves.back().cum_log_prob;
    }

    void expand(std::size_t node_index) {
        const double node_cum = tree.nodes[node_index].cum_log_prob;
        if (prunable(node_cum)) return;

        std::vector<TokenProb> dist = provider.top_k(image_id, prefix, params.top_k);
        if (dist.empty()) {
            throw ValidationError("caption tree: no distribution for image '" + image_id +
                                  "' prefix '" + join(prefix, " ") + "'");
        }
        for (std::size_t i = 0; i + 1 < dist.size(); ++i) {
            if (dist[i].p < dist[i + 1].p) {
                throw ValidationError("caption tree: probabilities not non-increasing for image '" +
                                      image_id + "' prefix '" + join(prefix, " ") + "'");
            }
        }

        const int fan_out = std::min<int>(params.branching, int(dist.size()));
        for (int i = 0; i < fan_out; ++i) {
            const TokenProb& entry = dist[std::size_t(i)];
            if (!(entry.p > 0.0) || entry.p > 1.0) {
                throw ValidationError("caption tree: probability out of (0,1] for token '" +
                                      entry.token + "' of image '" + image_id + "'");
            }
            const double step_log = std::log(entry.p);
            const double child_cum = node_cum + step_log;

            CaptionTreeNode child;
            child.token = entry.token;
            child.log_prob = step_log;
            child.cum_log_prob = child_cum;
            const std::size_t child_index = tree.nodes.size();
            tree.nodes.push_back(std::move(child));
            tree.nodes[node_index].children.push_back(child_index);

            if (entry.token == kEndToken) {
                offer_leaf(child_cum, /*terminated=*/true);
                continue;
            }

            BeamStep step;
            step.chosen = entry.token;
            step.top_k = dist;
            path_steps.push_back(std::move(step));
            prefix.push_back(entry.token);

            if (int(prefix.size()) == params.max_len) {
                offer_leaf(child_cum, /*terminated=*/false);
            } else {
                expand(child_index);
            }

            prefix.pop_back();
            path_steps.pop_back();
        }
    }
};

}  // namespace

CaptionTree build_caption_tree(const NextTokenProvider& provider,
                               const std::string& image_id,
                               const TreeParams& params) {
    if (params.branching < 1) throw ValidationError("caption tree: branching must be >= 1");
    if (params.top_k < params.branching) {
        throw ValidationError("caption tree: top_k must be >= branching");
    }
    if (params.max_len < 1) throw ValidationError("caption tree: max_len must be >= 1");
    if (params.beam_cap < 1) throw ValidationError("caption tree: beam_cap must be >= 1");

    CaptionTree tree;
    tree.image_id = image_id;

    CaptionTreeNode root;
    root.token = kBeginToken;
    tree.nodes.push_back(std::move(root));

    TreeBuilder builder{provider, image_id, params, tree, {}, {}};
    builder.expand(0);
    return tree;
}

RectifiedCaption rectify_branch(const CaptionBranch& branch,
                                const RectifierSet& rect,
                                const TokenClassMapper& mapper) {
    const std::set<std::string> allowed = rect.class_set();

    RectifiedCaption result;
    result.image_id = branch.image_id;
    result.tokens.reserve(branch.steps.size());

    for (std::size_t i = 0; i < branch.steps.size(); ++i) {
        const BeamStep& step = branch.steps[i];
        const auto mapping = mapper.map_token(step.chosen);
        if (!mapping || allowed.count(mapping->first)) {
            result.tokens.push_back(step.chosen);
            continue;
        }

        // The chosen token asserts an object the rectifier never saw. Scan
        // this step's own alternatives in stored (probability) order: first
        // try an in-set substitute, then a token free of any object class.
        const TokenProb* in_set = nullptr;
        std::optional<std::string> in_set_class;
        const TokenProb* class_free = nullptr;
        for (const TokenProb& alt : step.top_k) {
            if (alt.token == step.chosen) continue;
            const auto alt_mapping = mapper.map_token(alt.token);
            if (alt_mapping) {
                if (!in_set && allowed.count(alt_mapping->first)) {
                    in_set = &alt;
                    in_set_class = alt_mapping->first;
                    break;  // best possible substitute; stop scanning
                }
            } else if (!class_free) {
                class_free = &alt;
            }
        }

        const TokenProb* substitute = in_set ? in_set : class_free;
        if (!substitute) {
            result.tokens.push_back(step.chosen);
            result.flagged_positions.push_back(i);
            continue;
        }

        Replacement repl;
        repl.position = i;
        repl.original_token = step.chosen;
        repl.replacement_token = substitute->token;
        repl.original_class = mapping->first;
        repl.replacement_class = in_set ? in_set_class : std::nullopt;
        result.tokens.push_back(substitute->token);
        result.replacements.push_back(std::move(repl));
    }
    return result;
}

std::vector<RectifiedCaption> rectify_tree(const CaptionTree& tree,
                                           const RectifierSet& rect,
                                           const TokenClassMapper& mapper) {
    std::vector<RectifiedCaption> out;
    out.reserve(tree.leaves.size());
    for (const CaptionLeaf& leaf : tree.leaves) {
        out.push_back(rectify_branch(leaf.branch, rect, mapper));
    }
    return out;
}

}  // namespace rectify
