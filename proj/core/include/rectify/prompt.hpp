#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rectify/mapper.hpp"
#include "rectify/types.hpp"

namespace rectify {

// The fixed object-listing question, byte-exact.
inline constexpr const char* kBaseQuestion = "What are the objects in the image?";

// Conversational agent contract: given (image, prompt), list object names.
// nullopt signals the agent could not answer (e.g. a transcript replayer
// with no recording for that prompt).
class PromptAgent {
public:
    virtual ~PromptAgent() = default;
    virtual std::optional<std::vector<std::string>> ask(const std::string& image_id,
                                                        const std::string& prompt) = 0;
};

// Replays recorded (image_id, prompt) -> objects exchanges. Lookup requires
// an exact string match on the prompt.
class TranscriptAgent final : public PromptAgent {
public:
    using Key = std::pair<std::string, std::string>;

    explicit TranscriptAgent(std::map<Key, std::vector<std::string>> entries)
        : entries_(std::move(entries)) {}

    std::optional<std::vector<std::string>> ask(const std::string& image_id,
                                                const std::string& prompt) override;

private:
    std::map<Key, std::vector<std::string>> entries_;
};

// Function-backed agent for tests and scripted stubs.
class ScriptedAgent final : public PromptAgent {
public:
    using Fn = std::function<std::optional<std::vector<std::string>>(
        const std::string&, const std::string&)>;

    explicit ScriptedAgent(Fn fn) : fn_(std::move(fn)) {}

    std::optional<std::vector<std::string>> ask(const std::string& image_id,
                                                const std::string& prompt) override {
        return fn_(image_id, prompt);
    }

private:
    Fn fn_;
};

struct PromptRound {
    std::string prompt;
    std::vector<std::string> objects;       // agent's surface strings, verbatim
    std::vector<std::string> inconsistent;  // surface names of classes outside R,
                                            // first-seen order, one per class
};

enum class SessionOutcome { converged, max_rounds_reached, agent_failure };

struct RectificationSession {
    std::string image_id;
    std::vector<PromptRound> rounds;  // completed rounds only
    SessionOutcome outcome = SessionOutcome::converged;
    ExplanationObjects final_objects;        // last round's mapped classes
    std::vector<std::string> unmapped_names; // agent names mapping to no class
};

// "<o1>, <o2>, ... does not exist in the image. <base question>", names in
// first-seen order, verbatim. Calling with an empty set is a contract
// violation (throws std::invalid_argument).
std::string make_reprompt(const std::vector<std::string>& inconsistent,
                          const std::string& base_question);

// Round 1 asks kBaseQuestion; each later round re-prompts with the previous
// round's inconsistent names. Stops on convergence (empty inconsistent
// set), max_rounds, or agent failure.
RectificationSession run_session(PromptAgent& agent, const std::string& image_id,
                                 const RectifierSet& rect,
                                 const TokenClassMapper& mapper, int max_rounds = 3);

}  // namespace rectify
