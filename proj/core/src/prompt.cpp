#include "rectify/prompt.hpp"

#include <set>
#include <stdexcept>

#include "rectify/errors.hpp"

namespace rectify {

std::optional<std::vector<std::string>> TranscriptAgent::ask(const std::string& image_id,
                                                             const std::string& prompt) {
    auto it = entries_.find({image_id, prompt});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::string make_reprompt(const std::vector<std::string>& inconsistent,
                          const std::string& base_question) {
    if (inconsistent.empty()) {
        throw std::invalid_argument("make_reprompt: inconsistent set must be non-empty");
    }
    std::string out;
    for (std::size_t i = 0; i < inconsistent.size(); ++i) {
        if (i > 0) out += ", ";
        out += inconsistent[i];
    }
    out += " does not exist in the image. ";
    out += base_question;
    return out;
}

RectificationSession run_session(PromptAgent& agent, const std::string& image_id,
                                 const RectifierSet& rect,
                                 const TokenClassMapper& mapper, int max_rounds) {
    if (max_rounds < 1) throw ValidationError("run_session: max_rounds must be >= 1");

    const std::set<std::string> allowed = rect.class_set();

    RectificationSession session;
    session.image_id = image_id;
    session.outcome = SessionOutcome::max_rounds_reached;

    std::set<std::string> unmapped_seen;
    std::string prompt = kBaseQuestion;

    for (int round = 0; round < max_rounds; ++round) {
        const auto response = agent.ask(image_id, prompt);
        if (!response) {
            session.outcome = SessionOutcome::agent_failure;
            return session;
        }

        PromptRound record;
        record.prompt = prompt;
        record.objects = *response;

        // Metrics run on catalog classes only: names the mapper cannot place
        // are logged and excluded from both the class set and the re-prompt.
        ExplanationObjects mapped;
        mapped.image_id = image_id;
        std::set<std::string> flagged_classes;
        for (const std::string& name : *response) {
            const auto mapping = mapper.map_token(name);
            if (!mapping) {
                mapped.unmapped_tokens.push_back(name);
                if (unmapped_seen.insert(name).second) {
                    session.unmapped_names.push_back(name);
                }
                continue;
            }
            mapped.classes.insert(mapping->first);
            if (!allowed.count(mapping->first) && flagged_classes.insert(mapping->first).second) {
                record.inconsistent.push_back(name);  // first surface name per class
            }
        }

        const bool converged = record.inconsistent.empty();
        if (!converged && round + 1 < max_rounds) {
            prompt = make_reprompt(record.inconsistent, kBaseQuestion);
        }
        session.rounds.push_back(std::move(record));
        session.final_objects = std::move(mapped);

        if (converged) {
            session.outcome = SessionOutcome::converged;
            break;
        }
    }
    return session;
}

}  // namespace rectify
