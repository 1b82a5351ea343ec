#pragma once

#include "psygauge/questionnaire.hpp"

#include <json.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace psygauge {

// One premise/hypothesis pair plus the (cterm, level, level-term) it came from.
struct NliQuery {
    std::string premise;
    std::string hypothesis;
    std::string question_id;
    std::string cterm;
    TermClass cterm_class = TermClass::source;
    std::size_t level_index = 0;
    std::string level_term;

    // "question_id/cterm/level_term"; unique within a spec.
    std::string provenance() const;

    friend bool operator==(const NliQuery&, const NliQuery&) = default;
};

// Cross product S+ ∪ S- × level terms. Order: source terms in spec order, then
// inverse terms; levels ascending; level terms in spec order.
// Throws PlaceholderError when a template does not hold exactly one placeholder.
std::vector<NliQuery> expand(const Question& q, const IntensifierScale& scale);

// Concatenated expansion of every question in `questionnaire`.
std::vector<NliQuery> expand(const Questionnaire& questionnaire, const SpecBundle& bundle);

struct PromptCount {
    std::string id;  // questionnaire id, or "<questionnaire>/<subscale>"
    std::size_t source_count = 0;
    std::size_t inverse_count = 0;

    std::size_t total() const noexcept { return source_count + inverse_count; }
};

PromptCount count_prompts(const Questionnaire& questionnaire, const SpecBundle& bundle);

// One entry per questionnaire, in spec order.
std::vector<PromptCount> count_prompts(const SpecBundle& bundle);

// One entry per declared subscale of `questionnaire`.
std::vector<PromptCount> count_subscale_prompts(const Questionnaire& questionnaire, const SpecBundle& bundle);

nlohmann::ordered_json to_json(const NliQuery& query);

} // namespace psygauge
