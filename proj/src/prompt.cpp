#include "psygauge/prompt.hpp"

#include "psygauge/error.hpp"

namespace psygauge {

namespace {

std::string splice(const std::string& templ, std::string_view placeholder, const std::string& value,
                   const std::string& question_id) {
    auto pos = templ.find(placeholder);
    if (pos == std::string::npos || templ.find(placeholder, pos + placeholder.size()) != std::string::npos)
        throw PlaceholderError("question '" + question_id + "': template \"" + templ + "\" must contain exactly one " +
                               std::string(placeholder));
    std::string out = templ;
    out.replace(pos, placeholder.size(), value);
    return out;
}

} // namespace

std::string NliQuery::provenance() const {
    return question_id + "/" + cterm + "/" + level_term;
}

std::vector<NliQuery> expand(const Question& q, const IntensifierScale& scale) {
    // Validate both templates up front so an empty term list still fails loudly.
    splice(q.premise_template, kCTermPlaceholder, "", q.id);
    splice(q.hypothesis_template, kIntensifierPlaceholder, "", q.id);
    if (q.premise_template.find(kIntensifierPlaceholder) != std::string::npos ||
        q.hypothesis_template.find(kCTermPlaceholder) != std::string::npos)
        throw PlaceholderError("question '" + q.id + "': placeholder in the wrong template");

    std::vector<NliQuery> out;
    out.reserve((q.source_terms.size() + q.inverse_terms.size()) * scale.term_count());
    auto emit = [&](const std::vector<std::string>& terms, TermClass cls) {
        for (const auto& term : terms) {
            std::string premise = splice(q.premise_template, kCTermPlaceholder, term, q.id);
            for (std::size_t j = 0; j < scale.levels.size(); ++j) {
                for (const auto& level_term : scale.levels[j].terms) {
                    out.push_back({premise, splice(q.hypothesis_template, kIntensifierPlaceholder, level_term, q.id),
                                   q.id, term, cls, j, level_term});
                }
            }
        }
    };
    emit(q.source_terms, TermClass::source);
    emit(q.inverse_terms, TermClass::inverse);
    return out;
}

std::vector<NliQuery> expand(const Questionnaire& questionnaire, const SpecBundle& bundle) {
    std::vector<NliQuery> out;
    for (const auto& q : questionnaire.questions) {
        auto part = expand(q, bundle.scale_for(q));
        out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return out;
}

namespace {

void accumulate(PromptCount& c, const Question& q, const SpecBundle& bundle) {
    const auto terms = bundle.scale_for(q).term_count();
    c.source_count += q.source_terms.size() * terms;
    c.inverse_count += q.inverse_terms.size() * terms;
}

} // namespace

PromptCount count_prompts(const Questionnaire& questionnaire, const SpecBundle& bundle) {
    PromptCount c{questionnaire.id};
    for (const auto& q : questionnaire.questions) accumulate(c, q, bundle);
    return c;
}

std::vector<PromptCount> count_prompts(const SpecBundle& bundle) {
    std::vector<PromptCount> out;
    for (const auto& qn : bundle.questionnaires) out.push_back(count_prompts(qn, bundle));
    return out;
}

std::vector<PromptCount> count_subscale_prompts(const Questionnaire& questionnaire, const SpecBundle& bundle) {
    std::vector<PromptCount> out;
    for (const auto& sub : questionnaire.subscales) {
        PromptCount c{questionnaire.id + "/" + sub.name};
        for (const auto& id : sub.question_ids)
            if (const auto* q = questionnaire.find_question(id)) accumulate(c, *q, bundle);
        out.push_back(c);
    }
    return out;
}

nlohmann::ordered_json to_json(const NliQuery& query) {
    return {{"premise", query.premise},
            {"hypothesis", query.hypothesis},
            {"question_id", query.question_id},
            {"cterm", query.cterm},
            {"cterm_class", std::string(to_string(query.cterm_class))},
            {"level_index", query.level_index},
            {"level_term", query.level_term}};
}

} // namespace psygauge
