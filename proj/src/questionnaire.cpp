#include "psygauge/questionnaire.hpp"

#include "psygauge/backend.hpp"
#include "psygauge/error.hpp"
#include "psygauge/prompt.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace psygauge {

using ojson = nlohmann::ordered_json;

std::size_t IntensifierScale::term_count() const noexcept {
    std::size_t n = 0;
    for (const auto& level : levels) n += level.terms.size();
    return n;
}

std::vector<double> IntensifierScale::weights() const {
    std::vector<double> w;
    w.reserve(levels.size());
    for (const auto& level : levels) w.push_back(level.weight);
    return w;
}

std::string_view to_string(TermClass c) noexcept {
    return c == TermClass::source ? "source" : "inverse";
}

std::string_view to_string(Severity s) noexcept {
    return s == Severity::error ? "error" : "warning";
}

const Question* Questionnaire::find_question(std::string_view question_id) const {
    auto it = std::find_if(questions.begin(), questions.end(),
                           [&](const Question& q) { return q.id == question_id; });
    return it == questions.end() ? nullptr : &*it;
}

const IntensifierScale* SpecBundle::find_scale(std::string_view id) const {
    auto it = std::find_if(scales.begin(), scales.end(), [&](const auto& s) { return s.id == id; });
    return it == scales.end() ? nullptr : &*it;
}

const Questionnaire* SpecBundle::find_questionnaire(std::string_view id) const {
    auto it = std::find_if(questionnaires.begin(), questionnaires.end(),
                           [&](const auto& q) { return q.id == id; });
    return it == questionnaires.end() ? nullptr : &*it;
}

const IntensifierScale& SpecBundle::scale_for(const Question& q) const {
    if (const auto* s = find_scale(q.scale_ref)) return *s;
    throw DanglingRefError("scale-ref", q.id, "question '" + q.id + "' references unknown scale '" + q.scale_ref + "'");
}

std::vector<double> effective_weights(const Question& q, const IntensifierScale& scale) {
    auto w = scale.weights();
    if (q.reverse_keyed) std::reverse(w.begin(), w.end());
    return w;
}

// --- decoding -------------------------------------------------------------------

namespace {

[[noreturn]] void schema_fail(const std::string& where, const std::string& what) {
    throw SchemaError(where + ": " + what);
}

void expect_keys(const ojson& obj, const std::string& where, std::initializer_list<std::string_view> required,
                 std::initializer_list<std::string_view> optional = {}) {
    if (!obj.is_object()) schema_fail(where, "expected an object");
    for (auto key : required)
        if (!obj.contains(std::string(key))) schema_fail(where, "missing field '" + std::string(key) + "'");
    for (const auto& [key, _] : obj.items()) {
        bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                     std::find(optional.begin(), optional.end(), key) != optional.end();
        if (!known) schema_fail(where, "unknown field '" + key + "'");
    }
}

std::string get_string(const ojson& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_string()) schema_fail(where, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<std::string> get_strings(const ojson& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_array()) schema_fail(where, std::string("field '") + key + "' must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) schema_fail(where, std::string("field '") + key + "' must contain only strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

IntensifierScale decode_scale(const ojson& j, std::size_t index) {
    std::string where = "scales[" + std::to_string(index) + "]";
    expect_keys(j, where, {"id", "levels"});
    IntensifierScale scale;
    scale.id = get_string(j, "id", where);
    where = "scale '" + scale.id + "'";
    if (!j.at("levels").is_array()) schema_fail(where, "field 'levels' must be an array");
    std::size_t li = 0;
    for (const auto& lj : j.at("levels")) {
        std::string lwhere = where + " levels[" + std::to_string(li++) + "]";
        expect_keys(lj, lwhere, {"terms", "weight"});
        Level level;
        level.terms = get_strings(lj, "terms", lwhere);
        if (!lj.at("weight").is_number()) schema_fail(lwhere, "field 'weight' must be a number");
        level.weight = lj.at("weight").get<double>();
        scale.levels.push_back(std::move(level));
    }
    return scale;
}

Question decode_question(const ojson& j, const std::string& where) {
    expect_keys(j, where,
                {"id", "original_text", "premise_template", "hypothesis_template", "source_terms", "scale_ref"},
                {"inverse_terms", "reverse_keyed"});
    Question q;
    q.id = get_string(j, "id", where);
    std::string qwhere = "question '" + q.id + "'";
    q.original_text = get_string(j, "original_text", qwhere);
    q.premise_template = get_string(j, "premise_template", qwhere);
    q.hypothesis_template = get_string(j, "hypothesis_template", qwhere);
    q.source_terms = get_strings(j, "source_terms", qwhere);
    if (j.contains("inverse_terms")) q.inverse_terms = get_strings(j, "inverse_terms", qwhere);
    q.scale_ref = get_string(j, "scale_ref", qwhere);
    if (j.contains("reverse_keyed")) {
        if (!j.at("reverse_keyed").is_boolean()) schema_fail(qwhere, "field 'reverse_keyed' must be a boolean");
        q.reverse_keyed = j.at("reverse_keyed").get<bool>();
    }
    return q;
}

Questionnaire decode_questionnaire(const ojson& j, std::size_t index) {
    std::string where = "questionnaires[" + std::to_string(index) + "]";
    expect_keys(j, where, {"id", "name", "construct", "questions"}, {"subscales"});
    Questionnaire qn;
    qn.id = get_string(j, "id", where);
    where = "questionnaire '" + qn.id + "'";
    qn.name = get_string(j, "name", where);
    qn.construct = get_string(j, "construct", where);
    if (j.contains("subscales")) {
        const auto& sj = j.at("subscales");
        if (!sj.is_object()) schema_fail(where, "field 'subscales' must be an object");
        for (const auto& [name, ids] : sj.items()) {
            Subscale sub{name, {}};
            if (!ids.is_array()) schema_fail(where, "subscale '" + name + "' must be an array of question ids");
            for (const auto& id : ids) {
                if (!id.is_string()) schema_fail(where, "subscale '" + name + "' must contain only strings");
                sub.question_ids.push_back(id.get<std::string>());
            }
            qn.subscales.push_back(std::move(sub));
        }
    }
    if (!j.at("questions").is_array()) schema_fail(where, "field 'questions' must be an array");
    std::size_t qi = 0;
    for (const auto& qj : j.at("questions"))
        qn.questions.push_back(decode_question(qj, where + " questions[" + std::to_string(qi++) + "]"));
    return qn;
}

} // namespace

SpecBundle decode_spec(std::string_view document) {
    ojson root;
    try {
        root = ojson::parse(document);
    } catch (const ojson::parse_error& e) {
        throw SchemaError(std::string("malformed JSON: ") + e.what());
    }
    expect_keys(root, "document", {"schema_version", "scales", "questionnaires"});
    if (!root.at("schema_version").is_number_integer())
        schema_fail("document", "field 'schema_version' must be an integer");
    SpecBundle bundle;
    bundle.schema_version = root.at("schema_version").get<int>();
    if (bundle.schema_version != kSchemaVersion)
        schema_fail("document", "unsupported schema_version " + std::to_string(bundle.schema_version));
    if (!root.at("scales").is_array()) schema_fail("document", "field 'scales' must be an array");
    if (!root.at("questionnaires").is_array()) schema_fail("document", "field 'questionnaires' must be an array");
    std::size_t i = 0;
    for (const auto& sj : root.at("scales")) bundle.scales.push_back(decode_scale(sj, i++));
    i = 0;
    for (const auto& qj : root.at("questionnaires")) bundle.questionnaires.push_back(decode_questionnaire(qj, i++));
    return bundle;
}

SpecBundle parse_spec(std::string_view document) {
    auto bundle = decode_spec(document);
    validate_spec(bundle);
    return bundle;
}

SpecBundle load_spec(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read spec file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str());
}

SpecBundle merge_specs(std::vector<SpecBundle> bundles) {
    SpecBundle merged;
    for (auto& b : bundles) {
        for (auto& s : b.scales) {
            if (const auto* existing = merged.find_scale(s.id)) {
                if (!(*existing == s))
                    throw ValidationError("scale-id-unique", "", "conflicting definitions of scale '" + s.id + "'");
                continue;
            }
            merged.scales.push_back(std::move(s));
        }
        for (auto& q : b.questionnaires) merged.questionnaires.push_back(std::move(q));
    }
    validate_spec(merged);
    return merged;
}

SpecBundle load_specs(const std::vector<std::filesystem::path>& paths) {
    std::vector<SpecBundle> bundles;
    for (const auto& p : paths) bundles.push_back(load_spec(p));
    return merge_specs(std::move(bundles));
}

std::string serialize_spec(const SpecBundle& bundle) {
    ojson root;
    root["schema_version"] = bundle.schema_version;
    root["scales"] = ojson::array();
    for (const auto& s : bundle.scales) {
        ojson sj;
        sj["id"] = s.id;
        sj["levels"] = ojson::array();
        for (const auto& l : s.levels) sj["levels"].push_back({{"terms", l.terms}, {"weight", l.weight}});
        root["scales"].push_back(std::move(sj));
    }
    root["questionnaires"] = ojson::array();
    for (const auto& qn : bundle.questionnaires) {
        ojson qj;
        qj["id"] = qn.id;
        qj["name"] = qn.name;
        qj["construct"] = qn.construct;
        qj["subscales"] = ojson::object();
        for (const auto& sub : qn.subscales) qj["subscales"][sub.name] = sub.question_ids;
        qj["questions"] = ojson::array();
        for (const auto& q : qn.questions) {
            qj["questions"].push_back({{"id", q.id},
                                       {"original_text", q.original_text},
                                       {"premise_template", q.premise_template},
                                       {"hypothesis_template", q.hypothesis_template},
                                       {"source_terms", q.source_terms},
                                       {"inverse_terms", q.inverse_terms},
                                       {"scale_ref", q.scale_ref},
                                       {"reverse_keyed", q.reverse_keyed}});
        }
        root["questionnaires"].push_back(std::move(qj));
    }
    return root.dump(2) + "\n";
}

// --- linting -------------------------------------------------------------------

namespace {

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size())) ++n;
    return n;
}

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string strip_placeholder(std::string text, std::string_view placeholder) {
    if (auto pos = text.find(placeholder); pos != std::string::npos) text.erase(pos, placeholder.size());
    return text;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

// Whole-word, case-insensitive phrase search.
bool contains_phrase(std::string_view haystack, std::string_view phrase) {
    auto h = lower(haystack);
    auto p = lower(phrase);
    if (p.empty()) return false;
    auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '\''; };
    for (auto pos = h.find(p); pos != std::string::npos; pos = h.find(p, pos + 1)) {
        bool left = pos == 0 || !is_word(h[pos - 1]);
        bool right = pos + p.size() == h.size() || !is_word(h[pos + p.size()]);
        if (left && right) return true;
    }
    return false;
}

class Linter {
public:
    explicit Linter(const SpecBundle& b) : bundle_(b) {}

    std::vector<LintFinding> run() {
        check_scales();
        std::set<std::string> questionnaire_ids;
        std::set<std::string> question_ids;
        for (const auto& qn : bundle_.questionnaires) {
            if (!questionnaire_ids.insert(qn.id).second)
                error("questionnaire-id-unique", qn.id, "", "duplicate questionnaire id '" + qn.id + "'");
            if (qn.questions.empty()) error("question-count", qn.id, "", "questionnaire has no questions");
            for (const auto& q : qn.questions) {
                if (!question_ids.insert(q.id).second)
                    error("question-id-unique", qn.id, q.id, "duplicate question id '" + q.id + "'");
                check_question(qn, q);
            }
            check_subscales(qn);
        }
        return std::move(findings_);
    }

private:
    void add(Severity sev, std::string rule, const std::string& qn, const std::string& q, std::string msg) {
        findings_.push_back({sev, std::move(rule), qn, q, std::move(msg)});
    }
    void error(std::string rule, const std::string& qn, const std::string& q, std::string msg) {
        add(Severity::error, std::move(rule), qn, q, std::move(msg));
    }
    void warning(std::string rule, const std::string& qn, const std::string& q, std::string msg) {
        add(Severity::warning, std::move(rule), qn, q, std::move(msg));
    }

    void check_scales() {
        std::set<std::string> ids;
        for (const auto& s : bundle_.scales) {
            const std::string where = "scale '" + s.id + "'";
            if (!ids.insert(s.id).second) error("scale-id-unique", "", "", "duplicate " + where);
            if (s.levels.size() < 2) error("scale-levels", "", "", where + " needs at least 2 levels");
            std::set<std::string> terms;
            for (std::size_t j = 0; j < s.levels.size(); ++j) {
                const auto& level = s.levels[j];
                if (level.terms.empty())
                    error("level-terms", "", "", where + " level " + std::to_string(j) + " has no terms");
                for (const auto& t : level.terms) {
                    if (blank(t)) error("level-terms", "", "", where + " has an empty intensifier term");
                    if (!terms.insert(t).second)
                        error("scale-term-distinct", "", "", where + " repeats intensifier '" + t + "'");
                }
            }
            if (s.levels.size() >= 2) {
                bool inc = true, dec = true;
                for (std::size_t j = 1; j < s.levels.size(); ++j) {
                    inc = inc && s.levels[j].weight > s.levels[j - 1].weight;
                    dec = dec && s.levels[j].weight < s.levels[j - 1].weight;
                }
                if (!inc && !dec) error("weight-monotonicity", "", "", where + " weights are not strictly monotone");
            }
        }
    }

    void check_question(const Questionnaire& qn, const Question& q) {
        if (!bundle_.find_scale(q.scale_ref))
            error("scale-ref", qn.id, q.id, "unknown scale '" + q.scale_ref + "'");

        if (count_occurrences(q.premise_template, kCTermPlaceholder) != 1 ||
            count_occurrences(q.premise_template, kIntensifierPlaceholder) != 0)
            error("premise-placeholder", qn.id, q.id, "premise template must contain exactly one {cterm} and no {intensifier}");
        if (count_occurrences(q.hypothesis_template, kIntensifierPlaceholder) != 1 ||
            count_occurrences(q.hypothesis_template, kCTermPlaceholder) != 0)
            error("hypothesis-placeholder", qn.id, q.id,
                  "hypothesis template must contain exactly one {intensifier} and no {cterm}");
        if (blank(strip_placeholder(q.premise_template, kCTermPlaceholder)) ||
            blank(strip_placeholder(q.hypothesis_template, kIntensifierPlaceholder)))
            error("template-nonempty", qn.id, q.id, "template is a bare placeholder");

        if (q.source_terms.empty()) error("source-nonempty", qn.id, q.id, "no source terms");
        std::set<std::string> src, inv;
        for (const auto& t : q.source_terms) {
            if (blank(t)) error("term-empty", qn.id, q.id, "empty source term");
            if (!src.insert(t).second) error("term-duplicate", qn.id, q.id, "source term '" + t + "' repeated");
        }
        for (const auto& t : q.inverse_terms) {
            if (blank(t)) error("term-empty", qn.id, q.id, "empty inverse term");
            if (!inv.insert(t).second) error("term-duplicate", qn.id, q.id, "inverse term '" + t + "' repeated");
        }
        for (const auto& t : src)
            if (inv.count(t))
                error("term-disjointness", qn.id, q.id, "term '" + t + "' is both a source and an inverse term");

        if (q.source_terms.size() < 2 || q.inverse_terms.size() < 2)
            warning("silhouette-unavailable", qn.id, q.id, "silhouette needs at least 2 source and 2 inverse terms");

        for (const auto* terms : {&q.source_terms, &q.inverse_terms}) {
            for (const auto& t : *terms) {
                if (contains_phrase(q.premise_template, t) || contains_phrase(q.hypothesis_template, t))
                    warning("template-neutrality", qn.id, q.id, "template already contains construct term '" + t + "'");
            }
        }
    }

    void check_subscales(const Questionnaire& qn) {
        for (const auto& sub : qn.subscales) {
            std::set<std::string> seen;
            for (const auto& id : sub.question_ids) {
                if (!qn.find_question(id))
                    error("subscale-refs", qn.id, id, "subscale '" + sub.name + "' lists unknown question '" + id + "'");
                if (!seen.insert(id).second)
                    error("subscale-duplicate", qn.id, id, "subscale '" + sub.name + "' lists '" + id + "' twice");
            }
        }
    }

    const SpecBundle& bundle_;
    std::vector<LintFinding> findings_;
};

} // namespace

std::vector<LintFinding> lint_spec(const SpecBundle& bundle, AcceptabilityScorer* scorer, const LintOptions& options) {
    if (options.acceptability && scorer == nullptr)
        throw BackendUnavailable("acceptability lint requested without an acceptability provider");

    auto findings = Linter(bundle).run();
    bool structural_errors = std::any_of(findings.begin(), findings.end(),
                                         [](const auto& f) { return f.severity == Severity::error; });
    if (!options.acceptability || structural_errors) return findings;

    for (const auto& qn : bundle.questionnaires) {
        for (const auto& q : qn.questions) {
            // Unique sentences only, in expansion order.
            std::vector<std::string> sentences;
            std::set<std::string> seen;
            for (const auto& query : expand(q, bundle.scale_for(q))) {
                for (const auto* s : {&query.premise, &query.hypothesis})
                    if (seen.insert(*s).second) sentences.push_back(*s);
            }
            auto scores = scorer->acceptability(sentences);
            if (scores.size() != sentences.size())
                throw ProtocolError("acceptability provider returned " + std::to_string(scores.size()) +
                                    " scores for " + std::to_string(sentences.size()) + " sentences");
            for (std::size_t i = 0; i < sentences.size(); ++i) {
                if (scores[i] < options.la_threshold) {
                    std::ostringstream msg;
                    msg << "low linguistic acceptability " << scores[i] << ": \"" << sentences[i] << "\"";
                    findings.push_back({Severity::warning, "linguistic-acceptability", qn.id, q.id, msg.str()});
                }
            }
        }
    }
    return findings;
}

void validate_spec(const SpecBundle& bundle) {
    for (const auto& f : Linter(bundle).run()) {
        if (f.severity != Severity::error) continue;
        std::string msg = f.rule + ": " + (f.question_id.empty() ? "" : f.question_id + ": ") + f.message;
        if (f.rule == "scale-ref") throw DanglingRefError(f.rule, f.question_id, msg);
        throw ValidationError(f.rule, f.question_id, msg);
    }
}

} // namespace psygauge
