#include "psygauge/backend.hpp"
#include "psygauge/error.hpp"
#include "psygauge/questionnaire.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <functional>

using namespace psygauge;
using nlohmann::ordered_json;

namespace {

ordered_json base_doc() {
    return ordered_json::parse(R"({
      "schema_version": 1,
      "scales": [{"id": "f4", "levels": [
        {"terms": ["never"], "weight": 1}, {"terms": ["rarely", "seldom"], "weight": 2},
        {"terms": ["often"], "weight": 3}, {"terms": ["always"], "weight": 4}]}],
      "questionnaires": [{
        "id": "qa", "name": "Test", "construct": "anxiety",
        "subscales": {"first": ["qa-1"], "second": ["qa-2"]},
        "questions": [
          {"id": "qa-1", "original_text": "Feeling nervous", "premise_template": "I feel {cterm}.",
           "hypothesis_template": "It {intensifier} happens.", "source_terms": ["nervous", "tense"],
           "inverse_terms": ["calm", "relaxed"], "scale_ref": "f4"},
          {"id": "qa-2", "original_text": "Worrying", "premise_template": "I {cterm} a lot.",
           "hypothesis_template": "It {intensifier} happens.", "source_terms": ["worry"],
           "scale_ref": "f4", "reverse_keyed": true}]}]})");
}

std::vector<LintFinding> lint_doc(const ordered_json& doc) {
    return lint_spec(decode_spec(doc.dump()));
}

bool has_error(const std::vector<LintFinding>& f, const std::string& rule) {
    return std::any_of(f.begin(), f.end(),
                       [&](const auto& x) { return x.severity == Severity::error && x.rule == rule; });
}

bool has_warning(const std::vector<LintFinding>& f, const std::string& rule) {
    return std::any_of(f.begin(), f.end(),
                       [&](const auto& x) { return x.severity == Severity::warning && x.rule == rule; });
}

ordered_json& q1(ordered_json& d) { return d["questionnaires"][0]["questions"][0]; }

} // namespace

TEST_CASE("base document parses") {
    const auto b = parse_spec(base_doc().dump());
    REQUIRE(b.questionnaires.size() == 1);
    const auto& qn = b.questionnaires[0];
    CHECK(qn.subscales.size() == 2);
    CHECK(qn.subscales[0].name == "first");
    CHECK(qn.questions[1].reverse_keyed);
    CHECK(qn.questions[1].inverse_terms.empty());
    CHECK(b.scales[0].term_count() == 5);
    CHECK(b.scales[0].weights() == std::vector<double>{1, 2, 3, 4});
    CHECK(effective_weights(qn.questions[1], b.scales[0]) == std::vector<double>{4, 3, 2, 1});
    CHECK(effective_weights(qn.questions[0], b.scales[0]) == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("schema errors") {
    CHECK_THROWS_AS(decode_spec("{not json"), SchemaError);
    CHECK_THROWS_AS(decode_spec("[]"), SchemaError);
    auto d = base_doc();
    d["schema_version"] = 2;
    CHECK_THROWS_AS(decode_spec(d.dump()), SchemaError);
    d = base_doc();
    d["extra"] = 1;
    CHECK_THROWS_AS(decode_spec(d.dump()), SchemaError);
    d = base_doc();
    q1(d).erase("scale_ref");
    CHECK_THROWS_AS(decode_spec(d.dump()), SchemaError);
    d = base_doc();
    q1(d)["source_terms"] = "nervous";
    CHECK_THROWS_AS(decode_spec(d.dump()), SchemaError);
    d = base_doc();
    d["scales"][0]["levels"][0]["weight"] = "one";
    CHECK_THROWS_AS(decode_spec(d.dump()), SchemaError);
    d = base_doc();
    q1(d)["reverse_keyed"] = "yes";
    CHECK_THROWS_AS(decode_spec(d.dump()), SchemaError);
}

TEST_CASE("structural lint rules") {
    struct Case {
        const char* rule;
        std::function<void(ordered_json&)> mutate;
    };
    const std::vector<Case> cases{
        {"term-disjointness", [](auto& d) { q1(d)["inverse_terms"].push_back("tense"); }},
        {"term-duplicate", [](auto& d) { q1(d)["source_terms"].push_back("nervous"); }},
        {"term-empty", [](auto& d) { q1(d)["source_terms"].push_back(""); }},
        {"source-nonempty", [](auto& d) { q1(d)["source_terms"] = ordered_json::array(); }},
        {"premise-placeholder", [](auto& d) { q1(d)["premise_template"] = "I feel it."; }},
        {"premise-placeholder", [](auto& d) { q1(d)["premise_template"] = "I feel {cterm} {cterm}."; }},
        {"hypothesis-placeholder", [](auto& d) { q1(d)["hypothesis_template"] = "It {cterm} happens."; }},
        {"scale-ref", [](auto& d) { q1(d)["scale_ref"] = "missing"; }},
        {"weight-monotonicity", [](auto& d) { d["scales"][0]["levels"][2]["weight"] = 2; }},
        {"weight-monotonicity", [](auto& d) { d["scales"][0]["levels"][3]["weight"] = 0; }},
        {"scale-levels", [](auto& d) { d["scales"][0]["levels"] = ordered_json::parse(R"([{"terms":["x"],"weight":1}])"); }},
        {"level-terms", [](auto& d) { d["scales"][0]["levels"][0]["terms"] = ordered_json::array(); }},
        {"scale-term-distinct", [](auto& d) { d["scales"][0]["levels"][2]["terms"].push_back("never"); }},
        {"scale-id-unique", [](auto& d) { d["scales"].push_back(d["scales"][0]); }},
        {"question-id-unique", [](auto& d) { d["questionnaires"][0]["questions"][1]["id"] = "qa-1"; }},
        {"question-count", [](auto& d) { d["questionnaires"][0]["questions"] = ordered_json::array(); }},
        {"questionnaire-id-unique",
         [](auto& d) {
             auto copy = d["questionnaires"][0];
             for (auto& q : copy["questions"]) q["id"] = q["id"].template get<std::string>() + "b";
             copy.erase("subscales");
             d["questionnaires"].push_back(copy);
         }},
        {"subscale-refs", [](auto& d) { d["questionnaires"][0]["subscales"]["first"].push_back("nope"); }},
        {"subscale-duplicate", [](auto& d) { d["questionnaires"][0]["subscales"]["first"].push_back("qa-1"); }},
    };
    for (const auto& c : cases) {
        CAPTURE(c.rule);
        auto d = base_doc();
        c.mutate(d);
        const auto findings = lint_doc(d);
        CHECK(has_error(findings, c.rule));
        CHECK_THROWS_AS(parse_spec(d.dump()), ValidationError);
    }
}

TEST_CASE("validation errors carry the rule and question") {
    auto d = base_doc();
    q1(d)["inverse_terms"].push_back("nervous");
    try {
        parse_spec(d.dump());
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.rule() == "term-disjointness");
        CHECK(e.question_id() == "qa-1");
    }
    d = base_doc();
    q1(d)["scale_ref"] = "missing";
    CHECK_THROWS_AS(parse_spec(d.dump()), DanglingRefError);
}

TEST_CASE("warnings do not block parsing") {
    auto d = base_doc();
    q1(d)["premise_template"] = "I feel {cterm}, never calm.";
    const auto f = lint_doc(d);
    CHECK(has_warning(f, "template-neutrality"));
    CHECK(has_warning(f, "silhouette-unavailable"));  // qa-2 has a single source term and no inverse
    CHECK_NOTHROW(parse_spec(d.dump()));
}

TEST_CASE("no error findings exactly when the spec parses") {
    // Every single-field perturbation of the base document either parses with
    // zero error findings or fails both ways.
    std::vector<ordered_json> docs{base_doc()};
    for (int i = 0; i < 4; ++i) {
        auto d = base_doc();
        d["scales"][0]["levels"][i]["weight"] = 2.5;
        docs.push_back(d);
    }
    for (const char* t : {"", "nervous", "calm", "tense ", "Nervous"}) {
        auto d = base_doc();
        q1(d)["inverse_terms"].push_back(t);
        docs.push_back(d);
    }
    for (const auto& d : docs) {
        const auto f = lint_doc(d);
        const bool clean = std::none_of(f.begin(), f.end(), [](const auto& x) { return x.severity == Severity::error; });
        bool parsed = true;
        try {
            parse_spec(d.dump());
        } catch (const ValidationError&) {
            parsed = false;
        }
        CHECK(clean == parsed);
    }
}

TEST_CASE("acceptability lint") {
    const auto bundle = parse_spec(base_doc().dump());
    CHECK_THROWS_AS(lint_spec(bundle, nullptr, {true, 0.5}), BackendUnavailable);
    FunctionAcceptability scorer([](const std::string& s) { return s.find("seldom") != std::string::npos ? 0.2 : 0.9; });
    const auto f = lint_spec(bundle, &scorer, {true, 0.5});
    const auto n = std::count_if(f.begin(), f.end(), [](const auto& x) { return x.rule == "linguistic-acceptability"; });
    CHECK(n == 2);  // both questions use the flagged hypothesis
    CHECK(has_warning(f, "linguistic-acceptability"));
    CHECK(lint_spec(bundle, &scorer, {true, 0.1}).size() == f.size() - 2);
}

TEST_CASE("serialization round-trips") {
    for (const auto& p : testing::shipped_spec_paths()) {
        const auto b = load_spec(p);
        CHECK(parse_spec(serialize_spec(b)) == b);
        CHECK(serialize_spec(parse_spec(serialize_spec(b))) == serialize_spec(b));
        CHECK(serialize_spec(b) == testing::slurp(p));
    }
    const auto b = parse_spec(base_doc().dump());
    CHECK(parse_spec(serialize_spec(b)) == b);
}

TEST_CASE("merging specs") {
    const auto merged = testing::shipped_bundle();
    CHECK(merged.questionnaires.size() == 3);
    CHECK(merged.scales.size() == 1);
    auto a = parse_spec(base_doc().dump());
    auto b = a;
    b.questionnaires.clear();
    b.scales[0].levels[0].weight = 0.5;
    CHECK_THROWS_AS(merge_specs({a, b}), ValidationError);
    CHECK_THROWS_AS(merge_specs({a, a}), ValidationError);  // duplicate questionnaire id
}

TEST_CASE("missing spec file") {
    CHECK_THROWS_AS(load_spec("/nonexistent/spec.json"), IoError);
}
