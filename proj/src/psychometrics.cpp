#include "psygauge/psychometrics.hpp"

#include "psygauge/error.hpp"
#include "psygauge/format.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace psygauge {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ProtocolError("embedding dimensions differ");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

double semantic_similarity(const Question& q, std::span<const NliQuery> queries, Embedder* embedder) {
    if (!embedder) throw BackendUnavailable("semantic similarity needs an embedding provider");
    std::vector<std::string> texts{q.original_text};
    for (const auto& query : queries)
        if (query.question_id == q.id && query.cterm_class == TermClass::source)
            texts.push_back(query.premise + " " + query.hypothesis);
    if (texts.size() == 1) throw ShapeMismatch("question '" + q.id + "': no source prompts to compare");
    const auto vectors = embedder->embed(texts);
    if (vectors.size() != texts.size()) throw ProtocolError("embedding provider returned the wrong number of vectors");
    double sum = 0.0;
    for (std::size_t i = 1; i < vectors.size(); ++i) sum += cosine_similarity(vectors[0], vectors[i]);
    return sum / static_cast<double>(vectors.size() - 1);
}

double linguistic_acceptability(std::span<const NliQuery> queries, AcceptabilityScorer* scorer) {
    if (!scorer) throw BackendUnavailable("linguistic acceptability needs an acceptability provider");
    if (queries.empty()) throw ShapeMismatch("linguistic acceptability of an empty prompt set");
    std::vector<std::string> texts;
    texts.reserve(queries.size() * 2);
    for (const auto& q : queries) {
        texts.push_back(q.premise);
        texts.push_back(q.hypothesis);
    }
    const auto scores = scorer->acceptability(texts);
    if (scores.size() != texts.size()) throw ProtocolError("acceptability provider returned the wrong number of scores");
    double sum = 0.0;
    for (std::size_t k = 0; k < queries.size(); ++k) sum += 0.5 * (scores[2 * k] + scores[2 * k + 1]);
    return sum / static_cast<double>(queries.size());
}

double silhouette(const PssMatrix& pss, std::span<const std::string> source_terms,
                  std::span<const std::string> inverse_terms, stats::DistanceMetric metric) {
    if (source_terms.size() < 2 || inverse_terms.size() < 2)
        throw TooFewTerms("question '" + pss.question_id + "': silhouette needs at least 2 source and 2 inverse terms");
    Matrix points(source_terms.size() + inverse_terms.size(), pss.values.cols());
    std::vector<int> labels;
    std::size_t r = 0;
    for (const auto* terms : {&source_terms, &inverse_terms}) {
        for (const auto& t : *terms) {
            const auto i = pss.row_of(t);
            if (i == std::string_view::npos)
                throw ShapeMismatch("question '" + pss.question_id + "': term '" + t + "' not in matrix");
            std::copy(pss.values.row(i).begin(), pss.values.row(i).end(), points.row(r++).begin());
            labels.push_back(terms == &source_terms ? 0 : 1);
        }
    }
    return stats::silhouette(points, labels, metric);
}

std::optional<double> question_silhouette(const PssMatrix& pss, const Question& q, stats::DistanceMetric metric) {
    if (q.source_terms.size() < 2 || q.inverse_terms.size() < 2) return std::nullopt;
    return silhouette(pss, q.source_terms, q.inverse_terms, metric);
}

// --- validation report -----------------------------------------------------------------

namespace {

std::optional<double> mean_present(const std::vector<std::optional<double>>& v) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& x : v)
        if (x) {
            sum += *x;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

} // namespace

ValidationReport build_validation_report(const SpecBundle& bundle, std::span<const AssessmentRecord> records,
                                         Embedder* embedder, AcceptabilityScorer* scorer,
                                         const ValidationThresholds& thresholds) {
    ValidationReport report;
    for (const auto& qn : bundle.questionnaires) {
        std::vector<QuestionValidation> qv;
        for (const auto& q : qn.questions) {
            const auto queries = expand(q, bundle.scale_for(q));
            QuestionValidation v{qn.id, q.id, std::nullopt, std::nullopt, std::nullopt};
            if (embedder) v.ss = semantic_similarity(q, queries, embedder);
            if (scorer) v.la = linguistic_acceptability(queries, scorer);
            std::vector<std::optional<double>> scs;
            for (const auto& r : records) {
                if (r.questionnaire_id != qn.id) continue;
                for (const auto& res : r.questions)
                    if (res.question_id == q.id) scs.push_back(res.silhouette);
            }
            v.sc = mean_present(scs);
            if (v.ss && *v.ss < thresholds.ss_min)
                report.warnings.push_back(q.id + ": SS " + format_double(*v.ss) + " below " + format_double(thresholds.ss_min));
            if (v.sc && *v.sc < thresholds.sc_min)
                report.warnings.push_back(q.id + ": SC " + format_double(*v.sc) + " below " + format_double(thresholds.sc_min));
            qv.push_back(std::move(v));
        }

        auto make_row = [&](const std::string& id, const std::vector<std::string>& question_ids, const PromptCount& count) {
            ValidationRow row;
            row.id = id;
            row.source_prompts = count.source_count;
            row.inverse_prompts = count.inverse_count;
            std::vector<std::optional<double>> ss, la, sc;
            for (const auto& v : qv) {
                if (std::find(question_ids.begin(), question_ids.end(), v.question_id) == question_ids.end()) continue;
                ss.push_back(v.ss);
                la.push_back(v.la);
                sc.push_back(v.sc);
            }
            row.mean_ss = mean_present(ss);
            row.mean_la = mean_present(la);
            row.mean_sc = mean_present(sc);
            try {
                const auto items = item_matrix(records, qn.id, question_ids);
                row.cronbach_alpha = stats::cronbach_alpha(items);
            } catch (const DegenerateVariance& e) {
                report.warnings.push_back(id + ": Cronbach's alpha unavailable (" + e.what() + ")");
            }
            return row;
        };

        std::vector<std::string> all_ids;
        for (const auto& q : qn.questions) all_ids.push_back(q.id);
        report.rows.push_back(make_row(qn.id, all_ids, count_prompts(qn, bundle)));
        const auto sub_counts = count_subscale_prompts(qn, bundle);
        for (std::size_t s = 0; s < qn.subscales.size(); ++s)
            report.rows.push_back(make_row(sub_counts[s].id, qn.subscales[s].question_ids, sub_counts[s]));
        report.questions.insert(report.questions.end(), qv.begin(), qv.end());
    }
    return report;
}

nlohmann::ordered_json to_json(const ValidationReport& report) {
    nlohmann::ordered_json j;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
        j["rows"].push_back({{"id", r.id},
                             {"source_prompts", r.source_prompts},
                             {"inverse_prompts", r.inverse_prompts},
                             {"ss", optional_json(r.mean_ss)},
                             {"la", optional_json(r.mean_la)},
                             {"sc", optional_json(r.mean_sc)},
                             {"cronbach_alpha", optional_json(r.cronbach_alpha)}});
    }
    j["questions"] = nlohmann::ordered_json::array();
    for (const auto& q : report.questions) {
        j["questions"].push_back({{"questionnaire_id", q.questionnaire_id},
                                  {"question_id", q.question_id},
                                  {"ss", optional_json(q.ss)},
                                  {"la", optional_json(q.la)},
                                  {"sc", optional_json(q.sc)}});
    }
    j["warnings"] = report.warnings;
    return j;
}

std::string to_table_csv(const ValidationReport& report) {
    std::ostringstream out;
    out << "score,p_source,p_inverse,ss,la,sc,alpha\n";
    for (const auto& r : report.rows)
        out << csv_field(r.id) << ',' << r.source_prompts << ',' << r.inverse_prompts << ',' << format_optional(r.mean_ss)
            << ',' << format_optional(r.mean_la) << ',' << format_optional(r.mean_sc) << ','
            << format_optional(r.cronbach_alpha) << '\n';
    return out.str();
}

// --- construct validity ----------------------------------------------------------------

const PairCorrelation* ConstructReport::find(std::string_view a, std::string_view b) const {
    for (const auto& p : pairs)
        if ((p.x == a && p.y == b) || (p.x == b && p.y == a)) return &p;
    return nullptr;
}

ConstructReport construct_report(const PopulationTable& table, const ConstructColumns& columns) {
    for (const auto* c : {&columns.anxiety, &columns.depression, &columns.coherence})
        if (!table.column_index(*c)) throw Error("population table has no column '" + *c + "'");
    const bool have_z = table.z.rows() == table.raw.rows() && table.z.cols() == table.raw.cols();
    const Matrix& m = have_z ? table.z : table.raw;

    ConstructReport report;
    for (std::size_t a = 0; a < table.columns.size(); ++a) {
        for (std::size_t b = a + 1; b < table.columns.size(); ++b) {
            const auto x = m.column(a);
            const auto y = m.column(b);
            report.pairs.push_back({table.columns[a], table.columns[b],
                                    stats::correlate(x, y, stats::CorrelationMethod::pearson),
                                    stats::correlate(x, y, stats::CorrelationMethod::spearman)});
        }
    }
    auto sign = [&](const std::string& a, const std::string& b, double s) {
        const auto* p = report.find(a, b);
        return p && p->pearson.r * s > 0.0 && p->spearman.r * s > 0.0;
    };
    report.anxiety_depression_positive = sign(columns.anxiety, columns.depression, 1.0);
    report.anxiety_coherence_negative = sign(columns.anxiety, columns.coherence, -1.0);
    report.depression_coherence_negative = sign(columns.depression, columns.coherence, -1.0);
    return report;
}

nlohmann::ordered_json to_json(const ConstructReport& report) {
    nlohmann::ordered_json j;
    j["pairs"] = nlohmann::ordered_json::array();
    for (const auto& p : report.pairs) {
        j["pairs"].push_back({{"x", p.x},
                              {"y", p.y},
                              {"n", p.pearson.n},
                              {"pearson", {{"r", p.pearson.r}, {"p", p.pearson.p}}},
                              {"spearman", {{"r", p.spearman.r}, {"p", p.spearman.p}}}});
    }
    j["sign_checks"] = {{"anxiety_depression_positive", report.anxiety_depression_positive},
                        {"anxiety_coherence_negative", report.anxiety_coherence_negative},
                        {"depression_coherence_negative", report.depression_coherence_negative},
                        {"pattern_holds", report.sign_pattern_holds()}};
    return j;
}

// --- interventions ---------------------------------------------------------------------

InterventionComparison paired_t_test(const std::string& scale, std::span<const double> t0, std::span<const double> t1) {
    InterventionComparison c;
    c.scale = scale;
    c.t0.assign(t0.begin(), t0.end());
    c.t1.assign(t1.begin(), t1.end());
    c.test = stats::paired_t_test(t0, t1);
    return c;
}

std::vector<InterventionComparison> compare_interventions(std::span<const AssessmentRecord> t0,
                                                          std::span<const AssessmentRecord> t1) {
    const auto before = PopulationTable::from_records(t0);
    const auto after = PopulationTable::from_records(t1);
    if (before.models != after.models) {
        std::set<std::string> a(before.models.begin(), before.models.end());
        std::set<std::string> b(after.models.begin(), after.models.end());
        std::string unpaired;
        for (const auto& m : a)
            if (!b.count(m)) unpaired += " " + m + " (T0 only)";
        for (const auto& m : b)
            if (!a.count(m)) unpaired += " " + m + " (T1 only)";
        throw PairingError("models present in only one arm:" + unpaired);
    }

    std::vector<InterventionComparison> out;
    for (std::size_t c = 0; c < before.columns.size(); ++c) {
        const auto other = after.column_index(before.columns[c]);
        if (!other) continue;
        const auto x0 = before.raw.column(c);
        const auto x1 = after.raw.column(*other);
        InterventionComparison cmp;
        try {
            cmp = paired_t_test(before.columns[c], x0, x1);
        } catch (const ZeroVariance&) {
            cmp.scale = before.columns[c];
            cmp.t0 = x0;
            cmp.t1 = x1;
            cmp.status = "ZeroVariance";
        } catch (const std::invalid_argument&) {
            cmp.scale = before.columns[c];
            cmp.t0 = x0;
            cmp.t1 = x1;
            cmp.status = "InsufficientPopulation";
        }
        cmp.models = before.models;
        out.push_back(std::move(cmp));
    }
    return out;
}

nlohmann::ordered_json to_json(const InterventionComparison& c) {
    nlohmann::ordered_json j{{"scale", c.scale}, {"status", c.status}, {"models", c.models}, {"t0", c.t0}, {"t1", c.t1}};
    if (c.test) {
        const auto& t = *c.test;
        j["n"] = t.n;
        j["df"] = t.df;
        j["t0_mean"] = t.t0_mean;
        j["t0_sd"] = t.t0_sd;
        j["t1_mean"] = t.t1_mean;
        j["t1_sd"] = t.t1_sd;
        j["mean_diff"] = t.mean_diff;
        j["t"] = t.t;
        j["p"] = t.p;
    }
    return j;
}

std::string to_table_csv(std::span<const InterventionComparison> comparisons, const std::string& intervention) {
    std::ostringstream out;
    out << "intervention,scale,n,t0_mean,t0_sd,t1_mean,t1_sd,t,df,p,status\n";
    for (const auto& c : comparisons) {
        out << csv_field(intervention) << ',' << csv_field(c.scale) << ',' << c.t0.size() << ',';
        if (c.test) {
            const auto& t = *c.test;
            out << format_double(t.t0_mean) << ',' << format_double(t.t0_sd) << ',' << format_double(t.t1_mean) << ','
                << format_double(t.t1_sd) << ',' << format_double(t.t) << ',' << format_double(t.df) << ','
                << format_double(t.p);
        } else {
            out << ",,,,,,";
        }
        out << ',' << c.status << '\n';
    }
    return out.str();
}

} // namespace psygauge
