#include "psygauge/scoring.hpp"

#include "psygauge/error.hpp"
#include "psygauge/format.hpp"
#include "psygauge/psychometrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace psygauge {

std::size_t TermLevelMatrix::row_of(std::string_view cterm) const {
    auto it = std::find(cterms.begin(), cterms.end(), cterm);
    return it == cterms.end() ? std::string_view::npos : static_cast<std::size_t>(it - cterms.begin());
}

QueryKey key_of(const NliQuery& q) {
    return {q.question_id, q.cterm, q.level_term};
}

EntailmentMatrix build_matrix(std::span<const NliQuery> queries, std::span<const double> probabilities) {
    if (probabilities.size() != queries.size())
        throw ShapeMismatch("build_matrix: " + std::to_string(probabilities.size()) + " probabilities for " +
                            std::to_string(queries.size()) + " queries");
    if (queries.empty()) throw DegenerateMatrix("build_matrix: no queries");

    EntailmentMatrix m;
    m.question_id = queries.front().question_id;
    std::size_t level_count = 0;
    for (const auto& q : queries) {
        if (q.question_id != m.question_id)
            throw std::invalid_argument("build_matrix: queries span several questions");
        if (m.row_of(q.cterm) == std::string_view::npos) {
            m.cterms.push_back(q.cterm);
            m.classes.push_back(q.cterm_class);
        }
        level_count = std::max(level_count, q.level_index + 1);
    }
    std::vector<std::vector<std::string>> level_terms(level_count);
    for (const auto& q : queries) {
        auto& terms = level_terms[q.level_index];
        if (std::find(terms.begin(), terms.end(), q.level_term) == terms.end()) terms.push_back(q.level_term);
    }
    for (const auto& terms : level_terms) {
        std::string label;
        for (const auto& t : terms) label += (label.empty() ? "" : "|") + t;
        m.levels.push_back(std::move(label));
    }

    Matrix sums(m.cterms.size(), level_count);
    std::vector<std::size_t> counts(m.cterms.size() * level_count, 0);
    for (std::size_t k = 0; k < queries.size(); ++k) {
        const double p = probabilities[k];
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("entailment probability outside [0,1] for " + queries[k].provenance());
        const auto i = m.row_of(queries[k].cterm);
        sums(i, queries[k].level_index) += p;
        ++counts[i * level_count + queries[k].level_index];
    }
    m.values = Matrix(m.cterms.size(), level_count);
    for (std::size_t i = 0; i < m.cterms.size(); ++i) {
        for (std::size_t j = 0; j < level_count; ++j) {
            const auto c = counts[i * level_count + j];
            if (c == 0)
                throw DegenerateMatrix("question '" + m.question_id + "': no query for term '" + m.cterms[i] +
                                       "' at level " + std::to_string(j));
            m.values(i, j) = sums(i, j) / static_cast<double>(c);
        }
    }
    return m;
}

EntailmentMatrix build_matrix(std::span<const NliQuery> queries, const EntailmentScores& scores) {
    std::vector<double> aligned;
    aligned.reserve(queries.size());
    std::vector<std::string> missing;
    for (const auto& q : queries) {
        auto it = scores.find(key_of(q));
        if (it == scores.end()) {
            missing.push_back(q.provenance());
            aligned.push_back(0.0);
        } else {
            aligned.push_back(it->second);
        }
    }
    if (!missing.empty()) {
        std::string msg = "missing entailment scores for";
        for (const auto& m : missing) msg += " " + m;
        throw MissingScore(msg, std::move(missing));
    }
    return build_matrix(queries, aligned);
}

void two_way_normalize_values(const Matrix& in, Matrix& out, LevelNormalization strategy) {
    const std::size_t rows = in.rows();
    const std::size_t cols = in.cols();
    if (rows == 0) throw DegenerateMatrix("two-way normalization needs at least one construct term");
    if (cols < 2) throw DegenerateMatrix("two-way normalization needs at least two levels");
    if (out.rows() != rows || out.cols() != cols) out = Matrix(rows, cols);

    // Softmax across terms within each level.
    for (std::size_t j = 0; j < cols; ++j) {
        double mx = in(0, j);
        for (std::size_t i = 1; i < rows; ++i) mx = std::max(mx, in(i, j));
        double sum = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
            out(i, j) = std::exp(in(i, j) - mx);
            sum += out(i, j);
        }
        for (std::size_t i = 0; i < rows; ++i) out(i, j) /= sum;
    }
    // Renormalize across levels within each term.
    for (std::size_t i = 0; i < rows; ++i) {
        auto row = out.row(i);
        if (strategy == LevelNormalization::softmax) {
            const double mx = *std::max_element(row.begin(), row.end());
            for (double& v : row) v = std::exp(v - mx);
        }
        const double sum = std::accumulate(row.begin(), row.end(), 0.0);
        for (double& v : row) v /= sum;
    }
}

PssMatrix two_way_normalize(const EntailmentMatrix& m, LevelNormalization strategy) {
    PssMatrix p;
    static_cast<TermLevelMatrix&>(p) = static_cast<const TermLevelMatrix&>(m);
    two_way_normalize_values(m.values, p.values, strategy);
    return p;
}

double question_score(const PssMatrix& pss, std::span<const std::string> source_terms, std::span<const double> weights) {
    const std::size_t levels = pss.values.cols();
    if (weights.size() != levels)
        throw ShapeMismatch("question '" + pss.question_id + "': " + std::to_string(weights.size()) + " weights for " +
                            std::to_string(levels) + " levels");
    if (source_terms.empty()) throw ShapeMismatch("question '" + pss.question_id + "': no source terms");
    double total = 0.0;
    for (const auto& term : source_terms) {
        const auto i = pss.row_of(term);
        if (i == std::string_view::npos)
            throw ShapeMismatch("question '" + pss.question_id + "': source term '" + term + "' not in matrix");
        for (std::size_t j = 0; j < levels; ++j) total += pss.values(i, j) * weights[j];
    }
    return total / (static_cast<double>(source_terms.size()) * static_cast<double>(levels));
}

double question_score(const PssMatrix& pss, const Question& q, const IntensifierScale& scale) {
    const auto w = effective_weights(q, scale);
    return question_score(pss, q.source_terms, w);
}

// --- assessment ---------------------------------------------------------------------

namespace {

// Rethrows the active backend error with the affected questions prefixed,
// keeping its type.
[[noreturn]] void rethrow_with_context(std::span<const NliQuery> batch) {
    std::string ctx = "question";
    std::vector<std::string_view> ids;
    for (const auto& q : batch)
        if (std::find(ids.begin(), ids.end(), q.question_id) == ids.end()) ids.push_back(q.question_id);
    if (ids.size() > 1) ctx += 's';
    for (std::size_t i = 0; i < ids.size(); ++i) ctx += (i ? ", '" : " '") + std::string(ids[i]) + "'";
    try {
        throw;
    } catch (const MissingScore&) {
        throw;
    } catch (const HttpError& e) {
        throw HttpError(e.status(), e.body(), ctx);
    } catch (const Timeout& e) {
        throw Timeout(ctx + ": " + e.what());
    } catch (const ProtocolError& e) {
        throw ProtocolError(ctx + ": " + e.what());
    } catch (const BackendUnavailable& e) {
        throw BackendUnavailable(ctx + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(ctx + ": " + e.what());
    }
}

std::vector<double> score_all(EntailmentBackend& backend, std::span<const NliQuery> queries,
                              const AssessOptions& options) {
    const std::size_t batch = std::max<std::size_t>(options.batch_size, 1);
    const std::size_t batches = (queries.size() + batch - 1) / batch;
    std::vector<double> entail(queries.size(), 0.0);
    std::vector<std::exception_ptr> errors(batches);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};

    auto worker = [&] {
        for (std::size_t b; !failed.load() && (b = next.fetch_add(1)) < batches;) {
            const std::size_t lo = b * batch;
            const std::size_t n = std::min(batch, queries.size() - lo);
            auto sub = queries.subspan(lo, n);
            try {
                try {
                    auto res = backend.score_entailment(sub);
                    check_nli_scores(res, n);
                    for (std::size_t k = 0; k < n; ++k) entail[lo + k] = res[k].entail;
                } catch (const Error&) {
                    rethrow_with_context(sub);
                }
            } catch (...) {
                errors[b] = std::current_exception();
                failed = true;
            }
        }
    };

    const std::size_t threads = std::min(std::max<std::size_t>(options.concurrency, 1), batches);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return entail;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

Assessment assess_detailed(EntailmentBackend& backend, const Questionnaire& questionnaire, const SpecBundle& bundle,
                           const AssessOptions& options) {
    if (questionnaire.questions.empty())
        throw ValidationError("question-count", "", "questionnaire '" + questionnaire.id + "' has no questions");

    std::vector<NliQuery> queries;
    std::vector<std::size_t> offsets{0};
    for (const auto& q : questionnaire.questions) {
        auto part = expand(q, bundle.scale_for(q));
        queries.insert(queries.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
        offsets.push_back(queries.size());
    }
    const auto entail = score_all(backend, queries, options);

    Assessment out;
    auto& rec = out.record;
    rec.model_id = backend.model_id();
    rec.questionnaire_id = questionnaire.id;
    rec.construct = questionnaire.construct;
    rec.query_count = queries.size();
    rec.backend = {{"kind", std::string(backend.kind())}, {"model_id", backend.model_id()}};

    std::vector<double> scores;
    for (std::size_t k = 0; k < questionnaire.questions.size(); ++k) {
        const auto& q = questionnaire.questions[k];
        const auto lo = offsets[k];
        const auto n = offsets[k + 1] - lo;
        auto raw = build_matrix(std::span(queries).subspan(lo, n), std::span<const double>(entail).subspan(lo, n));
        auto pss = two_way_normalize(raw, options.normalization);
        const double score = question_score(pss, q, bundle.scale_for(q));
        rec.questions.push_back({q.id, score, question_silhouette(pss, q)});
        scores.push_back(score);
        out.matrices.push_back({std::move(raw), std::move(pss)});
    }
    for (const auto& sub : questionnaire.subscales) {
        std::vector<double> v;
        for (const auto& id : sub.question_ids)
            for (const auto& r : rec.questions)
                if (r.question_id == id) v.push_back(r.score);
        if (!v.empty()) rec.subscales.push_back({sub.name, mean_of(v)});
    }
    rec.total = mean_of(scores);
    return out;
}

AssessmentRecord assess(EntailmentBackend& backend, const Questionnaire& questionnaire, const SpecBundle& bundle,
                        const AssessOptions& options) {
    return assess_detailed(backend, questionnaire, bundle, options).record;
}

nlohmann::ordered_json to_json(const AssessmentRecord& r) {
    nlohmann::ordered_json j;
    j["model_id"] = r.model_id;
    j["questionnaire_id"] = r.questionnaire_id;
    j["construct"] = r.construct;
    j["total"] = r.total;
    j["subscales"] = nlohmann::ordered_json::object();
    for (const auto& s : r.subscales) j["subscales"][s.name] = s.score;
    j["questions"] = nlohmann::ordered_json::array();
    for (const auto& q : r.questions) {
        nlohmann::ordered_json qj{{"id", q.question_id}, {"score", q.score}};
        qj["silhouette"] = q.silhouette ? nlohmann::ordered_json(*q.silhouette) : nlohmann::ordered_json(nullptr);
        j["questions"].push_back(std::move(qj));
    }
    j["query_count"] = r.query_count;
    j["backend"] = r.backend;
    return j;
}

AssessmentRecord record_from_json(const nlohmann::ordered_json& j) {
    try {
        AssessmentRecord r;
        r.model_id = j.at("model_id").get<std::string>();
        r.questionnaire_id = j.at("questionnaire_id").get<std::string>();
        r.construct = j.value("construct", std::string());
        r.total = j.at("total").get<double>();
        for (const auto& q : j.at("questions")) {
            QuestionResult qr{q.at("id").get<std::string>(), q.at("score").get<double>(), std::nullopt};
            if (q.contains("silhouette") && !q.at("silhouette").is_null()) qr.silhouette = q.at("silhouette").get<double>();
            r.questions.push_back(std::move(qr));
        }
        if (j.contains("subscales"))
            for (const auto& [name, v] : j.at("subscales").items()) r.subscales.push_back({name, v.get<double>()});
        r.query_count = j.value("query_count", std::size_t{0});
        if (j.contains("backend")) r.backend = j.at("backend");
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed assessment record: ") + e.what());
    }
}

// --- population --------------------------------------------------------------------------

std::optional<std::size_t> PopulationTable::column_index(std::string_view column) const {
    auto it = std::find(columns.begin(), columns.end(), column);
    if (it == columns.end()) return std::nullopt;
    return static_cast<std::size_t>(it - columns.begin());
}

PopulationTable PopulationTable::from_records(std::span<const AssessmentRecord> records) {
    std::vector<const AssessmentRecord*> sorted;
    for (const auto& r : records) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
        return std::tie(a->questionnaire_id, a->model_id) < std::tie(b->questionnaire_id, b->model_id);
    });

    PopulationTable t;
    std::set<std::string> models;
    std::map<std::pair<std::string, std::string>, double> cells;
    for (const auto* r : sorted) {
        models.insert(r->model_id);
        auto add = [&](const std::string& column, double v) {
            if (std::find(t.columns.begin(), t.columns.end(), column) == t.columns.end()) t.columns.push_back(column);
            if (!cells.emplace(std::pair{r->model_id, column}, v).second)
                throw Error("duplicate assessment of '" + column + "' for model '" + r->model_id + "'");
        };
        add(r->questionnaire_id, r->total);
        for (const auto& s : r->subscales) add(r->questionnaire_id + "/" + s.name, s.score);
    }
    t.models.assign(models.begin(), models.end());
    t.raw = Matrix(t.models.size(), t.columns.size());
    for (std::size_t i = 0; i < t.models.size(); ++i) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            auto it = cells.find({t.models[i], t.columns[c]});
            if (it == cells.end())
                throw Error("model '" + t.models[i] + "' has no score for '" + t.columns[c] + "'");
            t.raw(i, c) = it->second;
        }
    }
    return t;
}

PopulationTable z_normalize(PopulationTable t) {
    const std::size_t n = t.raw.rows();
    if (n < 2) throw InsufficientPopulation("z-normalization needs at least 2 models, got " + std::to_string(n));
    t.z = Matrix(n, t.raw.cols());
    t.degenerate_columns.clear();
    for (std::size_t c = 0; c < t.raw.cols(); ++c) {
        const auto col = t.raw.column(c);
        const bool constant = std::all_of(col.begin(), col.end(), [&](double v) { return v == col.front(); });
        const double m = stats::mean(col);
        const double sd = constant ? 0.0 : stats::sample_sd(col);
        if (!(sd > 1e-15 * std::max(1.0, std::abs(m)))) {
            t.degenerate_columns.push_back(t.columns[c]);
            continue;  // z stays 0
        }
        for (std::size_t i = 0; i < n; ++i) t.z(i, c) = (col[i] - m) / sd;
    }
    return t;
}

Matrix item_matrix(std::span<const AssessmentRecord> records, const std::string& questionnaire_id,
                   std::span<const std::string> question_ids, std::vector<std::string>* models) {
    std::vector<const AssessmentRecord*> rows;
    for (const auto& r : records)
        if (r.questionnaire_id == questionnaire_id) rows.push_back(&r);
    std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) { return a->model_id < b->model_id; });

    std::vector<std::string> ids(question_ids.begin(), question_ids.end());
    if (ids.empty() && !rows.empty())
        for (const auto& q : rows.front()->questions) ids.push_back(q.question_id);

    Matrix m(rows.size(), ids.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < ids.size(); ++j) {
            const auto& qs = rows[i]->questions;
            auto it = std::find_if(qs.begin(), qs.end(), [&](const auto& q) { return q.question_id == ids[j]; });
            if (it == qs.end())
                throw Error("model '" + rows[i]->model_id + "' has no score for question '" + ids[j] + "'");
            m(i, j) = it->score;
        }
    }
    if (models) {
        models->clear();
        for (const auto* r : rows) models->push_back(r->model_id);
    }
    return m;
}

std::string to_wide_csv(const PopulationTable& t, bool z_scores) {
    const Matrix& m = z_scores ? t.z : t.raw;
    std::ostringstream out;
    out << "model";
    for (const auto& c : t.columns) out << ',' << csv_field(c);
    out << '\n';
    for (std::size_t i = 0; i < t.models.size(); ++i) {
        out << csv_field(t.models[i]);
        for (std::size_t c = 0; c < t.columns.size(); ++c) out << ',' << format_double(m(i, c));
        out << '\n';
    }
    return out.str();
}

std::string to_long_csv(const PopulationTable& t) {
    std::ostringstream out;
    out << "model,scale,score,z\n";
    const bool have_z = t.z.rows() == t.raw.rows() && t.z.cols() == t.raw.cols();
    for (std::size_t i = 0; i < t.models.size(); ++i)
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            out << csv_field(t.models[i]) << ',' << csv_field(t.columns[c]) << ',' << format_double(t.raw(i, c)) << ','
                << (have_z ? format_double(t.z(i, c)) : std::string()) << '\n';
    return out.str();
}

nlohmann::ordered_json to_json(const PopulationTable& t) {
    const bool have_z = t.z.rows() == t.raw.rows() && t.z.cols() == t.raw.cols();
    nlohmann::ordered_json j;
    j["columns"] = t.columns;
    j["models"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < t.models.size(); ++i) {
        nlohmann::ordered_json row{{"model_id", t.models[i]}};
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            row["raw"][t.columns[c]] = t.raw(i, c);
            if (have_z) row["z"][t.columns[c]] = t.z(i, c);
        }
        j["models"].push_back(std::move(row));
    }
    j["degenerate_columns"] = t.degenerate_columns;
    return j;
}

} // namespace psygauge
