#pragma once

#include "psygauge/backend.hpp"
#include "psygauge/matrix.hpp"
#include "psygauge/prompt.hpp"
#include "psygauge/questionnaire.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace psygauge {

// Rows are construct terms (S+ then S-), columns are intensifier levels.
struct TermLevelMatrix {
    std::string question_id;
    std::vector<std::string> cterms;
    std::vector<TermClass> classes;
    std::vector<std::string> levels;  // level terms joined with '|'
    Matrix values;

    std::size_t row_of(std::string_view cterm) const;  // npos when absent

    friend bool operator==(const TermLevelMatrix&, const TermLevelMatrix&) = default;
};

// Raw entailment probabilities P_e(s, l), averaged over a level's terms.
struct EntailmentMatrix : TermLevelMatrix {};

// Two-way normalized scores PSS(l | s); every row sums to 1.
struct PssMatrix : TermLevelMatrix {};

struct QueryKey {
    std::string question_id;
    std::string cterm;
    std::string level_term;

    auto operator<=>(const QueryKey&) const = default;
};

QueryKey key_of(const NliQuery& q);

using EntailmentScores = std::map<QueryKey, double>;

// Throws MissingScore listing every unscored provenance triple, and
// std::invalid_argument for probabilities outside [0,1].
EntailmentMatrix build_matrix(std::span<const NliQuery> queries, const EntailmentScores& scores);

// Same, with `probabilities` aligned to `queries`.
EntailmentMatrix build_matrix(std::span<const NliQuery> queries, std::span<const double> probabilities);

// How rows are renormalized after the per-level softmax across terms.
enum class LevelNormalization { sum_division, softmax };

// Step 1: softmax (temperature 1) over construct terms within each level.
// Step 2: renormalize each term's row across levels.
// Throws DegenerateMatrix for fewer than 2 levels or no terms.
PssMatrix two_way_normalize(const EntailmentMatrix& m,
                            LevelNormalization strategy = LevelNormalization::sum_division);

// Raw-matrix form of the same transform; `out` is resized as needed.
void two_way_normalize_values(const Matrix& in, Matrix& out,
                              LevelNormalization strategy = LevelNormalization::sum_division);

// sum_{s in S+, j} PSS(l_j | s) * w_j / (|S+| * |L|). Throws ShapeMismatch.
double question_score(const PssMatrix& pss, std::span<const std::string> source_terms, std::span<const double> weights);

// Uses the question's S+ and its effective (possibly reversed) weights.
double question_score(const PssMatrix& pss, const Question& q, const IntensifierScale& scale);

// --- assessment ------------------------------------------------------------------

struct QuestionResult {
    std::string question_id;
    double score = 0.0;
    std::optional<double> silhouette;  // empty when |S+| < 2 or |S-| < 2

    friend bool operator==(const QuestionResult&, const QuestionResult&) = default;
};

struct SubscaleResult {
    std::string name;
    double score = 0.0;

    friend bool operator==(const SubscaleResult&, const SubscaleResult&) = default;
};

struct AssessmentRecord {
    std::string model_id;
    std::string questionnaire_id;
    std::string construct;
    std::vector<QuestionResult> questions;
    std::vector<SubscaleResult> subscales;
    double total = 0.0;
    std::size_t query_count = 0;
    nlohmann::ordered_json backend;  // descriptor / provenance metadata
    std::string timestamp;           // not serialized; runs record it in their manifest

    friend bool operator==(const AssessmentRecord&, const AssessmentRecord&) = default;
};

nlohmann::ordered_json to_json(const AssessmentRecord& record);
AssessmentRecord record_from_json(const nlohmann::ordered_json& j);

struct AssessOptions {
    std::size_t batch_size = 32;
    std::size_t concurrency = 1;  // batches in flight
    LevelNormalization normalization = LevelNormalization::sum_division;
};

// Per-question matrices produced during an assessment.
struct QuestionMatrices {
    EntailmentMatrix raw;
    PssMatrix pss;
};

struct Assessment {
    AssessmentRecord record;
    std::vector<QuestionMatrices> matrices;  // parallel to record.questions
};

// expand -> score -> build_matrix -> two_way_normalize -> question_score, then
// subscale and total means. Results do not depend on batch completion order.
Assessment assess_detailed(EntailmentBackend& backend, const Questionnaire& questionnaire, const SpecBundle& bundle,
                           const AssessOptions& options = {});

AssessmentRecord assess(EntailmentBackend& backend, const Questionnaire& questionnaire, const SpecBundle& bundle,
                        const AssessOptions& options = {});

// --- population ---------------------------------------------------------------------

struct PopulationTable {
    std::vector<std::string> models;
    std::vector<std::string> columns;  // questionnaire ids, then "<questionnaire>/<subscale>"
    Matrix raw;
    Matrix z;                                 // filled by z_normalize
    std::vector<std::string> degenerate_columns;  // zero-variance columns (z set to 0)

    std::optional<std::size_t> column_index(std::string_view column) const;

    // One row per model id; models sorted, columns in first-seen order.
    // Throws Error when a model lacks a column another model has.
    static PopulationTable from_records(std::span<const AssessmentRecord> records);
};

// z = (x - mean) / sd with the n-1 sample sd per column.
// Throws InsufficientPopulation for fewer than 2 models.
PopulationTable z_normalize(PopulationTable table);

// Models x items matrix of per-question scores for one questionnaire, optionally
// restricted to `question_ids`. Rows follow `models` (sorted model ids).
Matrix item_matrix(std::span<const AssessmentRecord> records, const std::string& questionnaire_id,
                   std::span<const std::string> question_ids, std::vector<std::string>* models = nullptr);

std::string to_wide_csv(const PopulationTable& table, bool z_scores = false);
std::string to_long_csv(const PopulationTable& table);  // model,scale,score,z
nlohmann::ordered_json to_json(const PopulationTable& table);

} // namespace psygauge
