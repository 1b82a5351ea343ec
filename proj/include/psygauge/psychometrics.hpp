#pragma once

#include "psygauge/backend.hpp"
#include "psygauge/prompt.hpp"
#include "psygauge/scoring.hpp"
#include "psygauge/stats.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace psygauge {

// --- content validity ------------------------------------------------------------

// Mean cosine between the embedded original item and each S+ prompt
// ("premise hypothesis"). Queries of other classes or questions are ignored.
// Throws BackendUnavailable when `embedder` is null.
double semantic_similarity(const Question& q, std::span<const NliQuery> queries, Embedder* embedder);

// Mean over queries of the average acceptability of premise and hypothesis,
// each scored as its own sentence. Throws BackendUnavailable when null.
double linguistic_acceptability(std::span<const NliQuery> queries, AcceptabilityScorer* scorer);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

// --- intra-question consistency ---------------------------------------------------

// Silhouette of S+ vs S- over PSS rows. Throws TooFewTerms.
double silhouette(const PssMatrix& pss, std::span<const std::string> source_terms,
                  std::span<const std::string> inverse_terms,
                  stats::DistanceMetric metric = stats::DistanceMetric::euclidean);

// nullopt when either term class has fewer than 2 members.
std::optional<double> question_silhouette(const PssMatrix& pss, const Question& q,
                                          stats::DistanceMetric metric = stats::DistanceMetric::euclidean);

// --- validation report -------------------------------------------------------------

struct QuestionValidation {
    std::string questionnaire_id;
    std::string question_id;
    std::optional<double> ss;
    std::optional<double> la;
    std::optional<double> sc;  // mean over assessed models
};

// One row per questionnaire and per subscale, shaped like a prompt/validity table.
struct ValidationRow {
    std::string id;
    std::size_t source_prompts = 0;
    std::size_t inverse_prompts = 0;
    std::optional<double> mean_ss;
    std::optional<double> mean_la;
    std::optional<double> mean_sc;
    std::optional<double> cronbach_alpha;
};

struct ValidationReport {
    std::vector<QuestionValidation> questions;
    std::vector<ValidationRow> rows;
    std::vector<std::string> warnings;
};

struct ValidationThresholds {
    double ss_min = 0.5;
    double sc_min = 0.6;
};

// `records` are assessments of the bundle's questionnaires by any number of
// models; alpha needs at least two. Null providers leave SS / LA empty.
ValidationReport build_validation_report(const SpecBundle& bundle, std::span<const AssessmentRecord> records,
                                         Embedder* embedder, AcceptabilityScorer* scorer,
                                         const ValidationThresholds& thresholds = {});

nlohmann::ordered_json to_json(const ValidationReport& report);
std::string to_table_csv(const ValidationReport& report);

// --- construct validity ------------------------------------------------------------

struct ConstructColumns {
    std::string anxiety = "gad7";
    std::string depression = "phq9";
    std::string coherence = "soc13";
};

struct PairCorrelation {
    std::string x;
    std::string y;
    stats::Correlation pearson;
    stats::Correlation spearman;
};

struct ConstructReport {
    std::vector<PairCorrelation> pairs;  // every pair of table columns
    // Each flag requires the expected sign under both Pearson and Spearman.
    bool anxiety_depression_positive = false;
    bool anxiety_coherence_negative = false;
    bool depression_coherence_negative = false;

    bool sign_pattern_holds() const noexcept {
        return anxiety_depression_positive && anxiety_coherence_negative && depression_coherence_negative;
    }
    const PairCorrelation* find(std::string_view a, std::string_view b) const;
};

// Throws DegenerateInput (constant column, n < 3) and Error when a construct
// column is missing.
ConstructReport construct_report(const PopulationTable& table, const ConstructColumns& columns = {});

nlohmann::ordered_json to_json(const ConstructReport& report);

// --- interventions -----------------------------------------------------------------

struct InterventionComparison {
    std::string scale;
    std::vector<std::string> models;
    std::vector<double> t0;
    std::vector<double> t1;
    std::optional<stats::PairedTTest> test;
    std::string status = "ok";  // or the name of the error that prevented the test
};

// Throws ZeroVariance when all paired differences are equal.
InterventionComparison paired_t_test(const std::string& scale, std::span<const double> t0, std::span<const double> t1);

// Pairs records by model id for every scale column present in both arms.
// Throws PairingError when a model appears in only one arm. A scale whose
// differences are all equal is reported with status "ZeroVariance".
std::vector<InterventionComparison> compare_interventions(std::span<const AssessmentRecord> t0,
                                                          std::span<const AssessmentRecord> t1);

nlohmann::ordered_json to_json(const InterventionComparison& comparison);
std::string to_table_csv(std::span<const InterventionComparison> comparisons, const std::string& intervention);

} // namespace psygauge
