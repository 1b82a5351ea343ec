#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace psygauge {

inline constexpr std::string_view kCTermPlaceholder = "{cterm}";
inline constexpr std::string_view kIntensifierPlaceholder = "{intensifier}";
inline constexpr int kSchemaVersion = 1;

// One Likert level: a set of interchangeable intensifier terms sharing a weight.
struct Level {
    std::vector<std::string> terms;
    double weight = 0.0;

    friend bool operator==(const Level&, const Level&) = default;
};

// Levels are ordered from least to most intensive.
struct IntensifierScale {
    std::string id;
    std::vector<Level> levels;

    std::size_t level_count() const noexcept { return levels.size(); }
    std::size_t term_count() const noexcept;
    std::vector<double> weights() const;

    friend bool operator==(const IntensifierScale&, const IntensifierScale&) = default;
};

enum class TermClass { source, inverse };

std::string_view to_string(TermClass c) noexcept;

struct Question {
    std::string id;
    std::string original_text;
    std::string premise_template;     // exactly one {cterm}
    std::string hypothesis_template;  // exactly one {intensifier}
    std::vector<std::string> source_terms;
    std::vector<std::string> inverse_terms;
    std::string scale_ref;
    bool reverse_keyed = false;

    friend bool operator==(const Question&, const Question&) = default;
};

struct Subscale {
    std::string name;
    std::vector<std::string> question_ids;

    friend bool operator==(const Subscale&, const Subscale&) = default;
};

struct Questionnaire {
    std::string id;
    std::string name;
    std::string construct;
    std::vector<Subscale> subscales;
    std::vector<Question> questions;

    const Question* find_question(std::string_view question_id) const;

    friend bool operator==(const Questionnaire&, const Questionnaire&) = default;
};

// Everything one spec document declares.
struct SpecBundle {
    int schema_version = kSchemaVersion;
    std::vector<IntensifierScale> scales;
    std::vector<Questionnaire> questionnaires;

    const IntensifierScale* find_scale(std::string_view id) const;
    const Questionnaire* find_questionnaire(std::string_view id) const;
    // Throws DanglingRefError when the question's scale is not declared.
    const IntensifierScale& scale_for(const Question& q) const;

    friend bool operator==(const SpecBundle&, const SpecBundle&) = default;
};

// Weight vector as applied to `q`: reversed for reverse-keyed items.
std::vector<double> effective_weights(const Question& q, const IntensifierScale& scale);

// Schema-level decode only. Throws SchemaError.
SpecBundle decode_spec(std::string_view document);

// decode_spec followed by full invariant validation. Throws SchemaError,
// ValidationError or DanglingRefError.
SpecBundle parse_spec(std::string_view document);

SpecBundle load_spec(const std::filesystem::path& path);

// Loads several spec files and merges them; scales sharing an id must be equal.
SpecBundle load_specs(const std::vector<std::filesystem::path>& paths);

SpecBundle merge_specs(std::vector<SpecBundle> bundles);

std::string serialize_spec(const SpecBundle& bundle);

// --- linting ------------------------------------------------------------------

enum class Severity { warning, error };

std::string_view to_string(Severity s) noexcept;

struct LintFinding {
    Severity severity = Severity::error;
    std::string rule;
    std::string questionnaire_id;
    std::string question_id;
    std::string message;
};

class AcceptabilityScorer;

struct LintOptions {
    bool acceptability = false;  // requires a scorer
    double la_threshold = 0.5;
};

// Structural lints always run. The acceptability lint expands every prompt and
// flags sentences the scorer rates below `la_threshold`.
std::vector<LintFinding> lint_spec(const SpecBundle& bundle, AcceptabilityScorer* scorer = nullptr,
                                   const LintOptions& options = {});

// Throws the first error-severity structural finding as a ValidationError.
void validate_spec(const SpecBundle& bundle);

} // namespace psygauge
