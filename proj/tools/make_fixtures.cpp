// Regenerates tests/fixtures/cache and tests/fixtures/soc_q3_expected.json
// from the pinned fixture persona. Usage: make_fixtures <fixtures-dir>
#include "psygauge/backend.hpp"
#include "psygauge/prompt.hpp"
#include "psygauge/psychometrics.hpp"
#include "psygauge/questionnaire.hpp"
#include "psygauge/scoring.hpp"

#include <fstream>
#include <iostream>

using namespace psygauge;

namespace {

constexpr const char* kNliModel = "fixture-nli";
constexpr const char* kEmbedModel = "fixture-embed";
constexpr const char* kAcceptabilityModel = "fixture-acceptability";

MockPersona fixture_persona() {
    MockPersona p;
    p.model_id = kNliModel;
    p.bias[std::string(kCoherence)] = 0.4;
    p.noise_sd = 0.3;
    p.seed = 20240501;
    return p;
}

double fixture_acceptability(const std::string& text) {
    // Shorter sentences read as slightly more acceptable.
    return 0.97 - 0.004 * static_cast<double>(text.size() % 23);
}

nlohmann::ordered_json matrix_json(const TermLevelMatrix& m) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < m.values.rows(); ++r) {
        auto row = m.values.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return {{"cterms", m.cterms}, {"levels", m.levels}, {"values", rows}};
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_fixtures <fixtures-dir>\n";
        return 2;
    }
    const std::filesystem::path dir = argv[1];
    const auto bundle = load_spec(dir / "soc_q3.json");
    const auto& qn = bundle.questionnaires.at(0);
    auto store = std::make_shared<CacheStore>(dir / "cache");

    CachedBackend backend(store, kNliModel, std::make_unique<MockBackend>(fixture_persona(), bundle));
    const auto assessment = assess_detailed(backend, qn, bundle);

    const auto queries = expand(qn, bundle);
    CachedEmbedder embedder(store, kEmbedModel, std::make_unique<HashingEmbedder>());
    const double ss = semantic_similarity(qn.questions.at(0), queries, &embedder);
    CachedAcceptability scorer(store, kAcceptabilityModel, std::make_unique<FunctionAcceptability>(fixture_acceptability));
    const double la = linguistic_acceptability(queries, &scorer);

    const auto& m = assessment.matrices.at(0);
    nlohmann::ordered_json expected{{"model_id", kNliModel},
                                    {"question_id", m.raw.question_id},
                                    {"raw", matrix_json(m.raw)},
                                    {"pss", matrix_json(m.pss)},
                                    {"score", assessment.record.questions.at(0).score},
                                    {"total", assessment.record.total},
                                    {"ss", ss},
                                    {"la", la}};
    std::ofstream(dir / "soc_q3_expected.json") << expected.dump(2) << "\n";
    std::cout << "score " << assessment.record.total << "\n";
    return 0;
}
