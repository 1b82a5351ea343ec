#include "psygauge/kernels.hpp"

#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace psygauge::kernels {

int max_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

std::vector<PssMatrix> normalize_batch_serial(std::span<const EntailmentMatrix> matrices, LevelNormalization strategy) {
    std::vector<PssMatrix> out;
    out.reserve(matrices.size());
    for (const auto& m : matrices) out.push_back(two_way_normalize(m, strategy));
    return out;
}

std::vector<PssMatrix> normalize_batch(std::span<const EntailmentMatrix> matrices, LevelNormalization strategy) {
    const auto n = static_cast<std::ptrdiff_t>(matrices.size());
    std::vector<PssMatrix> out(matrices.size());
    std::vector<std::exception_ptr> errors(matrices.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[i] = two_way_normalize(matrices[i], strategy);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

std::vector<AssessmentRecord> assess_population_serial(std::span<EntailmentBackend* const> backends,
                                                       const SpecBundle& bundle, const AssessOptions& options) {
    std::vector<AssessmentRecord> out;
    out.reserve(backends.size() * bundle.questionnaires.size());
    for (auto* backend : backends)
        for (const auto& qn : bundle.questionnaires) out.push_back(assess(*backend, qn, bundle, options));
    return out;
}

std::vector<AssessmentRecord> assess_population(std::span<EntailmentBackend* const> backends, const SpecBundle& bundle,
                                                const AssessOptions& options) {
    const std::size_t per_model = bundle.questionnaires.size();
    const auto jobs = static_cast<std::ptrdiff_t>(backends.size() * per_model);
    std::vector<AssessmentRecord> out(static_cast<std::size_t>(jobs));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < jobs; ++k) {
        const auto m = static_cast<std::size_t>(k) / per_model;
        const auto q = static_cast<std::size_t>(k) % per_model;
        try {
            out[k] = assess(*backends[m], bundle.questionnaires[q], bundle, options);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

} // namespace psygauge::kernels
