#pragma once

// Data-parallel batch kernels. Each OpenMP kernel has a serial reference with
// the same signature; tests require the two to agree bit for bit.

#include "psygauge/backend.hpp"
#include "psygauge/scoring.hpp"

#include <span>
#include <vector>

namespace psygauge::kernels {

std::vector<PssMatrix> normalize_batch_serial(std::span<const EntailmentMatrix> matrices,
                                              LevelNormalization strategy = LevelNormalization::sum_division);
std::vector<PssMatrix> normalize_batch(std::span<const EntailmentMatrix> matrices,
                                       LevelNormalization strategy = LevelNormalization::sum_division);

// Assesses every questionnaire of `bundle` with every backend. The result is
// model-major: records[m * questionnaires + q]. Backends must tolerate calls
// from several threads at once.
std::vector<AssessmentRecord> assess_population_serial(std::span<EntailmentBackend* const> backends,
                                                       const SpecBundle& bundle, const AssessOptions& options = {});
std::vector<AssessmentRecord> assess_population(std::span<EntailmentBackend* const> backends,
                                                const SpecBundle& bundle, const AssessOptions& options = {});

// Threads OpenMP will use for the parallel kernels (1 when built without OpenMP).
int max_threads() noexcept;

} // namespace psygauge::kernels
