#include "psygauge/backend.hpp"
#include "psygauge/kernels.hpp"

#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

using namespace psygauge;

namespace {

std::vector<EntailmentMatrix> random_batch(std::size_t n) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<EntailmentMatrix> out(n);
    for (auto& m : out) {
        m.question_id = "q";
        m.values = Matrix(6, 8);
        for (std::size_t r = 0; r < 6; ++r) {
            m.cterms.push_back("t" + std::to_string(r));
            m.classes.push_back(r < 3 ? TermClass::source : TermClass::inverse);
            for (std::size_t c = 0; c < 8; ++c) m.values(r, c) = u(rng);
        }
        for (std::size_t c = 0; c < 8; ++c) m.levels.push_back("l" + std::to_string(c));
    }
    return out;
}

const SpecBundle& shipped() {
    static const SpecBundle bundle = [] {
        const std::filesystem::path root(PSYGAUGE_SOURCE_DIR);
        return load_specs({root / "specs/gad7.json", root / "specs/phq9.json", root / "specs/soc13.json"});
    }();
    return bundle;
}

template <bool Parallel>
void BM_normalize_batch(benchmark::State& state) {
    const auto batch = random_batch(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto out = Parallel ? kernels::normalize_batch(batch) : kernels::normalize_batch_serial(batch);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_assess_population(benchmark::State& state) {
    const auto& bundle = shipped();
    std::vector<std::unique_ptr<MockBackend>> owned;
    std::vector<EntailmentBackend*> backends;
    for (const auto& p : spawn_mock_population(static_cast<std::size_t>(state.range(0)), {}, 7)) {
        owned.push_back(std::make_unique<MockBackend>(p, bundle));
        backends.push_back(owned.back().get());
    }
    for (auto _ : state) {
        auto out = Parallel ? kernels::assess_population(backends, bundle) : kernels::assess_population_serial(backends, bundle);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
    state.counters["threads"] = Parallel ? kernels::max_threads() : 1;
}

} // namespace

BENCHMARK(BM_normalize_batch<false>)->Name("normalize_batch/serial")->Arg(1024)->Arg(16384);
BENCHMARK(BM_normalize_batch<true>)->Name("normalize_batch/openmp")->Arg(1024)->Arg(16384);
BENCHMARK(BM_assess_population<false>)->Name("assess_population/serial")->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_assess_population<true>)->Name("assess_population/openmp")->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
