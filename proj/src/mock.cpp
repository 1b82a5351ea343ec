#include "psygauge/backend.hpp"
#include "psygauge/error.hpp"
#include "psygauge/hash.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

namespace psygauge {

double MockPersona::bias_for(std::string_view construct) const {
    auto it = bias.find(construct);
    return it == bias.end() ? 0.0 : it->second;
}

namespace {

// Standard normal from a 64-bit hash via Box-Muller; portable across stdlibs.
double hashed_normal(std::uint64_t h) {
    const auto a = splitmix64(h);
    const auto b = splitmix64(a);
    const double u1 = (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace

MockBackend::MockBackend(MockPersona persona, const SpecBundle& bundle) : persona_(std::move(persona)) {
    for (const auto& qn : bundle.questionnaires) {
        const double beta = persona_.bias_for(qn.construct);
        for (const auto& q : qn.questions) {
            auto w = effective_weights(q, bundle.scale_for(q));
            const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
            const double mid = 0.5 * (*hi + *lo);
            const double half = 0.5 * (*hi - *lo);
            QuestionProfile p{beta, {}};
            for (double wj : w) p.unit_weights.push_back(half > 0 ? (wj - mid) / half : 0.0);
            profiles_.insert_or_assign(q.id, std::move(p));
        }
    }
}

std::vector<NliScores> MockBackend::score_entailment(std::span<const NliQuery> batch) {
    std::vector<NliScores> out;
    out.reserve(batch.size());
    for (const auto& q : batch) {
        auto it = profiles_.find(q.question_id);
        if (it == profiles_.end()) throw ProtocolError("mock backend knows no question '" + q.question_id + "'");
        const auto& prof = it->second;
        if (q.level_index >= prof.unit_weights.size())
            throw ProtocolError("level index out of range for question '" + q.question_id + "'");
        const double sign = q.cterm_class == TermClass::source ? 1.0 : -1.0;
        double logit = kGain * sign * prof.beta * prof.unit_weights[q.level_index];
        if (persona_.noise_sd > 0.0) {
            auto h = fnv1a64(q.premise, fnv1a64(q.hypothesis, splitmix64(persona_.seed)));
            logit += persona_.noise_sd * hashed_normal(h);
        }
        const double entail = 1.0 / (1.0 + std::exp(-logit));
        const double neutral = 0.5 * (1.0 - entail);
        out.push_back({entail, neutral, 1.0 - entail - neutral});
    }
    return out;
}

std::vector<MockPersona> spawn_mock_population(std::size_t n, const Loadings& loadings, std::uint64_t seed,
                                               const PopulationOptions& options) {
    if (n < 3) throw InsufficientPopulation("a mock population needs at least 3 personas");
    std::vector<MockPersona> out;
    out.reserve(n);
    const std::pair<std::string_view, double> constructs[] = {
        {kAnxiety, loadings.anxiety}, {kDepression, loadings.depression}, {kCoherence, loadings.coherence}};
    const int width = static_cast<int>(std::to_string(n - 1).size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto base = splitmix64(seed ^ splitmix64(i + 1));
        MockPersona p;
        std::ostringstream id;
        id << options.id_prefix << '-' << std::setw(std::max(width, 3)) << std::setfill('0') << i;
        p.model_id = id.str();
        p.latent = hashed_normal(base);
        std::uint64_t k = 0;
        for (const auto& [construct, loading] : constructs) {
            const double eps = hashed_normal(splitmix64(base + ++k));
            p.bias.emplace(std::string(construct), std::tanh(loading * p.latent + options.idiosyncratic_sd * eps));
        }
        p.noise_sd = options.noise_sd;
        p.seed = splitmix64(base + 0x51ed);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<std::vector<double>> HashingEmbedder::embed(std::span<const std::string> texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        std::vector<double> v(dim_, 0.0);
        std::string token;
        auto flush = [&] {
            if (token.empty()) return;
            const auto h = fnv1a64(token);
            v[h % dim_] += (h >> 63) ? -1.0 : 1.0;
            token.clear();
        };
        for (unsigned char c : text) {
            if (std::isalnum(c) || c == '\'') token.push_back(static_cast<char>(std::tolower(c)));
            else flush();
        }
        flush();
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<double> FunctionAcceptability::acceptability(std::span<const std::string> texts) {
    std::vector<double> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        const double v = fn_(t);
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("acceptability score outside [0,1] for \"" + t + "\"");
        out.push_back(v);
    }
    return out;
}

// --- descriptors -------------------------------------------------------------------

std::string_view to_string(BackendKind kind) noexcept {
    switch (kind) {
    case BackendKind::remote: return "remote";
    case BackendKind::cache: return "cache";
    case BackendKind::mock: return "mock";
    }
    return "unknown";
}

BackendKind parse_backend_kind(std::string_view text) {
    if (text == "remote") return BackendKind::remote;
    if (text == "cache") return BackendKind::cache;
    if (text == "mock") return BackendKind::mock;
    throw std::invalid_argument("unknown backend kind '" + std::string(text) + "'");
}

void BackendDescriptor::validate() const {
    if (model_id.empty()) throw std::invalid_argument("backend model_id must not be empty");
    if (batch_size < 1) throw std::invalid_argument("backend batch size must be at least 1");
    if (kind == BackendKind::remote && endpoint.empty()) throw std::invalid_argument("remote backend needs an endpoint");
    if (kind == BackendKind::cache && cache_dir.empty()) throw std::invalid_argument("cache backend needs a cache directory");
    if (kind == BackendKind::mock && !persona) throw std::invalid_argument("mock backend needs a persona");
}

nlohmann::ordered_json BackendDescriptor::to_json() const {
    nlohmann::ordered_json j{{"kind", std::string(to_string(kind))}, {"model_id", model_id}};
    if (!endpoint.empty()) j["endpoint"] = endpoint;
    if (!cache_dir.empty()) j["cache_dir"] = cache_dir.string();
    if (persona) {
        j["persona"] = {{"bias", persona->bias}, {"latent", persona->latent}, {"noise_sd", persona->noise_sd},
                        {"seed", persona->seed}};
    }
    j["timeout_ms"] = timeout.count();
    j["max_retries"] = max_retries;
    j["batch_size"] = batch_size;
    return j;
}

std::unique_ptr<EntailmentBackend> make_backend(const BackendDescriptor& d, const SpecBundle& bundle) {
    d.validate();
    std::unique_ptr<EntailmentBackend> upstream;
    switch (d.kind) {
    case BackendKind::remote:
        upstream = std::make_unique<RemoteBackend>(
            SidecarClient({d.endpoint, d.timeout, d.max_retries, d.retry_backoff}), d.model_id);
        break;
    case BackendKind::mock: {
        auto persona = *d.persona;
        persona.model_id = d.model_id;
        upstream = std::make_unique<MockBackend>(std::move(persona), bundle);
        break;
    }
    case BackendKind::cache: break;
    }
    if (d.cache_dir.empty()) return upstream;
    return std::make_unique<CachedBackend>(std::make_shared<CacheStore>(d.cache_dir), d.model_id, std::move(upstream));
}

} // namespace psygauge
