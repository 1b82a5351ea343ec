#pragma once

#include "psygauge/prompt.hpp"
#include "psygauge/questionnaire.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace psygauge {

inline constexpr std::string_view kAnxiety = "anxiety";
inline constexpr std::string_view kDepression = "depression";
inline constexpr std::string_view kCoherence = "sense-of-coherence";

struct NliScores {
    double entail = 0.0;
    double neutral = 0.0;
    double contradict = 0.0;

    friend bool operator==(const NliScores&, const NliScores&) = default;
};

// Provider of NLI probability triples. Implementations must be safe to call
// concurrently and must return one triple per query, in input order.
class EntailmentBackend {
public:
    virtual ~EntailmentBackend() = default;
    virtual const std::string& model_id() const = 0;
    virtual std::string_view kind() const = 0;
    virtual std::vector<NliScores> score_entailment(std::span<const NliQuery> batch) = 0;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<std::vector<double>> embed(std::span<const std::string> texts) = 0;
};

class AcceptabilityScorer {
public:
    virtual ~AcceptabilityScorer() = default;
    virtual std::vector<double> acceptability(std::span<const std::string> texts) = 0;
};

// Throws ProtocolError unless every triple lies in [0,1] and sums to 1 ± 1e-6.
void check_nli_scores(std::span<const NliScores> scores, std::size_t expected);

// --- on-disk cache -----------------------------------------------------------

struct CacheRecord {
    std::string model_id;
    std::string task;
    std::string premise;
    std::string hypothesis;
    nlohmann::ordered_json value;

    friend bool operator==(const CacheRecord&, const CacheRecord&) = default;
};

// Content-addressed store: one JSON file per key at <root>/ab/cd/abcd....json.
// Readers may run concurrently with writers; writes are temp-file + rename.
class CacheStore {
public:
    explicit CacheStore(std::filesystem::path root);

    // sha256(model_id \x1f task \x1f premise \x1f hypothesis), lowercase hex.
    static std::string key(std::string_view model_id, std::string_view task, std::string_view premise,
                           std::string_view hypothesis);

    const std::filesystem::path& root() const noexcept { return root_; }
    std::filesystem::path path_for(const std::string& key) const;

    void put(const CacheRecord& record) const;
    std::optional<CacheRecord> get(std::string_view model_id, std::string_view task, std::string_view premise,
                                   std::string_view hypothesis) const;

private:
    std::filesystem::path root_;
};

// Serves triples from the cache; misses go to `upstream` and are written
// back. Without an upstream, any miss raises CacheMiss.
class CachedBackend final : public EntailmentBackend {
public:
    CachedBackend(std::shared_ptr<const CacheStore> store, std::string model_id,
                  std::unique_ptr<EntailmentBackend> upstream = nullptr);

    const std::string& model_id() const override { return model_id_; }
    std::string_view kind() const override { return upstream_ ? upstream_->kind() : std::string_view("cache"); }
    std::vector<NliScores> score_entailment(std::span<const NliQuery> batch) override;

private:
    std::shared_ptr<const CacheStore> store_;
    std::string model_id_;
    std::unique_ptr<EntailmentBackend> upstream_;
};

class CachedEmbedder final : public Embedder {
public:
    CachedEmbedder(std::shared_ptr<const CacheStore> store, std::string model_id,
                   std::unique_ptr<Embedder> upstream = nullptr);
    std::vector<std::vector<double>> embed(std::span<const std::string> texts) override;

private:
    std::shared_ptr<const CacheStore> store_;
    std::string model_id_;
    std::unique_ptr<Embedder> upstream_;
};

class CachedAcceptability final : public AcceptabilityScorer {
public:
    CachedAcceptability(std::shared_ptr<const CacheStore> store, std::string model_id,
                        std::unique_ptr<AcceptabilityScorer> upstream = nullptr);
    std::vector<double> acceptability(std::span<const std::string> texts) override;

private:
    std::shared_ptr<const CacheStore> store_;
    std::string model_id_;
    std::unique_ptr<AcceptabilityScorer> upstream_;
};

// --- remote sidecar ----------------------------------------------------------

struct RemoteOptions {
    std::string endpoint;  // e.g. "http://127.0.0.1:8000"
    std::chrono::milliseconds timeout{60000};
    int max_retries = 3;
    std::chrono::milliseconds retry_backoff{200};
};

// JSON-over-HTTP client. Retries timeouts and 5xx with exponential backoff;
// 4xx responses are never retried.
class SidecarClient {
public:
    explicit SidecarClient(RemoteOptions options);

    nlohmann::json post(const std::string& path, const nlohmann::json& body) const;
    nlohmann::json get(const std::string& path) const;

    const RemoteOptions& options() const noexcept { return options_; }

private:
    nlohmann::json request(const std::string& method, const std::string& path, const nlohmann::json* body) const;

    RemoteOptions options_;
};

class RemoteBackend final : public EntailmentBackend {
public:
    RemoteBackend(SidecarClient client, std::string model_id);

    const std::string& model_id() const override { return model_id_; }
    std::string_view kind() const override { return "remote"; }
    std::vector<NliScores> score_entailment(std::span<const NliQuery> batch) override;

private:
    SidecarClient client_;
    std::string model_id_;
};

class RemoteEmbedder final : public Embedder {
public:
    RemoteEmbedder(SidecarClient client, std::string model_id);
    std::vector<std::vector<double>> embed(std::span<const std::string> texts) override;

private:
    SidecarClient client_;
    std::string model_id_;
};

class RemoteAcceptability final : public AcceptabilityScorer {
public:
    RemoteAcceptability(SidecarClient client, std::string model_id);
    std::vector<double> acceptability(std::span<const std::string> texts) override;

private:
    SidecarClient client_;
    std::string model_id_;
};

// GET /healthz
struct SidecarHealth {
    std::string status;
    std::vector<std::string> models_loaded;
};
SidecarHealth check_health(const SidecarClient& client);

// POST /v1/adapt; unset hyperparameters take the sidecar defaults.
struct AdaptRequest {
    std::string model;
    std::string corpus_path;
    std::optional<int> epochs;
    std::optional<double> learning_rate;
    std::optional<int> batch_size;
};

struct AdaptJob {
    std::string id;
    std::string base_model;
    std::string corpus_path;
    int epochs = 0;
    double learning_rate = 0.0;
    int batch_size = 0;
    std::vector<std::string> checkpoints;  // one model id per completed epoch
    std::string status;
};

nlohmann::json to_json(const AdaptRequest& request);
AdaptJob adapt_job_from_json(const nlohmann::json& j);
AdaptJob submit_adapt(const SidecarClient& client, const AdaptRequest& request);
AdaptJob adapt_status(const SidecarClient& client, const std::string& job_id);

// --- mock population ---------------------------------------------------------

struct MockPersona {
    std::string model_id;
    std::map<std::string, double, std::less<>> bias;  // construct -> beta in [-1, 1]
    double latent = 0.0;                              // shared factor value the biases were drawn from
    double noise_sd = 0.0;                            // per-query logit noise
    std::uint64_t seed = 0;

    double bias_for(std::string_view construct) const;

    friend bool operator==(const MockPersona&, const MockPersona&) = default;
};

// Deterministic stand-in for an NLI model with a construct-specific bias.
//
// For a query of question q at level j, let u_j in [-1, 1] be the question's
// effective weight w_j rescaled to its range (u = -1 at the lowest weight,
// +1 at the highest). With beta the persona's bias for q's construct and
// sign = +1 for source terms, -1 for inverse terms:
//
//   logit   = kGain * sign * beta * u_j + noise(seed, premise, hypothesis)
//   entail  = 1 / (1 + exp(-logit))
//   neutral = 0.5 * (1 - entail), contradict = 1 - entail - neutral
//
// noise is N(0, noise_sd^2) drawn from a hash of the seed and query text, so
// responses do not depend on batching or call order. beta = 0 with zero noise
// gives a constant matrix, hence a uniform PSS.
class MockBackend final : public EntailmentBackend {
public:
    static constexpr double kGain = 3.0;

    MockBackend(MockPersona persona, const SpecBundle& bundle);

    const std::string& model_id() const override { return persona_.model_id; }
    std::string_view kind() const override { return "mock"; }
    std::vector<NliScores> score_entailment(std::span<const NliQuery> batch) override;

    const MockPersona& persona() const noexcept { return persona_; }

private:
    struct QuestionProfile {
        double beta = 0.0;
        std::vector<double> unit_weights;
    };

    MockPersona persona_;
    std::map<std::string, QuestionProfile, std::less<>> profiles_;
};

struct Loadings {
    double anxiety = 1.0;
    double depression = 1.0;
    double coherence = -1.0;
};

struct PopulationOptions {
    double idiosyncratic_sd = 0.35;  // construct-specific spread around the latent factor
    double noise_sd = 0.05;          // per-query noise of each persona
    std::string id_prefix = "persona";
};

// Personas whose biases are tanh(loading * z + idiosyncratic_sd * e) with a
// shared latent z ~ N(0,1) per persona. Deterministic in `seed`.
// Throws InsufficientPopulation when n < 3.
std::vector<MockPersona> spawn_mock_population(std::size_t n, const Loadings& loadings, std::uint64_t seed,
                                               const PopulationOptions& options = {});

// Bag-of-words feature hashing into `dim` signed buckets.
class HashingEmbedder final : public Embedder {
public:
    explicit HashingEmbedder(std::size_t dim = 256) : dim_(dim) {}
    std::vector<std::vector<double>> embed(std::span<const std::string> texts) override;

private:
    std::size_t dim_;
};

class FunctionAcceptability final : public AcceptabilityScorer {
public:
    explicit FunctionAcceptability(std::function<double(const std::string&)> fn) : fn_(std::move(fn)) {}
    std::vector<double> acceptability(std::span<const std::string> texts) override;

private:
    std::function<double(const std::string&)> fn_;
};

// --- descriptors -------------------------------------------------------------

enum class BackendKind { remote, cache, mock };

std::string_view to_string(BackendKind kind) noexcept;
BackendKind parse_backend_kind(std::string_view text);

struct BackendDescriptor {
    BackendKind kind = BackendKind::mock;
    std::string model_id;
    std::string endpoint;                // remote
    std::filesystem::path cache_dir;     // cache; optional cache-through for remote/mock
    std::optional<MockPersona> persona;  // mock
    std::chrono::milliseconds timeout{60000};
    int max_retries = 3;
    std::chrono::milliseconds retry_backoff{200};
    std::size_t batch_size = 32;

    // Throws std::invalid_argument on an empty model id, zero batch size or a
    // missing kind-specific field.
    void validate() const;
    nlohmann::ordered_json to_json() const;
};

std::unique_ptr<EntailmentBackend> make_backend(const BackendDescriptor& descriptor, const SpecBundle& bundle);

} // namespace psygauge
