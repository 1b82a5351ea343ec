#include "psygauge/backend.hpp"
#include "psygauge/error.hpp"

#include <httplib.h>

#include <cmath>
#include <thread>

namespace psygauge {

void check_nli_scores(std::span<const NliScores> scores, std::size_t expected) {
    if (scores.size() != expected)
        throw ProtocolError("expected " + std::to_string(expected) + " NLI triples, got " + std::to_string(scores.size()));
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto& s = scores[i];
        for (double v : {s.entail, s.neutral, s.contradict})
            if (!(v >= 0.0 && v <= 1.0)) throw ProtocolError("NLI triple " + std::to_string(i) + " has a value outside [0,1]");
        if (std::abs(s.entail + s.neutral + s.contradict - 1.0) > 1e-6)
            throw ProtocolError("NLI triple " + std::to_string(i) + " does not sum to 1");
    }
}

SidecarClient::SidecarClient(RemoteOptions options) : options_(std::move(options)) {
    if (options_.endpoint.empty()) throw std::invalid_argument("remote backend needs an endpoint");
}

nlohmann::json SidecarClient::post(const std::string& path, const nlohmann::json& body) const {
    return request("POST", path, &body);
}

nlohmann::json SidecarClient::get(const std::string& path) const {
    return request("GET", path, nullptr);
}

nlohmann::json SidecarClient::request(const std::string& method, const std::string& path,
                                      const nlohmann::json* body) const {
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - seconds);
    const std::string payload = body ? body->dump() : std::string();

    for (int attempt = 0;; ++attempt) {
        // httplib::Client is not thread-safe; one per request.
        httplib::Client client(options_.endpoint);
        client.set_connection_timeout(seconds.count(), micros.count());
        client.set_read_timeout(seconds.count(), micros.count());
        client.set_write_timeout(seconds.count(), micros.count());

        auto res = method == "POST" ? client.Post(path, payload, "application/json") : client.Get(path);
        bool retryable = false;
        std::string failure;
        if (!res) {
            auto err = res.error();
            if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout) {
                retryable = true;
                failure = "timeout";
            } else {
                throw BackendUnavailable("cannot reach " + options_.endpoint + path + ": " + httplib::to_string(err));
            }
        } else if (res->status >= 500) {
            retryable = true;
            failure = "status";
        } else if (res->status >= 400) {
            throw HttpError(res->status, res->body);
        } else {
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::parse_error& e) {
                throw ProtocolError("malformed JSON from " + path + ": " + e.what());
            }
        }

        if (!retryable || attempt >= options_.max_retries) {
            if (failure == "timeout") throw Timeout("request to " + options_.endpoint + path + " timed out");
            throw HttpError(res->status, res->body);
        }
        std::this_thread::sleep_for(options_.retry_backoff * (1 << attempt));
    }
}

RemoteBackend::RemoteBackend(SidecarClient client, std::string model_id)
    : client_(std::move(client)), model_id_(std::move(model_id)) {}

std::vector<NliScores> RemoteBackend::score_entailment(std::span<const NliQuery> batch) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& q : batch) pairs.push_back({{"premise", q.premise}, {"hypothesis", q.hypothesis}});
    auto res = client_.post("/v1/nli", {{"model", model_id_}, {"pairs", std::move(pairs)}});
    if (!res.is_array()) throw ProtocolError("/v1/nli response is not an array");
    std::vector<NliScores> out;
    out.reserve(res.size());
    try {
        for (const auto& t : res)
            out.push_back({t.at("entail").get<double>(), t.at("neutral").get<double>(), t.at("contradict").get<double>()});
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("malformed /v1/nli triple: ") + e.what());
    }
    check_nli_scores(out, batch.size());
    return out;
}

RemoteEmbedder::RemoteEmbedder(SidecarClient client, std::string model_id)
    : client_(std::move(client)), model_id_(std::move(model_id)) {}

std::vector<std::vector<double>> RemoteEmbedder::embed(std::span<const std::string> texts) {
    auto res = client_.post("/v1/embed", {{"model", model_id_}, {"texts", std::vector<std::string>(texts.begin(), texts.end())}});
    try {
        auto out = res.get<std::vector<std::vector<double>>>();
        if (out.size() != texts.size()) throw ProtocolError("/v1/embed returned the wrong number of vectors");
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("malformed /v1/embed response: ") + e.what());
    }
}

RemoteAcceptability::RemoteAcceptability(SidecarClient client, std::string model_id)
    : client_(std::move(client)), model_id_(std::move(model_id)) {}

std::vector<double> RemoteAcceptability::acceptability(std::span<const std::string> texts) {
    auto res = client_.post("/v1/acceptability",
                            {{"model", model_id_}, {"texts", std::vector<std::string>(texts.begin(), texts.end())}});
    std::vector<double> out;
    try {
        out = res.get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("malformed /v1/acceptability response: ") + e.what());
    }
    if (out.size() != texts.size()) throw ProtocolError("/v1/acceptability returned the wrong number of scores");
    for (double v : out)
        if (!(v >= 0.0 && v <= 1.0)) throw ProtocolError("/v1/acceptability score outside [0,1]");
    return out;
}

SidecarHealth check_health(const SidecarClient& client) {
    const auto j = client.get("/healthz");
    try {
        SidecarHealth h;
        h.status = j.at("status").get<std::string>();
        if (j.contains("models_loaded")) h.models_loaded = j.at("models_loaded").get<std::vector<std::string>>();
        return h;
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("malformed /healthz response: ") + e.what());
    }
}

nlohmann::json to_json(const AdaptRequest& request) {
    if (request.epochs && *request.epochs < 1) throw std::invalid_argument("adapt: epochs must be at least 1");
    if (request.learning_rate && !(*request.learning_rate > 0.0)) throw std::invalid_argument("adapt: lr must be positive");
    if (request.batch_size && *request.batch_size < 1) throw std::invalid_argument("adapt: batch_size must be at least 1");
    nlohmann::json j{{"model", request.model}, {"corpus_path", request.corpus_path}};
    if (request.epochs) j["epochs"] = *request.epochs;
    if (request.learning_rate) j["lr"] = *request.learning_rate;
    if (request.batch_size) j["batch_size"] = *request.batch_size;
    return j;
}

AdaptJob adapt_job_from_json(const nlohmann::json& j) {
    AdaptJob job;
    try {
        job.id = j.at("id").get<std::string>();
        job.base_model = j.at("model").get<std::string>();
        job.corpus_path = j.value("corpus_path", std::string());
        job.epochs = j.at("epochs").get<int>();
        job.learning_rate = j.at("lr").get<double>();
        job.batch_size = j.at("batch_size").get<int>();
        job.checkpoints = j.value("checkpoints", std::vector<std::string>{});
        job.status = j.at("status").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("malformed adapt job: ") + e.what());
    }
    if (job.epochs < 1) throw ProtocolError("adapt job reports epochs < 1");
    if (job.checkpoints.size() > static_cast<std::size_t>(job.epochs))
        throw ProtocolError("adapt job reports more checkpoints than epochs");
    return job;
}

AdaptJob submit_adapt(const SidecarClient& client, const AdaptRequest& request) {
    return adapt_job_from_json(client.post("/v1/adapt", to_json(request)));
}

AdaptJob adapt_status(const SidecarClient& client, const std::string& job_id) {
    return adapt_job_from_json(client.get("/v1/adapt/" + job_id));
}

} // namespace psygauge
