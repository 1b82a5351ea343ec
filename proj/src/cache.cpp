#include "psygauge/backend.hpp"
#include "psygauge/error.hpp"
#include "psygauge/hash.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

namespace psygauge {

namespace fs = std::filesystem;

CacheStore::CacheStore(fs::path root) : root_(std::move(root)) {}

std::string CacheStore::key(std::string_view model_id, std::string_view task, std::string_view premise,
                            std::string_view hypothesis) {
    std::string canonical;
    canonical.reserve(model_id.size() + task.size() + premise.size() + hypothesis.size() + 3);
    canonical.append(model_id).push_back('\x1f');
    canonical.append(task).push_back('\x1f');
    canonical.append(premise).push_back('\x1f');
    canonical.append(hypothesis);
    return sha256_hex(canonical);
}

fs::path CacheStore::path_for(const std::string& key) const {
    return root_ / key.substr(0, 2) / key.substr(2, 2) / (key + ".json");
}

void CacheStore::put(const CacheRecord& record) const {
    const auto key = CacheStore::key(record.model_id, record.task, record.premise, record.hypothesis);
    const auto target = path_for(key);
    nlohmann::ordered_json j{{"key", key},
                             {"model_id", record.model_id},
                             {"task", record.task},
                             {"premise", record.premise},
                             {"hypothesis", record.hypothesis},
                             {"value", record.value}};

    static std::atomic<std::uint64_t> counter{0};
    std::ostringstream tmp_name;
    tmp_name << key << ".tmp." << ::getpid() << '.' << std::hash<std::thread::id>{}(std::this_thread::get_id()) << '.'
             << counter.fetch_add(1);
    const auto tmp = target.parent_path() / tmp_name.str();

    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw IoError("cannot create cache directory " + target.parent_path().string() + ": " + ec.message());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write cache entry " + tmp.string());
        out << j.dump() << '\n';
        out.flush();
        if (!out) throw IoError("short write on cache entry " + tmp.string());
    }
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot commit cache entry " + target.string() + ": " + ec.message());
    }
}

std::optional<CacheRecord> CacheStore::get(std::string_view model_id, std::string_view task, std::string_view premise,
                                           std::string_view hypothesis) const {
    const auto key = CacheStore::key(model_id, task, premise, hypothesis);
    const auto path = path_for(key);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt cache entry " + path.string() + ": " + e.what());
    }
    CacheRecord rec;
    try {
        rec = {j.at("model_id").get<std::string>(), j.at("task").get<std::string>(),
               j.at("premise").get<std::string>(), j.at("hypothesis").get<std::string>(), j.at("value")};
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt cache entry " + path.string() + ": " + e.what());
    }
    if (rec.model_id != model_id || rec.task != task || rec.premise != premise || rec.hypothesis != hypothesis)
        throw IoError("cache entry " + path.string() + " does not match its key");
    return rec;
}

// --- cached providers ------------------------------------------------------------

namespace {

constexpr std::string_view kNliTask = "nli";
constexpr std::string_view kEmbedTask = "embed";
constexpr std::string_view kAcceptabilityTask = "acceptability";

NliScores nli_from_json(const nlohmann::ordered_json& v) {
    return {v.at("entail").get<double>(), v.at("neutral").get<double>(), v.at("contradict").get<double>()};
}

nlohmann::ordered_json nli_to_json(const NliScores& s) {
    return {{"entail", s.entail}, {"neutral", s.neutral}, {"contradict", s.contradict}};
}

// Shared miss-then-fill logic for single-text tasks.
template <typename Value, typename Fetch, typename FromJson, typename ToJson>
std::vector<Value> cached_texts(const CacheStore& store, const std::string& model_id, std::string_view task,
                                std::span<const std::string> texts, bool have_upstream, Fetch fetch,
                                FromJson from_json, ToJson to_json) {
    std::vector<Value> out(texts.size());
    std::vector<std::size_t> miss_idx;
    std::vector<std::string> miss_texts;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (auto rec = store.get(model_id, task, texts[i], "")) {
            out[i] = from_json(rec->value);
        } else {
            miss_idx.push_back(i);
            miss_texts.push_back(texts[i]);
        }
    }
    if (miss_idx.empty()) return out;
    if (!have_upstream) {
        throw CacheMiss(std::string(task) + " cache miss for " + std::to_string(miss_idx.size()) + " text(s), first: \"" +
                            miss_texts.front() + "\"",
                        miss_texts);
    }
    auto fetched = fetch(std::span<const std::string>(miss_texts));
    if (fetched.size() != miss_texts.size()) throw ProtocolError(std::string(task) + " response length mismatch");
    for (std::size_t k = 0; k < miss_idx.size(); ++k) {
        store.put({model_id, std::string(task), miss_texts[k], "", to_json(fetched[k])});
        out[miss_idx[k]] = std::move(fetched[k]);
    }
    return out;
}

} // namespace

CachedBackend::CachedBackend(std::shared_ptr<const CacheStore> store, std::string model_id,
                             std::unique_ptr<EntailmentBackend> upstream)
    : store_(std::move(store)), model_id_(std::move(model_id)), upstream_(std::move(upstream)) {}

std::vector<NliScores> CachedBackend::score_entailment(std::span<const NliQuery> batch) {
    std::vector<NliScores> out(batch.size());
    std::vector<std::size_t> miss_idx;
    std::vector<NliQuery> misses;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (auto rec = store_->get(model_id_, kNliTask, batch[i].premise, batch[i].hypothesis)) {
            try {
                out[i] = nli_from_json(rec->value);
            } catch (const nlohmann::json::exception& e) {
                throw IoError("malformed NLI cache value for " + batch[i].provenance() + ": " + e.what());
            }
        } else {
            miss_idx.push_back(i);
            misses.push_back(batch[i]);
        }
    }
    if (misses.empty()) return out;
    if (!upstream_) {
        std::vector<std::string> names;
        for (const auto& q : misses) names.push_back(q.provenance());
        std::string msg = "no cached NLI scores for model '" + model_id_ + "':";
        const std::size_t shown = std::min<std::size_t>(names.size(), 10);
        for (std::size_t k = 0; k < shown; ++k) msg += " " + names[k];
        if (names.size() > shown) msg += " (and " + std::to_string(names.size() - shown) + " more)";
        throw CacheMiss(msg, std::move(names));
    }
    auto fetched = upstream_->score_entailment(misses);
    check_nli_scores(fetched, misses.size());
    for (std::size_t k = 0; k < misses.size(); ++k) {
        store_->put({model_id_, std::string(kNliTask), misses[k].premise, misses[k].hypothesis, nli_to_json(fetched[k])});
        out[miss_idx[k]] = fetched[k];
    }
    return out;
}

CachedEmbedder::CachedEmbedder(std::shared_ptr<const CacheStore> store, std::string model_id,
                               std::unique_ptr<Embedder> upstream)
    : store_(std::move(store)), model_id_(std::move(model_id)), upstream_(std::move(upstream)) {}

std::vector<std::vector<double>> CachedEmbedder::embed(std::span<const std::string> texts) {
    return cached_texts<std::vector<double>>(
        *store_, model_id_, kEmbedTask, texts, upstream_ != nullptr,
        [&](std::span<const std::string> t) { return upstream_->embed(t); },
        [](const nlohmann::ordered_json& v) { return v.get<std::vector<double>>(); },
        [](const std::vector<double>& v) { return nlohmann::ordered_json(v); });
}

CachedAcceptability::CachedAcceptability(std::shared_ptr<const CacheStore> store, std::string model_id,
                                         std::unique_ptr<AcceptabilityScorer> upstream)
    : store_(std::move(store)), model_id_(std::move(model_id)), upstream_(std::move(upstream)) {}

std::vector<double> CachedAcceptability::acceptability(std::span<const std::string> texts) {
    return cached_texts<double>(
        *store_, model_id_, kAcceptabilityTask, texts, upstream_ != nullptr,
        [&](std::span<const std::string> t) { return upstream_->acceptability(t); },
        [](const nlohmann::ordered_json& v) { return v.get<double>(); },
        [](double v) { return nlohmann::ordered_json(v); });
}

} // namespace psygauge
