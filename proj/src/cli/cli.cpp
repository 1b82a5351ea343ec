#include "psygauge/cli.hpp"

#include "psygauge/backend.hpp"
#include "psygauge/error.hpp"
#include "psygauge/format.hpp"
#include "psygauge/hash.hpp"
#include "psygauge/prompt.hpp"
#include "psygauge/psychometrics.hpp"
#include "psygauge/questionnaire.hpp"
#include "psygauge/scoring.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

namespace psygauge::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct Thresholds {
    double ss_min = 0.5;
    double sc_min = 0.6;
    double la_flag = 0.5;
};

struct RunConfig {
    std::vector<std::string> spec_paths;
    std::string backend = "mock";
    std::vector<std::string> models;
    std::string endpoint;
    std::string cache_dir;
    bool offline = false;
    std::size_t concurrency = 1;
    std::size_t batch_size = 32;
    int timeout_ms = 60000;
    std::string out;
    bool force = false;
    Thresholds thresholds;

    // mock population / persona
    std::size_t personas = 0;
    std::uint64_t seed = 0;
    std::vector<double> loadings{1.0, 1.0, -1.0};
    double noise = 0.05;
    double spread = 0.35;
    std::vector<std::string> biases;  // construct=beta

    // content-validity providers
    std::string embed_backend;  // "", mock, remote, cache
    std::string embed_model = "embedder";
    std::string la_backend;
    std::string la_model = "acceptability";
    double la_constant = 1.0;

    void validate() const {
        if (concurrency < 1) throw std::invalid_argument("--concurrency must be at least 1");
        if (batch_size < 1) throw std::invalid_argument("--batch-size must be at least 1");
        if (thresholds.ss_min < -1.0 || thresholds.ss_min > 1.0) throw std::invalid_argument("--ss-min must lie in [-1,1]");
        if (thresholds.sc_min < -1.0 || thresholds.sc_min > 1.0) throw std::invalid_argument("--sc-min must lie in [-1,1]");
        if (thresholds.la_flag < 0.0 || thresholds.la_flag > 1.0) throw std::invalid_argument("--la-threshold must lie in [0,1]");
    }
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << content;
    if (!out) throw IoError("short write on " + p.string());
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

ojson spec_hashes(const std::vector<std::string>& paths) {
    ojson arr = ojson::array();
    for (const auto& p : paths) arr.push_back({{"path", p}, {"sha256", sha256_hex(read_file(p))}});
    return arr;
}

std::vector<fs::path> to_paths(const std::vector<std::string>& v) {
    return {v.begin(), v.end()};
}

void add_spec_option(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--spec", cfg.spec_paths, "Questionnaire spec file (repeatable)")->required()->check(CLI::ExistingFile);
}

void add_backend_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--backend", cfg.backend, "Entailment backend: mock, cache or remote")
        ->check(CLI::IsMember({"mock", "cache", "remote"}));
    sub->add_option("--model", cfg.models, "Model id (repeatable)");
    sub->add_option("--endpoint", cfg.endpoint, "Inference sidecar URL, e.g. http://127.0.0.1:8000");
    sub->add_option("--cache-dir", cfg.cache_dir, "Response cache directory")->envname("PSYGAUGE_CACHE_DIR");
    sub->add_flag("--offline", cfg.offline, "Serve only from the cache; misses are errors");
    sub->add_option("--concurrency", cfg.concurrency, "Backend batches in flight");
    sub->add_option("--batch-size", cfg.batch_size, "Queries per backend request");
    sub->add_option("--timeout-ms", cfg.timeout_ms, "Remote request timeout");
    sub->add_option("--personas", cfg.personas, "Mock: spawn a population of this many personas");
    sub->add_option("--seed", cfg.seed, "Mock: population seed");
    sub->add_option("--loadings", cfg.loadings, "Mock: latent loadings for anxiety,depression,coherence")
        ->delimiter(',')
        ->expected(3);
    sub->add_option("--noise", cfg.noise, "Mock: per-query logit noise sd");
    sub->add_option("--spread", cfg.spread, "Mock: construct-specific bias spread");
    sub->add_option("--bias", cfg.biases, "Mock: construct=beta for a single persona (repeatable)");
}

void add_output_options(CLI::App* sub, RunConfig& cfg, bool required = true) {
    auto* o = sub->add_option("--out", cfg.out, "Output location");
    if (required) o->required();
    sub->add_flag("--force", cfg.force, "Overwrite existing output");
}

void add_provider_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--embed-backend", cfg.embed_backend, "Embedding provider: mock, cache or remote")
        ->check(CLI::IsMember({"mock", "cache", "remote"}));
    sub->add_option("--embed-model", cfg.embed_model, "Embedding model id");
    sub->add_option("--la-backend", cfg.la_backend, "Acceptability provider: mock, cache or remote")
        ->check(CLI::IsMember({"mock", "cache", "remote"}));
    sub->add_option("--la-model", cfg.la_model, "Acceptability model id");
    sub->add_option("--la-constant", cfg.la_constant, "Mock acceptability score");
    sub->add_option("--la-threshold", cfg.thresholds.la_flag, "Flag prompts below this acceptability");
    sub->add_option("--ss-min", cfg.thresholds.ss_min, "Minimum semantic similarity per question");
    sub->add_option("--sc-min", cfg.thresholds.sc_min, "Minimum silhouette per question");
}

RemoteOptions remote_options(const RunConfig& cfg) {
    return {cfg.endpoint, std::chrono::milliseconds(cfg.timeout_ms), 3, std::chrono::milliseconds(200)};
}

std::shared_ptr<const CacheStore> cache_store(const RunConfig& cfg) {
    if (cfg.cache_dir.empty()) return nullptr;
    return std::make_shared<CacheStore>(cfg.cache_dir);
}

std::unique_ptr<Embedder> make_embedder(const RunConfig& cfg) {
    if (cfg.embed_backend.empty()) return nullptr;
    if (cfg.embed_backend == "mock") return std::make_unique<HashingEmbedder>();
    auto store = cache_store(cfg);
    std::unique_ptr<Embedder> upstream;
    if (cfg.embed_backend == "remote" && !cfg.offline)
        upstream = std::make_unique<RemoteEmbedder>(SidecarClient(remote_options(cfg)), cfg.embed_model);
    if (!store) {
        if (!upstream) throw std::invalid_argument("cache embedding provider needs --cache-dir");
        return upstream;
    }
    return std::make_unique<CachedEmbedder>(store, cfg.embed_model, std::move(upstream));
}

std::unique_ptr<AcceptabilityScorer> make_scorer(const RunConfig& cfg) {
    if (cfg.la_backend.empty()) return nullptr;
    if (cfg.la_backend == "mock") {
        const double v = cfg.la_constant;
        return std::make_unique<FunctionAcceptability>([v](const std::string&) { return v; });
    }
    auto store = cache_store(cfg);
    std::unique_ptr<AcceptabilityScorer> upstream;
    if (cfg.la_backend == "remote" && !cfg.offline)
        upstream = std::make_unique<RemoteAcceptability>(SidecarClient(remote_options(cfg)), cfg.la_model);
    if (!store) {
        if (!upstream) throw std::invalid_argument("cache acceptability provider needs --cache-dir");
        return upstream;
    }
    return std::make_unique<CachedAcceptability>(store, cfg.la_model, std::move(upstream));
}

std::vector<BackendDescriptor> descriptors(const RunConfig& cfg) {
    BackendDescriptor base;
    base.kind = parse_backend_kind(cfg.backend);
    base.endpoint = cfg.endpoint;
    base.cache_dir = cfg.cache_dir;
    base.timeout = std::chrono::milliseconds(cfg.timeout_ms);
    base.batch_size = cfg.batch_size;
    if (cfg.offline) {
        if (cfg.cache_dir.empty()) throw std::invalid_argument("--offline needs --cache-dir");
        base.kind = BackendKind::cache;
    }

    std::vector<BackendDescriptor> out;
    if (cfg.backend == "mock" && !cfg.offline && cfg.personas > 0) {
        if (!cfg.models.empty() || !cfg.biases.empty())
            throw std::invalid_argument("--personas cannot be combined with --model or --bias");
        PopulationOptions popts;
        popts.noise_sd = cfg.noise;
        popts.idiosyncratic_sd = cfg.spread;
        Loadings l{cfg.loadings.at(0), cfg.loadings.at(1), cfg.loadings.at(2)};
        for (auto& p : spawn_mock_population(cfg.personas, l, cfg.seed, popts)) {
            auto d = base;
            d.model_id = p.model_id;
            d.persona = std::move(p);
            out.push_back(std::move(d));
        }
        return out;
    }
    if (cfg.backend == "mock" && cfg.personas > 0 && cfg.offline) {
        // Offline replay of a mock population: the ids are all that matter.
        for (const auto& p : spawn_mock_population(cfg.personas, {}, cfg.seed)) {
            auto d = base;
            d.model_id = p.model_id;
            out.push_back(std::move(d));
        }
        return out;
    }
    if (cfg.models.empty()) throw std::invalid_argument("at least one --model is required");
    for (const auto& id : cfg.models) {
        auto d = base;
        d.model_id = id;
        if (d.kind == BackendKind::mock) {
            MockPersona p;
            p.model_id = id;
            p.noise_sd = cfg.noise;
            p.seed = cfg.seed ^ fnv1a64(id);
            for (const auto& b : cfg.biases) {
                const auto eq = b.find('=');
                if (eq == std::string::npos) throw std::invalid_argument("--bias expects construct=beta, got '" + b + "'");
                const double beta = std::stod(b.substr(eq + 1));
                if (beta < -1.0 || beta > 1.0) throw std::invalid_argument("--bias beta must lie in [-1,1]");
                p.bias[b.substr(0, eq)] = beta;
            }
            d.persona = std::move(p);
        }
        out.push_back(std::move(d));
    }
    return out;
}

void print_finding(std::ostream& out, const LintFinding& f) {
    out << to_string(f.severity) << ' ' << f.rule << ' ' << (f.questionnaire_id.empty() ? "-" : f.questionnaire_id) << '/'
        << (f.question_id.empty() ? "-" : f.question_id) << ": " << f.message << '\n';
}

// --- subcommands ----------------------------------------------------------------

int cmd_validate_spec(const std::vector<std::string>& paths, RunConfig& cfg, bool acceptability, std::ostream& out) {
    auto scorer = make_scorer(cfg);
    LintOptions opts{acceptability, cfg.thresholds.la_flag};
    std::size_t errors = 0, warnings = 0;
    for (const auto& p : paths) {
        const auto bundle = decode_spec(read_file(p));
        const auto findings = lint_spec(bundle, scorer.get(), opts);
        for (const auto& f : findings) {
            print_finding(out, f);
            (f.severity == Severity::error ? errors : warnings)++;
        }
        out << p << ": " << (std::count_if(findings.begin(), findings.end(),
                                           [](const auto& f) { return f.severity == Severity::error; }) == 0
                                 ? "ok"
                                 : "invalid")
            << '\n';
    }
    out << errors << " error(s), " << warnings << " warning(s)\n";
    return errors == 0 ? kOk : kDomainFailure;
}

int cmd_generate_prompts(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto bundle = load_specs(to_paths(cfg.spec_paths));
    const fs::path target = cfg.out;
    if (fs::exists(target) && !cfg.force) {
        err << "refusing to overwrite " << target.string() << " (use --force)\n";
        return kDomainFailure;
    }
    std::ostringstream lines;
    std::size_t total = 0;
    for (const auto& qn : bundle.questionnaires) {
        for (const auto& q : expand(qn, bundle)) {
            lines << to_json(q).dump() << '\n';
            ++total;
        }
    }
    write_file(target, lines.str());
    for (const auto& qn : bundle.questionnaires) {
        const auto c = count_prompts(qn, bundle);
        out << c.id << "\tP+=" << c.source_count << "\tP-=" << c.inverse_count << '\n';
        for (const auto& s : count_subscale_prompts(qn, bundle))
            out << s.id << "\tP+=" << s.source_count << "\tP-=" << s.inverse_count << '\n';
    }
    out << "total\t" << total << '\n';
    return kOk;
}

struct AssessRun {
    std::vector<AssessmentRecord> records;
    ojson manifest;
};

// Assesses every (model, questionnaire); on failure the records produced so far
// are returned together with the error.
AssessRun run_assessments(const RunConfig& cfg, const SpecBundle& bundle, std::exception_ptr& failure) {
    AssessRun run;
    run.manifest["software_version"] = std::string(kVersion);
    run.manifest["created_at"] = utc_now();
    run.manifest["specs"] = spec_hashes(cfg.spec_paths);
    run.manifest["concurrency"] = cfg.concurrency;
    run.manifest["batch_size"] = cfg.batch_size;
    run.manifest["offline"] = cfg.offline;
    run.manifest["backends"] = ojson::array();
    run.manifest["records"] = ojson::array();

    AssessOptions opts;
    opts.batch_size = cfg.batch_size;
    opts.concurrency = cfg.concurrency;
    try {
        for (const auto& d : descriptors(cfg)) {
            run.manifest["backends"].push_back(d.to_json());
            auto backend = make_backend(d, bundle);
            for (const auto& qn : bundle.questionnaires) {
                try {
                    auto rec = assess(*backend, qn, bundle, opts);
                    rec.timestamp = utc_now();
                    run.manifest["records"].push_back({{"model_id", rec.model_id},
                                                       {"questionnaire_id", rec.questionnaire_id},
                                                       {"path", model_dir_name(rec.model_id) + "/" + rec.questionnaire_id + ".json"},
                                                       {"timestamp", rec.timestamp}});
                    run.records.push_back(std::move(rec));
                } catch (const Error& e) {
                    run.manifest["failure"] = {{"model_id", d.model_id}, {"questionnaire_id", qn.id}, {"error", e.what()}};
                    throw;
                }
            }
        }
        run.manifest["status"] = "complete";
    } catch (...) {
        run.manifest["status"] = "failed";
        failure = std::current_exception();
    }
    return run;
}

int cmd_assess(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto bundle = load_specs(to_paths(cfg.spec_paths));
    const fs::path dir = cfg.out;
    if (fs::exists(dir / "manifest.json") && !cfg.force) {
        err << "refusing to overwrite assessment in " << dir.string() << " (use --force)\n";
        return kDomainFailure;
    }
    std::exception_ptr failure;
    auto run = run_assessments(cfg, bundle, failure);
    for (const auto& rec : run.records) {
        write_file(dir / model_dir_name(rec.model_id) / (rec.questionnaire_id + ".json"), to_json(rec).dump(2) + "\n");
        out << rec.model_id << '\t' << rec.questionnaire_id << '\t' << format_double(rec.total) << '\n';
    }
    write_file(dir / "manifest.json", run.manifest.dump(2) + "\n");
    if (failure) std::rethrow_exception(failure);
    return kOk;
}

int cmd_validate(const RunConfig& cfg, const std::string& records_dir, std::ostream& out, std::ostream& err) {
    const auto bundle = load_specs(to_paths(cfg.spec_paths));
    std::vector<AssessmentRecord> records;
    ojson manifest;
    if (!records_dir.empty()) {
        records = load_records(records_dir);
    } else {
        std::exception_ptr failure;
        auto run = run_assessments(cfg, bundle, failure);
        if (failure) std::rethrow_exception(failure);
        records = std::move(run.records);
        manifest = std::move(run.manifest);
    }
    auto embedder = make_embedder(cfg);
    auto scorer = make_scorer(cfg);
    const auto report =
        build_validation_report(bundle, records, embedder.get(), scorer.get(), {cfg.thresholds.ss_min, cfg.thresholds.sc_min});

    const fs::path dir = cfg.out;
    write_file(dir / "validation.json", to_json(report).dump(2) + "\n");
    write_file(dir / "validation.csv", to_table_csv(report));
    if (!manifest.is_null()) write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    out << to_table_csv(report);
    for (const auto& w : report.warnings) err << "warning: " << w << '\n';
    return kOk;
}

int cmd_population_report(const std::string& records_dir, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto records = load_records(records_dir);
    auto table = z_normalize(PopulationTable::from_records(records));
    ojson report;
    report["models"] = table.models.size();
    report["warnings"] = ojson::array();
    for (const auto& c : table.degenerate_columns)
        report["warnings"].push_back("zero variance in column '" + c + "'; z-scores set to 0");

    std::map<std::string, std::string> by_construct;
    std::vector<std::string> questionnaires;
    for (const auto& r : records) {
        by_construct.emplace(r.construct, r.questionnaire_id);
        if (std::find(questionnaires.begin(), questionnaires.end(), r.questionnaire_id) == questionnaires.end())
            questionnaires.push_back(r.questionnaire_id);
    }
    std::sort(questionnaires.begin(), questionnaires.end());

    report["cronbach_alpha"] = ojson::object();
    for (const auto& qid : questionnaires) {
        try {
            report["cronbach_alpha"][qid] = stats::cronbach_alpha(item_matrix(records, qid, {}));
        } catch (const DegenerateVariance& e) {
            report["cronbach_alpha"][qid] = nullptr;
            report["warnings"].push_back(qid + ": " + e.what());
        }
    }

    const auto find = [&](std::string_view c) -> std::optional<std::string> {
        auto it = by_construct.find(std::string(c));
        if (it == by_construct.end()) return std::nullopt;
        return it->second;
    };
    auto anx = find(kAnxiety), dep = find(kDepression), coh = find(kCoherence);
    if (anx && dep && coh) {
        try {
            report["construct_validity"] = to_json(construct_report(table, {*anx, *dep, *coh}));
        } catch (const DegenerateInput& e) {
            report["construct_validity"] = nullptr;
            report["warnings"].push_back(std::string("construct correlations unavailable: ") + e.what());
        }
    } else {
        report["construct_validity"] = nullptr;
        report["warnings"].push_back("construct correlations need anxiety, depression and sense-of-coherence records");
    }

    const fs::path dir = cfg.out;
    write_file(dir / "population.csv", to_wide_csv(table));
    write_file(dir / "population_z.csv", to_wide_csv(table, true));
    write_file(dir / "population_long.csv", to_long_csv(table));
    write_file(dir / "population.json", to_json(table).dump(2) + "\n");
    write_file(dir / "report.json", report.dump(2) + "\n");

    out << "models\t" << table.models.size() << '\n';
    for (const auto& [qid, a] : report["cronbach_alpha"].items())
        out << "alpha\t" << qid << '\t' << (a.is_null() ? std::string("n/a") : format_double(a.get<double>())) << '\n';
    if (!report["construct_validity"].is_null()) {
        for (const auto& p : report["construct_validity"]["pairs"])
            out << "r\t" << p["x"].get<std::string>() << '\t' << p["y"].get<std::string>() << "\tpearson="
                << format_double(p["pearson"]["r"].get<double>()) << "\tspearman="
                << format_double(p["spearman"]["r"].get<double>()) << '\n';
        out << "sign_pattern\t" << (report["construct_validity"]["sign_checks"]["pattern_holds"].get<bool>() ? "true" : "false")
            << '\n';
    }
    for (const auto& w : report["warnings"]) err << "warning: " << w.get<std::string>() << '\n';
    return kOk;
}

int cmd_intervention_compare(const std::string& t0_dir, const std::string& t1_dir, const std::string& label,
                             const RunConfig& cfg, std::ostream& out) {
    const auto t0 = load_records(t0_dir);
    const auto t1 = load_records(t1_dir);
    const auto comparisons = compare_interventions(t0, t1);
    ojson j = ojson::array();
    for (const auto& c : comparisons) j.push_back(to_json(c));
    const fs::path dir = cfg.out;
    const auto table = to_table_csv(comparisons, label);
    write_file(dir / "intervention.csv", table);
    write_file(dir / "intervention.json", ojson{{"intervention", label}, {"scales", j}}.dump(2) + "\n");
    out << table;
    return kOk;
}

} // namespace

std::string model_dir_name(std::string_view model_id) {
    std::string out(model_id);
    for (char& c : out)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_')) c = '_';
    if (out.empty() || out == "." || out == "..") out = "_" + out;
    return out;
}

std::vector<AssessmentRecord> load_records(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json" && e.path().filename() != "manifest.json")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<AssessmentRecord> out;
    for (const auto& f : files) {
        ojson j;
        try {
            j = ojson::parse(read_file(f));
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError(f.string() + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("questionnaire_id")) continue;  // not a record
        out.push_back(record_from_json(j));
    }
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Psychometric assessment of NLI models", "psygauge"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    RunConfig cfg;
    std::vector<std::string> lint_paths;
    bool lint_acceptability = false;
    std::string records_dir, t0_dir, t1_dir, label = "intervention";

    auto* validate_spec_cmd = app.add_subcommand("validate-spec", "Parse and lint questionnaire specs");
    validate_spec_cmd->add_option("paths", lint_paths, "Spec files")->required()->check(CLI::ExistingFile);
    validate_spec_cmd->add_flag("--acceptability", lint_acceptability, "Score every expanded prompt for acceptability");
    validate_spec_cmd->add_option("--endpoint", cfg.endpoint, "Inference sidecar URL");
    validate_spec_cmd->add_option("--cache-dir", cfg.cache_dir, "Response cache directory")->envname("PSYGAUGE_CACHE_DIR");
    validate_spec_cmd->add_flag("--offline", cfg.offline, "Serve only from the cache");
    validate_spec_cmd->add_option("--la-backend", cfg.la_backend, "Acceptability provider: mock, cache or remote")
        ->check(CLI::IsMember({"mock", "cache", "remote"}));
    validate_spec_cmd->add_option("--la-model", cfg.la_model, "Acceptability model id");
    validate_spec_cmd->add_option("--la-constant", cfg.la_constant, "Mock acceptability score");
    validate_spec_cmd->add_option("--la-threshold", cfg.thresholds.la_flag, "Flag prompts below this acceptability");

    auto* generate_cmd = app.add_subcommand("generate-prompts", "Expand specs into NLI queries (JSON Lines)");
    add_spec_option(generate_cmd, cfg);
    add_output_options(generate_cmd, cfg);

    auto* assess_cmd = app.add_subcommand("assess", "Score questionnaires against one or more models");
    add_spec_option(assess_cmd, cfg);
    add_backend_options(assess_cmd, cfg);
    add_output_options(assess_cmd, cfg);

    auto* validate_cmd = app.add_subcommand("validate", "Psychometric validation report (SS, LA, SC, alpha)");
    add_spec_option(validate_cmd, cfg);
    add_backend_options(validate_cmd, cfg);
    add_provider_options(validate_cmd, cfg);
    add_output_options(validate_cmd, cfg);
    validate_cmd->add_option("--records", records_dir, "Use existing assessment records instead of assessing")
        ->check(CLI::ExistingDirectory);

    auto* population_cmd = app.add_subcommand("population-report", "Population table, z-scores, correlations, alpha");
    population_cmd->add_option("--records", records_dir, "Directory of assessment records")
        ->required()
        ->check(CLI::ExistingDirectory);
    add_output_options(population_cmd, cfg);

    auto* intervention_cmd = app.add_subcommand("intervention-compare", "Paired t-tests between two assessment runs");
    intervention_cmd->add_option("--t0", t0_dir, "Records before the intervention")->required()->check(CLI::ExistingDirectory);
    intervention_cmd->add_option("--t1", t1_dir, "Records after the intervention")->required()->check(CLI::ExistingDirectory);
    intervention_cmd->add_option("--label", label, "Intervention name for the report");
    add_output_options(intervention_cmd, cfg);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageFailure;
    }

    try {
        cfg.validate();
        if (*validate_spec_cmd) return cmd_validate_spec(lint_paths, cfg, lint_acceptability, out);
        if (*generate_cmd) return cmd_generate_prompts(cfg, out, err);
        if (*assess_cmd) return cmd_assess(cfg, out, err);
        if (*validate_cmd) return cmd_validate(cfg, records_dir, out, err);
        if (*population_cmd) return cmd_population_report(records_dir, cfg, out, err);
        if (*intervention_cmd) return cmd_intervention_compare(t0_dir, t1_dir, label, cfg, out);
    } catch (const SchemaError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageFailure;
    } catch (const ValidationError& e) {
        err << "error: invalid spec: " << e.what() << '\n';
        return kUsageFailure;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsageFailure;
    } catch (const CacheMiss& e) {
        err << "error: CacheMiss: " << e.what() << '\n';
        return kDomainFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kDomainFailure;
    }
    return kUsageFailure;
}

} // namespace psygauge::cli
