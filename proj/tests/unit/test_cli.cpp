#include "psygauge/cli.hpp"
#include "psygauge/scoring.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <sstream>

using namespace psygauge;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> spec_args() {
    std::vector<std::string> a;
    for (const auto& p : testing::shipped_spec_paths()) {
        a.push_back("--spec");
        a.push_back(p.string());
    }
    return a;
}

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::string fixture_spec() { return testing::source_path("tests/fixtures/soc_q3.json").string(); }
std::string fixture_cache() { return testing::source_path("tests/fixtures/cache").string(); }

} // namespace

TEST_CASE("validate-spec exit codes") {
    auto r = run(cat({"validate-spec"}, {testing::shipped_spec_paths()[0].string(), testing::shipped_spec_paths()[2].string()}));
    CHECK(r.code == 0);
    CHECK(r.out.find("0 error(s)") != std::string::npos);

    testing::TempDir dir;
    auto doc = nlohmann::ordered_json::parse(testing::slurp(fixture_spec()));
    doc["questionnaires"][0]["questions"][0]["inverse_terms"].push_back("failed");
    std::ofstream(dir / "bad.json") << doc.dump(2);
    r = run({"validate-spec", (dir / "bad.json").string()});
    CHECK(r.code == 1);
    CHECK(r.out.find("error term-disjointness soc-q3/soc-q3") != std::string::npos);

    std::ofstream(dir / "broken.json") << "{\"schema_version\": 1,";
    CHECK(run({"validate-spec", (dir / "broken.json").string()}).code == 2);
    CHECK(run({"validate-spec", (dir / "missing.json").string()}).code == 2);
    CHECK(run({"validate-spec"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"--help"}).code == 0);

    r = run({"validate-spec", fixture_spec(), "--acceptability", "--la-backend", "mock", "--la-constant", "0.2"});
    CHECK(r.code == 0);
    CHECK(r.out.find("warning linguistic-acceptability") != std::string::npos);
    CHECK(run({"validate-spec", fixture_spec(), "--acceptability"}).code == 1);  // no provider
}

TEST_CASE("generate-prompts writes JSON Lines and refuses to overwrite") {
    testing::TempDir dir;
    const auto target = (dir / "prompts.jsonl").string();
    auto r = run(cat(cat({"generate-prompts"}, spec_args()), {"--out", target}));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("gad7\tP+=192\tP-=208\n") != std::string::npos);
    CHECK(r.out.find("phq9\tP+=208\tP-=192\n") != std::string::npos);
    CHECK(r.out.find("soc13\tP+=288\tP-=320\n") != std::string::npos);
    CHECK(r.out.find("total\t1408\n") != std::string::npos);
    const auto text = testing::slurp(target);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1408);

    std::ofstream(target) << "keep";
    r = run(cat(cat({"generate-prompts"}, spec_args()), {"--out", target}));
    CHECK(r.code == 1);
    CHECK(testing::slurp(target) == "keep");
    CHECK(run(cat(cat({"generate-prompts"}, spec_args()), {"--out", target, "--force"})).code == 0);
}

TEST_CASE("assess with a mock persona") {
    testing::TempDir dir;
    auto r = run(cat(cat({"assess"}, spec_args()), {"--backend", "mock", "--model", "flat", "--noise", "0", "--out",
                                                   (dir / "run").string()}));
    REQUIRE(r.code == 0);
    for (const char* qid : {"gad7", "phq9", "soc13"}) {
        const auto rec = record_from_json(nlohmann::ordered_json::parse(testing::slurp(dir / ("run/flat/" + std::string(qid) + ".json"))));
        CHECK(rec.total == doctest::Approx(0.5625).epsilon(1e-14));
    }
    const auto manifest = nlohmann::json::parse(testing::slurp(dir / "run/manifest.json"));
    CHECK(manifest["status"] == "complete");
    CHECK(manifest["specs"].size() == 3);
    CHECK(manifest["specs"][0]["sha256"].get<std::string>().size() == 64);
    CHECK(manifest["software_version"] == std::string(kVersion));
    CHECK(manifest.contains("created_at"));
    CHECK(manifest["records"].size() == 3);

    // a second run into the same directory needs --force
    CHECK(run(cat(cat({"assess"}, spec_args()), {"--model", "flat", "--out", (dir / "run").string()})).code == 1);
    r = run(cat(cat({"assess"}, spec_args()), {"--model", "org/model", "--bias", "anxiety=0.5", "--out",
                                              (dir / "run").string(), "--force"}));
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "run/org_model/gad7.json"));
    CHECK(run(cat(cat({"assess"}, spec_args()), {"--bias", "anxiety=3", "--model", "x", "--out", (dir / "x").string()})).code == 2);
    CHECK(run(cat(cat({"assess"}, spec_args()), {"--out", (dir / "y").string()})).code == 2);  // no model
    CHECK(run(cat(cat({"assess"}, spec_args()), {"--model", "x", "--concurrency", "0", "--out", (dir / "z").string()})).code == 2);
}

TEST_CASE("offline assess is byte-identical across runs and concurrency") {
    testing::TempDir dir;
    std::vector<std::string> outputs;
    for (const char* conc : {"1", "8", "1", "8"}) {
        const auto out = dir / ("run" + std::to_string(outputs.size()));
        auto r = run({"assess", "--spec", fixture_spec(), "--backend", "cache", "--model", "fixture-nli", "--cache-dir",
                      fixture_cache(), "--offline", "--concurrency", conc, "--batch-size", "3", "--out", out.string()});
        REQUIRE(r.code == 0);
        outputs.push_back(testing::slurp(out / "fixture-nli/soc-q3.json"));
    }
    for (const auto& o : outputs) CHECK(o == outputs[0]);
    const auto expected = nlohmann::json::parse(testing::slurp(testing::source_path("tests/fixtures/soc_q3_expected.json")));
    CHECK(nlohmann::json::parse(outputs[0])["total"].get<double>() == expected["total"].get<double>());
}

TEST_CASE("offline misses fail with CacheMiss") {
    testing::TempDir dir;
    auto r = run({"assess", "--spec", fixture_spec(), "--model", "unknown", "--cache-dir", (dir / "cache").string(),
                  "--offline", "--out", (dir / "run").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("CacheMiss") != std::string::npos);
    CHECK(r.err.find("soc-q3/disappointed/never") != std::string::npos);
    const auto manifest = nlohmann::json::parse(testing::slurp(dir / "run/manifest.json"));
    CHECK(manifest["status"] == "failed");
    CHECK(manifest["failure"]["model_id"] == "unknown");
}

TEST_CASE("cache directory from the environment") {
    testing::TempDir dir;
    ::setenv("PSYGAUGE_CACHE_DIR", fixture_cache().c_str(), 1);
    auto r = run({"assess", "--spec", fixture_spec(), "--backend", "cache", "--model", "fixture-nli", "--out",
                  (dir / "run").string()});
    ::unsetenv("PSYGAUGE_CACHE_DIR");
    CHECK(r.code == 0);
}

TEST_CASE("population report and intervention comparison") {
    testing::TempDir dir;
    const auto t0 = (dir / "t0").string(), t1 = (dir / "t1").string();
    REQUIRE(run(cat(cat({"assess"}, spec_args()), {"--personas", "30", "--seed", "7", "--out", t0})).code == 0);

    auto r = run({"population-report", "--records", t0, "--out", (dir / "pop").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("models\t30\n") != std::string::npos);
    CHECK(r.out.find("sign_pattern\ttrue") != std::string::npos);
    const auto report = nlohmann::json::parse(testing::slurp(dir / "pop/report.json"));
    CHECK(report["construct_validity"]["sign_checks"]["pattern_holds"] == true);
    CHECK(report["cronbach_alpha"]["gad7"].is_number());
    const auto lng = testing::slurp(dir / "pop/population_long.csv");
    CHECK(lng.rfind("model,scale,score,z\n", 0) == 0);
    CHECK(std::count(lng.begin(), lng.end(), '\n') == 1 + 30 * 6);

    r = run({"intervention-compare", "--t0", t0, "--t1", t0, "--out", (dir / "same").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find(",ZeroVariance") != std::string::npos);

    REQUIRE(run(cat(cat({"assess"}, spec_args()), {"--personas", "3", "--seed", "7", "--out", t1})).code == 0);
    r = run({"intervention-compare", "--t0", t0, "--t1", t1, "--out", (dir / "mismatch").string()});
    CHECK(r.code == 1);

    r = run({"validate", "--spec", testing::shipped_spec_paths()[1].string(), "--records", t0, "--embed-backend", "mock",
             "--la-backend", "mock", "--la-constant", "0.88", "--out", (dir / "val").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("phq9,208,192,") != std::string::npos);
    CHECK(fs::exists(dir / "val/validation.json"));
}

TEST_CASE("population report needs at least two models") {
    testing::TempDir dir;
    REQUIRE(run(cat(cat({"assess"}, spec_args()), {"--model", "solo", "--out", (dir / "r").string()})).code == 0);
    auto r = run({"population-report", "--records", (dir / "r").string(), "--out", (dir / "p").string()});
    CHECK(r.code == 1);
}

TEST_CASE("constant columns are reported as warnings") {
    testing::TempDir dir;
    const auto recs = (dir / "r").string();
    for (const char* m : {"a", "b", "c"})
        REQUIRE(run(cat(cat({"assess"}, spec_args()), {"--model", m, "--noise", "0", "--out", recs, "--force"})).code == 0);
    auto r = run({"population-report", "--records", recs, "--out", (dir / "p").string()});
    CHECK(r.code == 0);
    CHECK(r.err.find("zero variance in column 'gad7'") != std::string::npos);
    const auto z = testing::slurp(dir / "p/population_z.csv");
    CHECK(z.find("a,0,0,0,0,0,0\n") != std::string::npos);
}

TEST_CASE("model directory names") {
    CHECK(cli::model_dir_name("microsoft/deberta-large-mnli") == "microsoft_deberta-large-mnli");
    CHECK(cli::model_dir_name("..") == "_..");
    CHECK(cli::model_dir_name("a b") == "a_b");
}
