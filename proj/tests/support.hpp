#pragma once

#include "psygauge/questionnaire.hpp"
#include "psygauge/scoring.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

namespace testing {

inline std::filesystem::path source_path(const std::string& rel) {
    return std::filesystem::path(PSYGAUGE_SOURCE_DIR) / rel;
}

inline std::vector<std::filesystem::path> shipped_spec_paths() {
    return {source_path("specs/gad7.json"), source_path("specs/phq9.json"), source_path("specs/soc13.json")};
}

inline psygauge::SpecBundle shipped_bundle() {
    return psygauge::load_specs(shipped_spec_paths());
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("psygauge-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

// Matrix with `n_source` S+ rows named s0.. and the rest S- rows named i0...
inline psygauge::EntailmentMatrix make_matrix(const std::vector<std::vector<double>>& rows, std::size_t n_source) {
    psygauge::EntailmentMatrix m;
    m.question_id = "q";
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    m.values = psygauge::Matrix(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const bool src = r < n_source;
        m.cterms.push_back((src ? "s" : "i") + std::to_string(src ? r : r - n_source));
        m.classes.push_back(src ? psygauge::TermClass::source : psygauge::TermClass::inverse);
        for (std::size_t c = 0; c < cols; ++c) m.values(r, c) = rows[r][c];
    }
    for (std::size_t c = 0; c < cols; ++c) m.levels.push_back("l" + std::to_string(c));
    return m;
}

inline std::vector<std::vector<double>> random_rows(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                                                    double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<std::vector<double>> out(rows, std::vector<double>(cols));
    for (auto& r : out)
        for (auto& v : r) v = u(rng);
    return out;
}

} // namespace testing
