#pragma once

#include "psygauge/scoring.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace psygauge {

inline constexpr std::string_view kVersion = "0.1.0";

namespace cli {

// Exit codes: 0 success, 1 domain failure, 2 usage or parse failure.
enum ExitCode : int { kOk = 0, kDomainFailure = 1, kUsageFailure = 2 };

// Runs the psygauge command line; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Every assessment record (*.json except manifest.json) below `dir`, in path order.
std::vector<AssessmentRecord> load_records(const std::filesystem::path& dir);

// Model ids may contain '/'; map them to a single path component.
std::string model_dir_name(std::string_view model_id);

} // namespace cli
} // namespace psygauge
