#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace few {

enum class VerifyScale { quick, full };

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;     // measured quantity
    double threshold = 0.0; // the bar it was held to
    std::string detail;
    double seconds = 0.0;
};

// Runs the invariant suite. Quick scale uses small randomized budgets and
// finishes in seconds; full scale runs the acceptance criteria A1..A9 at
// their stated budgets and tolerances.
std::vector<CheckResult> run_verification(VerifyScale scale, std::uint64_t seed);

bool all_passed(const std::vector<CheckResult>& results);
std::string verification_report_json(const std::vector<CheckResult>& results);
std::string verification_report_text(const std::vector<CheckResult>& results);

} // namespace few
