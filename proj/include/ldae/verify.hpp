#pragma once

#include "ldae/risk.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace ldae {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

enum class VerifyLevel { FAST, FULL };

using TheoryFn = std::function<RiskBreakdown(const DataEnsemble&, const IndexSet&)>;

/// Configuration of the theory-versus-Monte-Carlo comparison.
struct TheoryCheckConfig {
    int d = 300;
    int n = 150;
    int r = 10;
    int k = 5;
    double eta = 1.0;
    int outer_trials = 50;
    std::uint64_t seed = 2024;
};

/// |theory - mean| <= max(10% of theory, 4 stderr) for the given variant.
/// The theory function is injectable so a corrupted formula can be shown to
/// fail.
CriterionResult check_theory_vs_mc(ModelVariant v, const TheoryCheckConfig& cfg, const TheoryFn& theory);

/// Wall-clock budget in seconds; a criterion that overruns it fails.
double runtime_budget(int id);

/// Runs one numbered criterion (1..16).
CriterionResult run_criterion(int id, int workers = 1);

/// Criteria included at each level.
std::vector<int> criteria_for(VerifyLevel level);

/// Runs the criteria for `level`, printing one PASS/FAIL line per criterion
/// to `log` when given.
std::vector<CriterionResult> verify_suite(VerifyLevel level, int workers = 1, std::ostream* log = nullptr);

std::string format_result(const CriterionResult& r);

}  // namespace ldae
