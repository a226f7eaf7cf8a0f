#pragma once

#include "ldae/datagen.hpp"
#include "ldae/solver.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ldae {

enum class Experiment { RISK_CURVE, BOTTLENECK_SWEEP, CRITICAL_POINT_COMPARE, SPECTRUM, ALIGNMENT, TRAIN_VERIFY };
enum class SweepMode { VARY_N, VARY_D };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& s);

/// One sweep. List-valued keys form a Cartesian grid; `c` (when set)
/// replaces n (VARY_N: n = round(d / c)) or d (VARY_D: d = round(c n)).
struct SweepSpec {
    Experiment experiment = Experiment::RISK_CURVE;
    std::vector<ModelVariant> variants{ModelVariant::DAE, ModelVariant::DAE_SKIP};
    SweepMode mode = SweepMode::VARY_N;
    std::vector<int> d{300};
    std::vector<int> n{150};
    std::vector<double> c;
    std::vector<int> k{5};
    std::vector<int> r{10};
    std::vector<double> eta_trn{1.0};
    std::vector<double> eta_tst{1.0};
    std::vector<IndexSet> index_sets;  // empty: I = [k]
    double lambda = 0.0;
    int trials = 3;
    int inner_trials = 0;  // > 0 adds sampled test noise on top of the exact expectation
    std::uint64_t base_seed = 0;
    std::string out;
    int n_tst = 450;
    double cond_bound = 10.0;
    SpectrumShape shape = SpectrumShape::LogUniform;
    int workers = 1;
};

std::vector<std::string> valid_config_keys();

/// Parses flat "key = value" text; '#' starts a comment. Later overrides
/// win. Unknown keys and malformed values throw InvalidArgument.
SweepSpec parse_config_text(const std::string& text,
                            const std::vector<std::pair<std::string, std::string>>& overrides = {});
SweepSpec parse_config(const std::optional<std::string>& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides = {});

/// "key = value" lines that parse back to the same spec.
std::string format_config(const SweepSpec& spec);

}  // namespace ldae
