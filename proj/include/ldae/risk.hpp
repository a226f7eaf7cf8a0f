#pragma once

#include "ldae/datagen.hpp"
#include "ldae/solver.hpp"

#include <functional>
#include <optional>

namespace ldae {

enum class RiskSource { THEORY, MONTE_CARLO, CONDITIONAL };

std::string to_string(RiskSource s);

struct RiskBreakdown {
    double bias = 0.0;
    double variance = 0.0;
    double residual = 0.0;
    double total = 0.0;
    RiskSource source = RiskSource::THEORY;
    std::optional<double> std_error;
    ModelVariant variant = ModelVariant::DAE;
    IndexSet index_set;
};

/// Leading-order test risk of the no-skip critical point for I subset of [r].
/// bias = Tr(J L L^T)/N_tst, J_ii = (alpha_i^2 + 1)^-2 on I and 1 off I;
/// variance = eta_tst^2 c / (d (c - 1)) sum_{j in I} alpha_j^2 / (1 + alpha_j^2).
RiskBreakdown risk_theory_noskip(const DataEnsemble& ens, const IndexSet& I);

/// Leading-order test risk of the skip critical point. Only |I| enters.
/// variance is the (c - 1)^-1 term that comes from the norm of W; every
/// other term is bias.
RiskBreakdown risk_theory_skip(const DataEnsemble& ens, const IndexSet& I);

/// Dispatches on the variant (DAE or DAE_SKIP).
RiskBreakdown risk_theory(const DataEnsemble& ens, ModelVariant v, const IndexSet& I);

/// Exact expectation over test noise for a fixed W:
///   no-skip  bias = ||X_tst - W X_tst||^2 / N,  variance = (eta_tst^2 / d) ||W||^2
///   skip     bias = ||W X_tst||^2 / N + eta_tst^2 (1 + 2 Tr(W) / d),
///            variance = (eta_tst^2 / d) ||W||^2
RiskBreakdown bias_variance_split(const SolutionRecord& rec, const DataEnsemble& ens);

struct EmpiricalRisk {
    RiskBreakdown sampled;      // fresh test noise per trial, mean and stderr
    RiskBreakdown conditional;  // closed-form expectation over test noise
};

/// Estimates the test error of a fixed solution by drawing `trials` test
/// noise matrices.
EmpiricalRisk risk_empirical(const SolutionRecord& rec, const DataEnsemble& ens, int trials, std::uint64_t seed);

/// Outer Monte Carlo over training noise: for each draw the solution is
/// recomputed and its conditional risk recorded. Reports mean and stderr of
/// the total, and means of bias and variance.
RiskBreakdown monte_carlo_risk(const DataEnsemble& ens, ModelVariant v, const IndexSet& I, int outer_trials,
                               std::uint64_t seed);

struct NormAlignment {
    double direct = 0.0;
    double alignment_sum = 0.0;
};

/// ||W_*||_F^2 computed directly and as
///   sum_j lb_j^-1 sum_{i<=k} l_i (V^T Vb)_{ij}^2
/// with (lb, Vb) from X + A and (l, V) from X (no skip) or A (skip).
NormAlignment norm_alignment_identity(const DataEnsemble& ens, ModelVariant v, int k);

/// Summation that does not depend on the order of the inputs beyond
/// rounding of a sorted sequence, so serial and parallel runs agree.
double stable_sum(std::vector<double> values);

struct MeanStderr {
    double mean = 0.0;
    double std_error = 0.0;
};
MeanStderr mean_stderr(const std::vector<double>& values);

}  // namespace ldae
