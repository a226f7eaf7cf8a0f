#pragma once

#include "ldae/linalg.hpp"

#include <complex>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace ldae {

/// VAR_OVER_D: spectrum of A A^T with A d x n, entries N(0, eta^2 / d).
/// UNIT_VAR_OVER_N: spectrum of (1/n) G G^T with G d x n, entries of
/// variance sigma^2 (stored in `eta`).
/// Both take c = d / n. The first is the second with sigma^2 = eta^2 / c.
enum class MpScaling { VAR_OVER_D, UNIT_VAR_OVER_N };

struct MpParams {
    double c = 1.0;
    double eta = 1.0;
    MpScaling scaling = MpScaling::VAR_OVER_D;
    double a = 0.0;  // support edges
    double b = 0.0;
    double atom_mass = 0.0;  // point mass at zero

    static MpParams make(double c, double eta, MpScaling scaling);
    /// Variance parameter of the equivalent UNIT_VAR_OVER_N law.
    [[nodiscard]] double unit_sigma2() const;
};

/// The same law expressed in the other scaling.
MpParams convert(const MpParams& p, MpScaling target);

/// Density of the continuous part; zero outside [a, b].
double mp_density(double x, const MpParams& p);

/// Cumulative distribution including the atom at zero.
double mp_cdf(double x, const MpParams& p);

/// Stieltjes transform m(alpha) = int (x - alpha)^-1 dmu(x), Im(alpha) > 0.
std::complex<double> mp_stieltjes(std::complex<double> alpha, const MpParams& p);

/// Residual of the defining quadratic c alpha s2 m^2 - (s2 (1 - c) - alpha) m + 1.
std::complex<double> mp_stieltjes_residual(std::complex<double> m, std::complex<double> alpha, const MpParams& p);

/// Kolmogorov-Smirnov distance between the empirical measure of the
/// eigenvalues and the MP law. Values within 1e-10 of zero (relative to the
/// largest) are counted in the atom.
double esm_ks_distance(std::vector<double> eigenvalues, const MpParams& p);

/// Eigenvalues of M M^T (d x d) computed from the n x n Gram matrix and
/// padded with d - n zeros when d > n.
std::vector<double> gram_spectrum(const Matrix& M);

/// Eigenpairs are kept only for the nonzero part of each spectrum: n for
/// A A^T and n + 1 for S. The remaining d - n eigenvalues of A A^T are zero
/// and u1 carries weight null_weight in that eigenspace.
struct Rank1Sample {
    Matrix S;             // lambda1 u1 u1^T + A A^T
    EigFactors noise;     // A A^T, top n
    EigFactors spiked;    // S, top n + 1
    double null_weight = 0.0;
    Vector u1;
    double lambda1 = 0.0;
    int d = 0;
    int n = 0;
};

Rank1Sample rank1_additive_sample(int d, int n, double lambda1, double eta, std::uint64_t seed);

/// f(x) = u1^T (A A^T - x I)^{-1} u1, and its derivative.
double secular_f(const Rank1Sample& s, double x);
double secular_fprime(const Rank1Sample& s, double x);

struct InterlacingReport {
    bool ok = true;
    bool vacuous = false;  // lambda1 == 0
    bool top_above = true;  // lambda_1^S > lambda_1^A
    std::vector<int> violations;     // m (one-based) with lambda_m^S outside (lambda_m^A, lambda_{m-1}^A)
    std::vector<double> margins;     // min distance to the interval ends, per m = 2..n
    std::vector<double> secular_residuals;  // per nonzero lambda_j^S away from poles
    double max_secular_residual = 0.0;
};
InterlacingReport interlacing_check(const Rank1Sample& s);

struct AlignmentPair {
    int i = 0;  // one-based
    int j = 0;
    double lhs = 0.0;  // <u_i^A, u_j^S>^2 / <u1, u_j^S>^2
    double rhs = 0.0;  // lambda1^2 <u_i^A, u1>^2 / (lambda_i^A - lambda_j^S)^2
    double overlap_sq = 0.0;       // <u1, u_j^S>^2
    double overlap_from_fprime = 0.0;  // 1 / (lambda1^2 f'(lambda_j^S))
    double fprime = 0.0;
};
/// Indices are one-based, i <= n and j <= n + 1. Throws NumericalError when |lambda_i^A - lambda_j^S|
/// is below 1e-8 lambda_1^A.
AlignmentPair alignment_identity(const Rank1Sample& s, int i, int j);

struct AlignmentScaling {
    std::vector<int> dims;
    std::vector<double> mean_ratio;
    std::vector<double> stderr_ratio;
    double slope = 0.0;
    std::vector<AlignmentPair> samples;  // every evaluation, in (d, trial) order
    std::vector<int> sample_dims;
};

/// For each d (n = d / c) averages the lhs ratio over `trials` rank-1 samples,
/// then fits log(mean) against log(d). j_from_end = 0 picks j = n, the
/// smallest nonzero interlaced eigenvalue.
AlignmentScaling alignment_scaling_experiment(const std::vector<int>& dims, double c, int trials, int i,
                                              int j_from_end, double lambda1, double eta, std::uint64_t seed);

/// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Columns index,eigenvalue (index one-based).
void write_spectrum_csv(const std::vector<double>& eigenvalues, const std::filesystem::path& path);
/// Columns d,trial,i,j,lhs,rhs.
void write_alignment_csv(const AlignmentScaling& a, int trials, const std::filesystem::path& path);

}  // namespace ldae
