#pragma once

#include "ldae/linalg.hpp"
#include "ldae/random.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>

namespace ldae {

enum class SpectrumShape { LogUniform, Constant };

struct CleanConfig {
    int d = 0;
    int n = 0;
    int r = 0;
    double cond_bound = 10.0;
    SpectrumShape shape = SpectrumShape::LogUniform;
    std::uint64_t seed = 0;
};

/// Training signal, its factors, noise, and the in-subspace test set.
///
/// X is d x n with ||X||_2 = 1 and rank r. Noise entries are N(0, eta^2/d).
/// X_tst = U L lies in the span of the top-r left singular vectors of X.
struct DataEnsemble {
    Matrix X;
    SvdFactors X_factors;
    Matrix A;  // training noise, empty until drawn
    double eta_trn = 1.0;
    double eta_tst = 1.0;
    int d = 0;
    int n = 0;
    int r = 0;
    int N_tst = 0;
    Matrix L;      // r x N_tst
    Matrix X_tst;  // d x N_tst
    std::uint64_t seed = 0;
    double cond_bound = 10.0;

    [[nodiscard]] double aspect_ratio() const { return static_cast<double>(d) / n; }
    /// Top-r left singular vectors of X (d x r).
    [[nodiscard]] Matrix signal_basis() const { return X_factors.left_vectors.leftCols(r); }
    [[nodiscard]] Vector signal_values() const { return X_factors.singular_values.head(r); }
    [[nodiscard]] bool has_noise() const { return A.size() > 0; }
    [[nodiscard]] bool has_test() const { return X_tst.size() > 0; }
};

DataEnsemble gen_clean(const CleanConfig& cfg);

/// d x n, entries i.i.d. N(0, eta^2 / d).
Matrix gen_noise(int d, int n, double eta, std::uint64_t seed);

struct TestSet {
    Matrix L;
    Matrix X_tst;
};

/// Draws L with i.i.d. Gaussian entries scaled so E||x_tst||^2 equals the mean
/// squared column norm of X, and sets X_tst = U L.
TestSet gen_test(const DataEnsemble& ens, int N_tst, std::uint64_t seed);

/// Same, with caller-supplied coefficients.
TestSet make_test(const DataEnsemble& ens, const Matrix& L);

/// Convenience: clean data, training noise and test set from one seed.
struct EnsembleConfig {
    int d = 0;
    int n = 0;
    int r = 0;
    int N_tst = 450;
    double eta_trn = 1.0;
    double eta_tst = 1.0;
    double cond_bound = 10.0;
    SpectrumShape shape = SpectrumShape::LogUniform;
    std::uint64_t seed = 0;
};
DataEnsemble make_ensemble(const EnsembleConfig& cfg);

/// Replaces the training noise with a fresh draw.
void redraw_train_noise(DataEnsemble& ens, std::uint64_t seed);

/// Builds an ensemble from an external d x n matrix: rank-r truncation, then
/// rescaling to ||X||_2 = 1 or, when target_snr is set, to
/// ||X||_2 / E||A||_2 = target_snr using the Marchenko-Pastur edge of A.
DataEnsemble ensemble_from_matrix(const Matrix& raw, int r, double eta_trn, double eta_tst,
                                  std::optional<double> target_snr = std::nullopt);

/// Checks every data invariant; throws InvalidArgument naming the first failure.
/// `require_overparameterized` adds d >= n + r.
void validate(const DataEnsemble& ens, bool require_overparameterized = false);

/// Comma-separated text, one row per line; lines starting with '#' are skipped.
Matrix load_matrix(const std::filesystem::path& path);
void save_matrix(const Matrix& m, const std::filesystem::path& path);

/// Parse error with the offending line number.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    [[nodiscard]] int line() const { return line_; }

private:
    int line_;
};

}  // namespace ldae
