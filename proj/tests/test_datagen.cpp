#include "ldae/datagen.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>

using namespace ldae;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("ldae_dg_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

EnsembleConfig cfg(int d, int n, int r, std::uint64_t seed) {
    EnsembleConfig c;
    c.d = d;
    c.n = n;
    c.r = r;
    c.N_tst = 200;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("clean data has unit spectral norm, rank r and bounded condition number") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        CleanConfig c{50, 30, 6, 10.0, SpectrumShape::LogUniform, seed};
        const DataEnsemble e = gen_clean(c);
        const Vector s = e.X_factors.singular_values;
        CHECK(s(0) == 1.0);
        CHECK(numerical_rank(e.X) == 6);
        CHECK(s(0) / s(5) == doctest::Approx(10.0).epsilon(1e-9));
        for (int i = 0; i + 1 < 6; ++i) CHECK(s(i) >= s(i + 1));
        CHECK(std::abs(svd(e.X).singular_values(0) - 1.0) < 1e-12);
    }
    CleanConfig flat{40, 20, 4, 10.0, SpectrumShape::Constant, 4};
    const Vector s = gen_clean(flat).signal_values();
    CHECK((s - Vector::Ones(4)).norm() < 1e-12);
}

TEST_CASE("noise entries have variance eta^2 / d") {
    const int d = 400, n = 300;
    const Matrix A = gen_noise(d, n, 2.0, 9);
    const double var = A.squaredNorm() / (static_cast<double>(d) * n);
    // standard error of the variance estimate is about var * sqrt(2 / (d n))
    CHECK(std::abs(var - 4.0 / d) < 5 * (4.0 / d) * std::sqrt(2.0 / (d * n)));
    CHECK(std::abs(A.mean()) < 5 * (2.0 / std::sqrt(d)) / std::sqrt(d * n));
}

TEST_CASE("test set lies in the signal subspace with matched column energy") {
    DataEnsemble e = make_ensemble(cfg(60, 30, 5, 21));
    const Matrix U = e.signal_basis();
    CHECK((e.X_tst - U * U.transpose() * e.X_tst).norm() < 1e-12 * e.X_tst.norm());
    CHECK((e.X_tst - U * e.L).norm() < 1e-12 * e.X_tst.norm());
    const double target = e.X.squaredNorm() / e.n;
    const double got = e.X_tst.squaredNorm() / e.N_tst;
    CHECK(std::abs(got - target) < 0.25 * target);
    validate(e, true);
}

TEST_CASE("ensembles are reproducible from the seed and independent across substreams") {
    const DataEnsemble a = make_ensemble(cfg(40, 20, 4, 5));
    const DataEnsemble b = make_ensemble(cfg(40, 20, 4, 5));
    const DataEnsemble c = make_ensemble(cfg(40, 20, 4, 6));
    CHECK(a.X == b.X);
    CHECK(a.A == b.A);
    CHECK(a.X_tst == b.X_tst);
    CHECK(a.X != c.X);
    DataEnsemble d = a;
    redraw_train_noise(d, 99);
    CHECK(d.A != a.A);
    CHECK(d.X == a.X);
}

TEST_CASE("seed derivation is injective on a grid") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t p = 0; p < 200; ++p)
        for (std::uint64_t t = 0; t < 200; ++t) seen.insert(derive_seed(42, p, t));
    CHECK(seen.size() == 40000);
    CHECK(derive_seed(1, 0, 0) != derive_seed(2, 0, 0));
    CHECK(substream(7, 0) != substream(7, 1));
}

TEST_CASE("invalid shapes are rejected") {
    CHECK_THROWS_AS(gen_clean(CleanConfig{10, 10, 11, 10.0, SpectrumShape::LogUniform, 1}), InvalidArgument);
    CHECK_THROWS_AS(gen_clean(CleanConfig{0, 10, 1, 10.0, SpectrumShape::LogUniform, 1}), InvalidArgument);
    CHECK_THROWS_AS(gen_clean(CleanConfig{10, 10, 2, 0.5, SpectrumShape::LogUniform, 1}), InvalidArgument);
    CHECK_THROWS_AS(gen_noise(10, 10, -1.0, 1), InvalidArgument);
    DataEnsemble e = make_ensemble(cfg(20, 18, 4, 3));
    CHECK_THROWS_AS(validate(e, true), InvalidArgument);
    e.X(0, 0) = std::nan("");
    CHECK_THROWS_AS(validate(e), InvalidArgument);
}

TEST_CASE("external matrices are truncated and rescaled") {
    Rng rng(31);
    const Matrix raw = 7.0 * standard_gaussian(30, 20, rng);
    const DataEnsemble e = ensemble_from_matrix(raw, 5, 1.0, 1.0);
    CHECK(numerical_rank(e.X) == 5);
    CHECK(svd(e.X).singular_values(0) == doctest::Approx(1.0).epsilon(1e-12));
    // rank-5 part of raw, up to the scale
    const Matrix P5 = project_components(raw, IndexSet::first(5));
    CHECK((e.X - P5 / svd(raw).singular_values(0)).norm() < 1e-10);
    const DataEnsemble s = ensemble_from_matrix(raw, 5, 1.0, 1.0, 3.0);
    const double c = 30.0 / 20.0;
    CHECK(svd(s.X).singular_values(0) == doctest::Approx(3.0 * (1 + std::sqrt(c)) / std::sqrt(c)).epsilon(1e-10));
}

TEST_CASE("matrix CSV round trip is exact") {
    Rng rng(32);
    const Matrix M = standard_gaussian(7, 4, rng) * 1e-3;
    const auto p = scratch("m.csv");
    save_matrix(M, p);
    CHECK(load_matrix(p) == M);
}

TEST_CASE("matrix parser reports the offending line") {
    const auto p = scratch("bad.csv");
    write(p, "# header\n1,2\n3,x\n");
    try {
        load_matrix(p);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    write(p, "1,2\n3\n");
    CHECK_THROWS_AS(load_matrix(p), ParseError);
    write(p, "");
    CHECK_THROWS_AS(load_matrix(p), ParseError);
    write(p, "# only comments\n1, 2\n 3 ,4\n");
    CHECK(load_matrix(p) == (Matrix(2, 2) << 1, 2, 3, 4).finished());
    CHECK_THROWS(load_matrix(scratch("missing.csv")));
}
