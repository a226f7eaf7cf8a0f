#include "ldae/rmt.hpp"
#include "ldae/datagen.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <doctest.h>

#include <cmath>

using namespace ldae;

namespace {

// Independent quadrature of the density, handling the edge singularities
// of the derivative with a different rule than the library.
double cdf_oracle(double x, const MpParams& p) {
    if (x <= p.a) return x < 0 ? 0.0 : p.atom_mass;
    boost::math::quadrature::tanh_sinh<double> ts;
    return p.atom_mass + ts.integrate([&](double t) { return mp_density(t, p); }, p.a, std::min(x, p.b));
}

// Inverse-CDF sample at the midpoint quantiles (i + 1/2) / N.
std::vector<double> quantile_sample(const MpParams& p, int N) {
    std::vector<double> out;
    for (int i = 0; i < N; ++i) {
        const double u = (i + 0.5) / N;
        if (u <= p.atom_mass) {
            out.push_back(0.0);
            continue;
        }
        double lo = p.a, hi = p.b;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (mp_cdf(mid, p) < u ? lo : hi) = mid;
        }
        out.push_back(0.5 * (lo + hi));
    }
    return out;
}

}  // namespace

TEST_CASE("edges, atom and scaling conversion") {
    const MpParams p = MpParams::make(2.0, 1.5, MpScaling::VAR_OVER_D);
    CHECK(p.b == doctest::Approx(1.5 * 1.5 * std::pow(1 + 1 / std::sqrt(2.0), 2)));
    CHECK(p.a == doctest::Approx(1.5 * 1.5 * std::pow(1 - 1 / std::sqrt(2.0), 2)));
    CHECK(p.atom_mass == doctest::Approx(0.5));
    const MpParams q = convert(p, MpScaling::UNIT_VAR_OVER_N);
    CHECK(q.a == doctest::Approx(p.a));
    CHECK(q.b == doctest::Approx(p.b));
    const MpParams back = convert(q, MpScaling::VAR_OVER_D);
    CHECK(back.eta == doctest::Approx(p.eta));
    CHECK(MpParams::make(0.5, 1.0, MpScaling::VAR_OVER_D).atom_mass == 0.0);
    CHECK_THROWS_AS(MpParams::make(0.0, 1.0, MpScaling::VAR_OVER_D), InvalidArgument);
}

TEST_CASE("CDF agrees with tanh-sinh quadrature of the density") {
    for (double c : {0.5, 1.0, 2.0, 4.0}) {
        const MpParams p = MpParams::make(c, 1.0, MpScaling::VAR_OVER_D);
        for (int t = 0; t <= 20; ++t) {
            const double x = p.a + (p.b - p.a) * t / 20.0;
            CHECK(mp_cdf(x, p) == doctest::Approx(cdf_oracle(x, p)).epsilon(1e-11));
        }
        CHECK(mp_cdf(p.b, p) == 1.0);
        CHECK(cdf_oracle(p.b, p) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(mp_cdf(-1.0, p) == 0.0);
    }
}

TEST_CASE("CDF matches the closed form at c = 1") {
    // density sqrt(4 - x) / (2 pi sqrt(x)) on [0, 4]; x = 4 sin^2(t) integrates it exactly
    const MpParams p = MpParams::make(1.0, 1.0, MpScaling::VAR_OVER_D);
    for (int t = 0; t <= 40; ++t) {
        const double x = 0.1 * t;
        const double th = std::asin(std::sqrt(x) / 2.0);
        CHECK(std::abs(mp_cdf(x, p) - 2.0 / M_PI * (th + 0.5 * std::sin(2.0 * th))) < 1e-12);
    }
}

TEST_CASE("Stieltjes transform solves its quadratic and matches direct integration") {
    const MpParams p = MpParams::make(2.0, 1.0, MpScaling::VAR_OVER_D);
    boost::math::quadrature::tanh_sinh<double> ts;
    for (std::complex<double> alpha : {std::complex<double>(0.5, 0.3), {2.0, 0.1}, {-1.0, 1.0}, {0.1, 2.0}}) {
        const auto m = mp_stieltjes(alpha, p);
        CHECK(std::abs(mp_stieltjes_residual(m, alpha, p)) < 1e-12);
        CHECK(m.imag() > 0);
        const double re = ts.integrate([&](double x) { return ((1.0 / (x - alpha)) * mp_density(x, p)).real(); }, p.a, p.b);
        const double im = ts.integrate([&](double x) { return ((1.0 / (x - alpha)) * mp_density(x, p)).imag(); }, p.a, p.b);
        const std::complex<double> oracle = std::complex<double>(re, im) + p.atom_mass / (0.0 - alpha);
        CHECK(std::abs(m - oracle) < 1e-8);
    }
    // density recovered from the boundary value
    const double x = 1.0;
    CHECK(mp_stieltjes({x, 1e-10}, p).imag() / M_PI == doctest::Approx(mp_density(x, p)).epsilon(1e-6));
    CHECK_THROWS_AS(mp_stieltjes({1.0, 0.0}, p), InvalidArgument);
}

TEST_CASE("KS distance: quantile samples are close, wrong laws are far") {
    const MpParams p = MpParams::make(2.0, 1.0, MpScaling::VAR_OVER_D);
    const auto sample = quantile_sample(p, 2000);
    CHECK(esm_ks_distance(sample, p) <= 1.0 / 2000 + 1e-9);
    const MpParams wrong = MpParams::make(4.0, 1.0, MpScaling::VAR_OVER_D);
    CHECK(esm_ks_distance(sample, wrong) > 0.2);
    CHECK(esm_ks_distance(std::vector<double>(10, 0.0), p) == doctest::Approx(0.5));
    CHECK_THROWS_AS(esm_ks_distance({}, p), InvalidArgument);
}

TEST_CASE("Gram spectrum pads with zeros and matches the d x d eigenvalues") {
    const Matrix A = gen_noise(40, 20, 1.0, 3);
    const auto ev = gram_spectrum(A);
    REQUIRE(ev.size() == 40);
    const Vector full = sym_eigenvalues(A * A.transpose());
    for (int i = 0; i < 40; ++i) CHECK(std::abs(ev[static_cast<std::size_t>(i)] - full(i)) < 1e-12);
    CHECK(ev[25] == 0.0);
}

TEST_CASE("noise spectrum is close to the MP law at moderate size") {
    const Matrix A = gen_noise(600, 300, 1.0, 4);
    CHECK(esm_ks_distance(gram_spectrum(A), MpParams::make(2.0, 1.0, MpScaling::VAR_OVER_D)) < 0.05);
}

TEST_CASE("rank-one update: reduced eigensolve matches the dense one") {
    const Rank1Sample s = rank1_additive_sample(60, 30, 1.0, 1.0, 5);
    const Vector dense = sym_eigenvalues(s.S);
    for (int j = 0; j < 31; ++j) CHECK(std::abs(s.spiked.values(j) - dense(j)) < 1e-12);
    for (int j = 31; j < 60; ++j) CHECK(std::abs(dense(j)) < 1e-12);
    CHECK(s.null_weight >= 0);
    CHECK(s.u1.norm() == doctest::Approx(1.0));
}

TEST_CASE("interlacing and the secular equation") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Rank1Sample s = rank1_additive_sample(80, 40, 1.0, 1.0, seed);
        const InterlacingReport rep = interlacing_check(s);
        CHECK(rep.ok);
        CHECK(rep.violations.empty());
        CHECK(rep.top_above);
        CHECK(rep.max_secular_residual < 1e-8);
        // 1 + lambda1 f(lambda_j^S) = 0 at a spiked eigenvalue
        const double x = s.spiked.values(3);
        CHECK(s.lambda1 * secular_f(s, x) == doctest::Approx(-1.0).epsilon(1e-8));
        // dense oracles: f = u^T R u and f' = u^T R^2 u with R = (A A^T - x I)^-1
        const Matrix AAt = s.S - s.lambda1 * s.u1 * s.u1.transpose();
        const Matrix R = (AAt - x * Matrix::Identity(s.d, s.d)).inverse();
        CHECK(secular_f(s, x) == doctest::Approx(s.u1.dot(R * s.u1)).epsilon(1e-8));
        CHECK(secular_fprime(s, x) == doctest::Approx(s.u1.dot(R * R * s.u1)).epsilon(1e-8));
    }
    CHECK(interlacing_check(rank1_additive_sample(30, 10, 0.0, 1.0, 1)).vacuous);
    CHECK_THROWS_AS(rank1_additive_sample(30, 30, 1.0, 1.0, 1), InvalidArgument);
}

TEST_CASE("alignment identity holds per sample") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Rank1Sample s = rank1_additive_sample(100, 50, 1.0, 1.0, seed);
        for (auto [i, j] : {std::pair{1, 50}, std::pair{3, 10}, std::pair{1, 1}}) {
            const AlignmentPair ap = alignment_identity(s, i, j);
            CHECK(ap.lhs == doctest::Approx(ap.rhs).epsilon(1e-8));
            CHECK(ap.overlap_sq == doctest::Approx(ap.overlap_from_fprime).epsilon(1e-8));
        }
        CHECK_THROWS_AS(alignment_identity(s, 0, 1), InvalidArgument);
        CHECK_THROWS_AS(alignment_identity(s, 1, 52), InvalidArgument);
    }
}

TEST_CASE("least-squares slope") {
    CHECK(ls_slope({1, 2, 3, 4}, {3, 1, -1, -3}) == doctest::Approx(-2.0));
    CHECK_THROWS_AS(ls_slope({1}, {1}), InvalidArgument);
}
