#include "ldae/rmt.hpp"

#include "ldae/datagen.hpp"
#include "ldae/random.hpp"
#include "ldae/risk.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace ldae {

namespace {
constexpr double kPi = boost::math::constants::pi<double>();
}

MpParams MpParams::make(double c, double eta, MpScaling scaling) {
    if (!(c > 0.0) || !(eta > 0.0)) throw InvalidArgument("MpParams: c and eta must be positive");
    MpParams p;
    p.c = c;
    p.eta = eta;
    p.scaling = scaling;
    const double s2 = p.unit_sigma2();
    const double rc = std::sqrt(c);
    p.a = s2 * (1.0 - rc) * (1.0 - rc);
    p.b = s2 * (1.0 + rc) * (1.0 + rc);
    p.atom_mass = std::max(0.0, 1.0 - 1.0 / c);
    return p;
}

double MpParams::unit_sigma2() const {
    return scaling == MpScaling::VAR_OVER_D ? eta * eta / c : eta * eta;
}

MpParams convert(const MpParams& p, MpScaling target) {
    if (p.scaling == target) return p;
    const double s2 = p.unit_sigma2();
    if (target == MpScaling::UNIT_VAR_OVER_N) return MpParams::make(p.c, std::sqrt(s2), target);
    return MpParams::make(p.c, std::sqrt(s2 * p.c), target);
}

double mp_density(double x, const MpParams& p) {
    if (x <= p.a || x >= p.b) return 0.0;
    return std::sqrt((p.b - x) * (x - p.a)) / (2.0 * kPi * p.unit_sigma2() * p.c * x);
}

double mp_cdf(double x, const MpParams& p) {
    if (x < 0.0) return 0.0;
    if (x <= p.a) return p.atom_mass;
    if (x >= p.b) return 1.0;
    // x = mid - h cos(theta) turns the square-root edges into a smooth integrand
    const double mid = 0.5 * (p.a + p.b);
    const double h = 0.5 * (p.b - p.a);
    const double scale = 2.0 * kPi * p.unit_sigma2() * p.c;
    const double theta_x = std::acos(std::clamp((mid - x) / h, -1.0, 1.0));
    auto integrand = [&](double t) {
        const double s = std::sin(t);
        const double half = std::sin(0.5 * t);
        // mid - h cos(t) without cancellation when a = 0
        return h * h * s * s / (scale * (p.a + 2.0 * h * half * half));
    };
    const double mass =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, theta_x, 15, 1e-13);
    return std::min(1.0, p.atom_mass + mass);
}

std::complex<double> mp_stieltjes_residual(std::complex<double> m, std::complex<double> alpha, const MpParams& p) {
    const double s2 = p.unit_sigma2();
    return p.c * alpha * s2 * m * m - (s2 * (1.0 - p.c) - alpha) * m + 1.0;
}

std::complex<double> mp_stieltjes(std::complex<double> alpha, const MpParams& p) {
    if (!(alpha.imag() > 0.0)) throw InvalidArgument("mp_stieltjes: Im(alpha) must be positive");
    const double s2 = p.unit_sigma2();
    const std::complex<double> qa = p.c * alpha * s2;
    const std::complex<double> qb = -(s2 * (1.0 - p.c) - alpha);
    const std::complex<double> disc = std::sqrt(qb * qb - 4.0 * qa);
    // cancellation-free pair of roots
    const std::complex<double> q = (std::real(std::conj(qb) * disc) >= 0.0) ? -0.5 * (qb + disc) : -0.5 * (qb - disc);
    const std::complex<double> r1 = q / qa;
    const std::complex<double> r2 = 1.0 / q;
    return r1.imag() > r2.imag() ? r1 : r2;
}

double esm_ks_distance(std::vector<double> ev, const MpParams& p) {
    if (ev.empty()) throw InvalidArgument("esm_ks_distance: no eigenvalues");
    for (double x : ev)
        if (!std::isfinite(x)) throw InvalidArgument("esm_ks_distance: non-finite eigenvalue");
    std::sort(ev.begin(), ev.end());
    const double top = std::max(std::abs(ev.front()), std::abs(ev.back()));
    for (double& x : ev)
        if (std::abs(x) <= 1e-10 * top) x = 0.0;
    const double N = static_cast<double>(ev.size());
    double ks = 0.0;
    std::size_t i = 0;
    while (i < ev.size()) {
        // compare on both sides of each jump; tied values form one jump
        std::size_t e = i;
        while (e < ev.size() && ev[e] == ev[i]) ++e;
        const double F = mp_cdf(ev[i], p);
        const double F_left = ev[i] == 0.0 ? 0.0 : F;  // the atom sits exactly at zero
        ks = std::max({ks, std::abs(F - static_cast<double>(e) / N), std::abs(F_left - static_cast<double>(i) / N)});
        i = e;
    }
    return ks;
}

std::vector<double> gram_spectrum(const Matrix& M) {
    const Eigen::Index d = M.rows();
    const Eigen::Index n = M.cols();
    Vector ev = d > n ? sym_eigenvalues(M.transpose() * M) : sym_eigenvalues(M * M.transpose());
    std::vector<double> out(ev.data(), ev.data() + ev.size());
    out.resize(static_cast<std::size_t>(d), 0.0);
    return out;
}

Rank1Sample rank1_additive_sample(int d, int n, double lambda1, double eta, std::uint64_t seed) {
    if (lambda1 < 0.0) throw InvalidArgument("rank1_additive_sample: lambda1 must be nonnegative");
    if (n < 1 || d <= n) throw InvalidArgument("rank1_additive_sample: requires 1 <= n < d");
    Rank1Sample s;
    s.d = d;
    s.n = n;
    s.lambda1 = lambda1;
    const Matrix A = gen_noise(d, n, eta, substream(seed, 1));
    Rng rng(substream(seed, 2));
    s.u1 = random_unit_vector(d, rng);
    s.S = A * A.transpose() + lambda1 * s.u1 * s.u1.transpose();

    // Nonzero spectrum of A A^T from the thin SVD of A.
    const Eigen::BDCSVD<Matrix> sa(A, Eigen::ComputeThinU);
    s.noise.vectors = sa.matrixU();
    s.noise.values = sa.singularValues().array().square();
    s.null_weight = std::max(0.0, 1.0 - (s.noise.vectors.transpose() * s.u1).squaredNorm());

    // S vanishes off span{A, u1}; solve the eigenproblem on that subspace.
    Matrix B(d, n + 1);
    B << A, s.u1;
    const Matrix Q = orthonormal_columns(B);
    const Matrix QA = Q.transpose() * A;
    const Vector Qu = Q.transpose() * s.u1;
    const EigFactors small = sym_eig(QA * QA.transpose() + lambda1 * Qu * Qu.transpose());
    s.spiked.values = small.values;
    s.spiked.vectors = Q * small.vectors;
    return s;
}

namespace {
// (u1 . u_i^A)^2 for the nonzero noise eigenpairs
Vector noise_weights(const Rank1Sample& s) { return (s.noise.vectors.transpose() * s.u1).array().square(); }
}  // namespace

double secular_f(const Rank1Sample& s, double x) {
    const Vector w = noise_weights(s);
    return (w.array() / (s.noise.values.array() - x)).sum() - s.null_weight / x;
}

double secular_fprime(const Rank1Sample& s, double x) {
    const Vector w = noise_weights(s);
    return (w.array() / (s.noise.values.array() - x).square()).sum() + s.null_weight / (x * x);
}

InterlacingReport interlacing_check(const Rank1Sample& s) {
    InterlacingReport rep;
    const Vector& la = s.noise.values;
    const Vector& ls = s.spiked.values;
    if (s.lambda1 == 0.0) {
        rep.vacuous = true;
        rep.ok = (la - ls.head(la.size())).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, la(0));
        return rep;
    }
    rep.top_above = ls(0) > la(0);
    rep.ok = rep.top_above;
    for (int m = 2; m <= s.n; ++m) {
        const double lo = la(m - 1), hi = la(m - 2), x = ls(m - 1);
        const double margin = std::min(x - lo, hi - x);
        rep.margins.push_back(margin);
        if (!(margin > 0.0)) {
            rep.violations.push_back(m);
            rep.ok = false;
        }
    }

    const Vector w = noise_weights(s);
    const double floor = 1e-10 * ls(0);
    for (int j = 0; j < s.n + 1; ++j) {
        const double x = ls(j);
        if (x <= floor) continue;
        const Vector gaps = la.array() - x;
        if (std::min(gaps.cwiseAbs().minCoeff(), x) < 1e-8 * la(0)) continue;
        const Vector terms = w.array() / gaps.array();
        const double null_term = -s.null_weight / x;
        const double res = std::abs(terms.sum() + null_term + 1.0 / s.lambda1) /
                           (terms.cwiseAbs().sum() + std::abs(null_term) + 1.0 / s.lambda1);
        rep.secular_residuals.push_back(res);
        rep.max_secular_residual = std::max(rep.max_secular_residual, res);
    }
    return rep;
}

AlignmentPair alignment_identity(const Rank1Sample& s, int i, int j) {
    if (i < 1 || i > s.n || j < 1 || j > s.n + 1) throw InvalidArgument("alignment_identity: index out of range");
    const double la = s.noise.values(i - 1);
    const double lsj = s.spiked.values(j - 1);
    if (std::abs(la - lsj) < 1e-8 * s.noise.values(0))
        throw NumericalError("alignment_identity: lambda_i^A and lambda_j^S nearly coincide");
    const auto uA = s.noise.vectors.col(i - 1);
    const auto uS = s.spiked.vectors.col(j - 1);
    AlignmentPair out;
    out.i = i;
    out.j = j;
    const double a = uA.dot(uS), b = s.u1.dot(uS), g = uA.dot(s.u1);
    out.overlap_sq = b * b;
    out.lhs = a * a / (b * b);
    out.rhs = s.lambda1 * s.lambda1 * g * g / ((la - lsj) * (la - lsj));
    out.fprime = secular_fprime(s, lsj);
    out.overlap_from_fprime = 1.0 / (s.lambda1 * s.lambda1 * out.fprime);
    return out;
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("ls_slope: need at least two points");
    const double m = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t t = 0; t < x.size(); ++t) mx += x[t], my += y[t];
    mx /= m;
    my /= m;
    double sxy = 0, sxx = 0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        sxy += (x[t] - mx) * (y[t] - my);
        sxx += (x[t] - mx) * (x[t] - mx);
    }
    return sxy / sxx;
}

AlignmentScaling alignment_scaling_experiment(const std::vector<int>& dims, double c, int trials, int i,
                                              int j_from_end, double lambda1, double eta, std::uint64_t seed) {
    if (dims.size() < 3) throw InvalidArgument("alignment_scaling_experiment: need at least three sizes");
    if (trials < 1) throw InvalidArgument("alignment_scaling_experiment: trials must be positive");
    AlignmentScaling out;
    std::vector<double> lx, ly;
    for (std::size_t di = 0; di < dims.size(); ++di) {
        const int d = dims[di];
        const int n = static_cast<int>(std::lround(d / c));
        const int j = n - j_from_end;
        if (j < 2 || j == i || j == i - 1 || j > n)
            throw InvalidArgument("alignment_scaling_experiment: j = " + std::to_string(j) + " not admissible");
        std::vector<double> ratios;
        for (int t = 0; t < trials; ++t) {
            const Rank1Sample s = rank1_additive_sample(d, n, lambda1, eta, derive_seed(seed, di, static_cast<std::uint64_t>(t)));
            const AlignmentPair ap = alignment_identity(s, i, j);
            ratios.push_back(ap.lhs);
            out.samples.push_back(ap);
            out.sample_dims.push_back(d);
        }
        const MeanStderr ms = mean_stderr(ratios);
        out.dims.push_back(d);
        out.mean_ratio.push_back(ms.mean);
        out.stderr_ratio.push_back(ms.std_error);
        lx.push_back(std::log(static_cast<double>(d)));
        ly.push_back(std::log(ms.mean));
    }
    out.slope = ls_slope(lx, ly);
    return out;
}

void write_spectrum_csv(const std::vector<double>& eigenvalues, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "index,eigenvalue\n";
    char buf[64];
    for (std::size_t t = 0; t < eigenvalues.size(); ++t) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", t + 1, eigenvalues[t]);
        out << buf;
    }
}

void write_alignment_csv(const AlignmentScaling& a, int trials, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "d,trial,i,j,lhs,rhs\n";
    char buf[128];
    for (std::size_t t = 0; t < a.samples.size(); ++t) {
        const auto& s = a.samples[t];
        std::snprintf(buf, sizeof buf, "%d,%zu,%d,%d,%.17g,%.17g\n", a.sample_dims[t],
                      t % static_cast<std::size_t>(trials), s.i, s.j, s.lhs, s.rhs);
        out << buf;
    }
}

}  // namespace ldae
