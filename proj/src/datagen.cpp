#include "ldae/datagen.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace ldae {

Matrix standard_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

Vector random_unit_vector(Eigen::Index dim, Rng& rng) {
    Vector v = standard_gaussian(dim, 1, rng).col(0);
    return v / v.norm();
}

DataEnsemble gen_clean(const CleanConfig& cfg) {
    if (cfg.d < 1 || cfg.n < 1) throw InvalidArgument("gen_clean: d and n must be positive");
    if (cfg.r < 1 || cfg.r > std::min(cfg.d, cfg.n))
        throw InvalidArgument("gen_clean: need 1 <= r <= min(d, n), got r = " + std::to_string(cfg.r));
    if (!(cfg.cond_bound >= 1.0)) throw InvalidArgument("gen_clean: cond_bound must be >= 1");

    Rng rng(substream(cfg.seed, 0));
    const Matrix U = orthonormal_columns(standard_gaussian(cfg.d, cfg.r, rng));
    const Matrix V = orthonormal_columns(standard_gaussian(cfg.n, cfg.r, rng));

    Vector sigma = Vector::Ones(cfg.r);
    if (cfg.shape == SpectrumShape::LogUniform && cfg.r > 1) {
        const double lo = -std::log(cfg.cond_bound);
        std::uniform_real_distribution<double> unif(lo, 0.0);
        sigma(cfg.r - 1) = 1.0 / cfg.cond_bound;
        for (int j = 1; j + 1 < cfg.r; ++j) sigma(j) = std::exp(unif(rng));
        std::sort(sigma.data() + 1, sigma.data() + cfg.r - 1, std::greater<>());
    }

    DataEnsemble ens;
    ens.d = cfg.d;
    ens.n = cfg.n;
    ens.r = cfg.r;
    ens.seed = cfg.seed;
    ens.cond_bound = cfg.cond_bound;
    ens.X = U * sigma.asDiagonal() * V.transpose();
    ens.X_factors = svd(ens.X);
    const double s1 = ens.X_factors.singular_values(0);
    ens.X /= s1;
    ens.X_factors.singular_values /= s1;
    ens.X_factors.singular_values(0) = 1.0;
    ens.X_factors.reduced_rank = numerical_rank(ens.X_factors.singular_values);
    return ens;
}

Matrix gen_noise(int d, int n, double eta, std::uint64_t seed) {
    if (!(eta > 0.0)) throw InvalidArgument("gen_noise: eta must be positive");
    Rng rng(seed);
    return standard_gaussian(d, n, rng) * (eta / std::sqrt(static_cast<double>(d)));
}

TestSet make_test(const DataEnsemble& ens, const Matrix& L) {
    if (L.rows() != ens.r) throw InvalidArgument("make_test: L must have r rows");
    return TestSet{L, ens.signal_basis() * L};
}

TestSet gen_test(const DataEnsemble& ens, int N_tst, std::uint64_t seed) {
    if (N_tst < 1) throw InvalidArgument("gen_test: N_tst must be positive");
    if (ens.X.size() == 0) throw InvalidArgument("gen_test: ensemble has no clean data");
    // E||U l||^2 = r s^2 must equal ||X||_F^2 / n.
    const double mean_sq_col = ens.X.squaredNorm() / ens.n;
    const double s = std::sqrt(mean_sq_col / ens.r);
    Rng rng(seed);
    return make_test(ens, standard_gaussian(ens.r, N_tst, rng) * s);
}

DataEnsemble make_ensemble(const EnsembleConfig& cfg) {
    DataEnsemble ens = gen_clean({cfg.d, cfg.n, cfg.r, cfg.cond_bound, cfg.shape, cfg.seed});
    ens.eta_trn = cfg.eta_trn;
    ens.eta_tst = cfg.eta_tst;
    ens.A = gen_noise(cfg.d, cfg.n, cfg.eta_trn, substream(cfg.seed, 1));
    auto test = gen_test(ens, cfg.N_tst, substream(cfg.seed, 2));
    ens.N_tst = cfg.N_tst;
    ens.L = std::move(test.L);
    ens.X_tst = std::move(test.X_tst);
    return ens;
}

void redraw_train_noise(DataEnsemble& ens, std::uint64_t seed) {
    ens.A = gen_noise(ens.d, ens.n, ens.eta_trn, seed);
}

DataEnsemble ensemble_from_matrix(const Matrix& raw, int r, double eta_trn, double eta_tst,
                                  std::optional<double> target_snr) {
    if (r < 1 || r > std::min(raw.rows(), raw.cols()))
        throw InvalidArgument("ensemble_from_matrix: r out of range");
    const SvdFactors f = svd(raw);
    if (f.reduced_rank < r)
        throw InvalidArgument("ensemble_from_matrix: matrix has numerical rank " +
                              std::to_string(f.reduced_rank) + " < r");
    DataEnsemble ens;
    ens.d = static_cast<int>(raw.rows());
    ens.n = static_cast<int>(raw.cols());
    ens.r = r;
    ens.eta_trn = eta_trn;
    ens.eta_tst = eta_tst;
    ens.X = project_components(f, IndexSet::first(r));

    double scale = 1.0 / f.singular_values(0);
    if (target_snr) {
        // ||A||_2 concentrates at the square root of the upper MP edge.
        const double c = static_cast<double>(ens.d) / ens.n;
        const double noise_norm = eta_trn * (1.0 + std::sqrt(c)) / std::sqrt(c);
        scale *= *target_snr * noise_norm;
    }
    ens.X *= scale;
    ens.X_factors = svd(ens.X);
    ens.cond_bound = ens.X_factors.singular_values(0) / ens.X_factors.singular_values(r - 1);
    return ens;
}

void validate(const DataEnsemble& ens, bool require_overparameterized) {
    auto fail = [](const std::string& what) { throw InvalidArgument("invalid ensemble: " + what); };
    if (ens.X.rows() != ens.d || ens.X.cols() != ens.n) fail("X shape does not match (d, n)");
    if (ens.r < 1 || ens.r > std::min(ens.d, ens.n)) fail("r out of range");
    if (!(ens.eta_trn > 0.0) || !(ens.eta_tst > 0.0)) fail("noise scales must be positive");
    if (!all_finite(ens.X) || !all_finite(ens.A) || !all_finite(ens.X_tst)) fail("non-finite entries");
    const Vector& s = ens.X_factors.singular_values;
    if (s.size() == 0) fail("missing factors");
    if (std::abs(s(0) - 1.0) > 1e-12) fail("||X||_2 != 1");
    if (numerical_rank(s) != ens.r) fail("numerical rank != r");
    if (s(0) / s(ens.r - 1) > ens.cond_bound * (1.0 + 1e-9)) fail("condition bound exceeded");
    if (ens.has_noise() && (ens.A.rows() != ens.d || ens.A.cols() != ens.n)) fail("A shape mismatch");
    if (ens.has_test()) {
        if (ens.X_tst.cols() != ens.N_tst || ens.L.cols() != ens.N_tst) fail("N_tst mismatch");
        const Matrix U = ens.signal_basis();
        const Matrix resid = ens.X_tst - U * (U.transpose() * ens.X_tst);
        if (resid.norm() > 1e-10 * std::max(1.0, ens.X_tst.norm())) fail("X_tst leaves the signal subspace");
    }
    if (require_overparameterized && ens.d < ens.n + ens.r) fail("requires d >= n + r");
}

Matrix load_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            const auto b = tok.find_first_not_of(" \t");
            const auto e = tok.find_last_not_of(" \t");
            if (b == std::string::npos) throw ParseError("empty field", lineno);
            tok = tok.substr(b, e - b + 1);
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(tok.c_str(), &end);
            if (end != tok.c_str() + tok.size() || errno == ERANGE)
                throw ParseError("non-numeric token '" + tok + "'", lineno);
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError("ragged row: expected " + std::to_string(rows.front().size()) + " values, got " +
                                 std::to_string(row.size()),
                             lineno);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("no data rows", lineno);
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

void save_matrix(const Matrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    char buf[32];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            if (j) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace ldae
