#include "ldae/risk.hpp"

#include <algorithm>
#include <cmath>

namespace ldae {

std::string to_string(RiskSource s) {
    switch (s) {
        case RiskSource::THEORY: return "THEORY";
        case RiskSource::MONTE_CARLO: return "MONTE_CARLO";
        case RiskSource::CONDITIONAL: return "CONDITIONAL";
    }
    return "?";
}

double stable_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    // Neumaier compensated summation over the sorted sequence
    double sum = 0.0;
    double comp = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    return sum + comp;
}

MeanStderr mean_stderr(const std::vector<double>& values) {
    MeanStderr out;
    const auto m = values.size();
    if (m == 0) return out;
    out.mean = stable_sum(values) / static_cast<double>(m);
    if (m > 1) {
        std::vector<double> sq;
        sq.reserve(m);
        for (double v : values) sq.push_back((v - out.mean) * (v - out.mean));
        out.std_error = std::sqrt(stable_sum(sq) / static_cast<double>(m - 1) / static_cast<double>(m));
    }
    return out;
}

namespace {

void require_theory_regime(const DataEnsemble& ens, const char* who) {
    if (!(ens.aspect_ratio() > 1.0))
        throw InvalidArgument(std::string(who) + ": requires c = d/n > 1, got c = " + std::to_string(ens.aspect_ratio()));
    if (ens.d < ens.n + ens.r) throw InvalidArgument(std::string(who) + ": requires d >= n + r");
    if (!ens.has_test()) throw InvalidArgument(std::string(who) + ": ensemble has no test set");
}

// ||L_i||^2 / N_tst for each signal row i
Vector test_energy(const DataEnsemble& ens) {
    return ens.L.rowwise().squaredNorm() / static_cast<double>(ens.N_tst);
}

}  // namespace

RiskBreakdown risk_theory_noskip(const DataEnsemble& ens, const IndexSet& I) {
    require_theory_regime(ens, "risk_theory_noskip");
    if (I.max() >= ens.r) throw InvalidArgument("risk_theory_noskip: index set must lie in [r]");
    const double c = ens.aspect_ratio();
    const Vector energy = test_energy(ens);
    const Vector sigma = ens.signal_values();

    RiskBreakdown rb;
    rb.variant = ModelVariant::DAE;
    rb.index_set = I;
    std::vector<double> bias_terms;
    double var_sum = 0.0;
    for (int i = 0; i < ens.r; ++i) {
        double J = 1.0;
        if (I.contains(i)) {
            const double a2 = std::pow(sigma(i) / ens.eta_trn, 2);
            J = 1.0 / ((a2 + 1.0) * (a2 + 1.0));
            var_sum += a2 / (1.0 + a2);
        }
        bias_terms.push_back(J * energy(i));
    }
    rb.bias = stable_sum(bias_terms);
    rb.variance = ens.eta_tst * ens.eta_tst * c / (ens.d * (c - 1.0)) * var_sum;
    rb.total = rb.bias + rb.variance;
    return rb;
}

RiskBreakdown risk_theory_skip(const DataEnsemble& ens, const IndexSet& I) {
    require_theory_regime(ens, "risk_theory_skip");
    if (I.max() >= ens.n) throw InvalidArgument("risk_theory_skip: index set must lie in [n]");
    const double c = ens.aspect_ratio();
    const double d = ens.d;
    const double n = ens.n;
    const double m = static_cast<double>(I.size());
    const double et2 = ens.eta_tst * ens.eta_tst;
    const double er2 = ens.eta_trn * ens.eta_trn;
    const Vector energy = test_energy(ens);
    const Vector sigma = ens.signal_values();

    double trJ = 0.0, s_var = 0.0, s_cross = 0.0;
    for (int i = 0; i < ens.r; ++i) {
        const double s2 = sigma(i) * sigma(i);
        const double q = 1.0 + s2 / er2;
        trJ += (c + (c - 1.0) * s2) / (c * q * q) * energy(i);
        s_var += s2 / (er2 + s2);
        s_cross += er2 * s2 / (er2 + s2);
    }

    RiskBreakdown rb;
    rb.variant = ModelVariant::DAE_SKIP;
    rb.index_set = I;
    rb.variance = et2 * m / (d * d) * (c / (c - 1.0)) * s_var;
    rb.bias = et2 * (1.0 - m / d) + (m / d) * trJ + 3.0 * et2 * m / (d * n) * (1.0 / c) * s_cross;
    rb.total = rb.bias + rb.variance;
    return rb;
}

RiskBreakdown risk_theory(const DataEnsemble& ens, ModelVariant v, const IndexSet& I) {
    if (v == ModelVariant::DAE) return risk_theory_noskip(ens, I);
    if (v == ModelVariant::DAE_SKIP) return risk_theory_skip(ens, I);
    throw InvalidArgument("risk_theory: no closed form for variant " + to_string(v));
}

RiskBreakdown bias_variance_split(const SolutionRecord& rec, const DataEnsemble& ens) {
    if (!ens.has_test()) throw InvalidArgument("bias_variance_split: ensemble has no test set");
    const double N = ens.N_tst;
    const double et2 = ens.eta_tst * ens.eta_tst;
    RiskBreakdown rb;
    rb.source = RiskSource::CONDITIONAL;
    rb.variant = rec.variant;
    rb.index_set = rec.index_set;
    rb.variance = et2 / ens.d * rec.W.squaredNorm();
    if (rec.includes_identity)
        rb.bias = (rec.W * ens.X_tst).squaredNorm() / N + et2 * (1.0 + 2.0 * rec.W.trace() / ens.d);
    else
        rb.bias = (ens.X_tst - rec.W * ens.X_tst).squaredNorm() / N;
    rb.total = rb.bias + rb.variance;
    return rb;
}

EmpiricalRisk risk_empirical(const SolutionRecord& rec, const DataEnsemble& ens, int trials, std::uint64_t seed) {
    if (trials < 1) throw InvalidArgument("risk_empirical: trials must be >= 1");
    if (!ens.has_test()) throw InvalidArgument("risk_empirical: ensemble has no test set");
    const Eigen::Index d = ens.d;
    Matrix Wfull = rec.W;
    if (rec.includes_identity) Wfull += Matrix::Identity(d, d);

    std::vector<double> errs;
    errs.reserve(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
        const Matrix Atst = gen_noise(ens.d, ens.N_tst, ens.eta_tst, derive_seed(seed, 0, static_cast<std::uint64_t>(t)));
        errs.push_back((ens.X_tst - Wfull * (ens.X_tst + Atst)).squaredNorm() / ens.N_tst);
    }
    EmpiricalRisk out;
    const MeanStderr ms = mean_stderr(errs);
    out.sampled.source = RiskSource::MONTE_CARLO;
    out.sampled.variant = rec.variant;
    out.sampled.index_set = rec.index_set;
    out.sampled.total = ms.mean;
    out.sampled.std_error = ms.std_error;
    out.conditional = bias_variance_split(rec, ens);
    out.sampled.bias = out.conditional.bias;
    out.sampled.variance = out.conditional.variance;
    out.sampled.residual = out.sampled.total - out.conditional.total;
    return out;
}

RiskBreakdown monte_carlo_risk(const DataEnsemble& ens, ModelVariant v, const IndexSet& I, int outer_trials,
                               std::uint64_t seed) {
    if (outer_trials < 1) throw InvalidArgument("monte_carlo_risk: outer_trials must be >= 1");
    std::vector<double> tot, bias, var;
    DataEnsemble work = ens;
    for (int t = 0; t < outer_trials; ++t) {
        redraw_train_noise(work, derive_seed(seed, 1, static_cast<std::uint64_t>(t)));
        const SolutionRecord rec = dae_solution(work, v, I);
        const RiskBreakdown rb = bias_variance_split(rec, work);
        tot.push_back(rb.total);
        bias.push_back(rb.bias);
        var.push_back(rb.variance);
    }
    RiskBreakdown out;
    out.source = RiskSource::MONTE_CARLO;
    out.variant = v;
    out.index_set = I;
    const MeanStderr ms = mean_stderr(tot);
    out.total = ms.mean;
    out.std_error = ms.std_error;
    out.bias = mean_stderr(bias).mean;
    out.variance = mean_stderr(var).mean;
    out.residual = out.total - out.bias - out.variance;
    return out;
}

NormAlignment norm_alignment_identity(const DataEnsemble& ens, ModelVariant v, int k) {
    if (v != ModelVariant::DAE && v != ModelVariant::DAE_SKIP)
        throw InvalidArgument("norm_alignment_identity: variant must be DAE or DAE_SKIP");
    if (!ens.has_noise()) throw InvalidArgument("norm_alignment_identity: ensemble has no training noise");
    NormAlignment out;
    if (k == 0) return out;

    const SvdFactors fz = svd(ens.X + ens.A);
    if (fz.reduced_rank < ens.n) throw InvalidArgument("norm_alignment_identity: X + A is rank-deficient");
    const SvdFactors fs = v == ModelVariant::DAE ? ens.X_factors : svd(ens.A);
    if (k > fs.reduced_rank) throw InvalidArgument("norm_alignment_identity: k exceeds the rank of the target");

    out.direct = dae_solution(ens, v, IndexSet::first(k)).W.squaredNorm();

    const Matrix overlap = fs.right_vectors.leftCols(k).transpose() * fz.right_vectors;  // k x n
    std::vector<double> terms;
    for (Eigen::Index j = 0; j < ens.n; ++j) {
        const double lb = fz.singular_values(j) * fz.singular_values(j);
        for (int i = 0; i < k; ++i) {
            const double li = fs.singular_values(i) * fs.singular_values(i);
            terms.push_back(li * overlap(i, j) * overlap(i, j) / lb);
        }
    }
    out.alignment_sum = stable_sum(std::move(terms));
    return out;
}

}  // namespace ldae
