#include "ldae/sweep.hpp"

#include "ldae/rmt.hpp"
#include "ldae/risk.hpp"
#include "ldae/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ldae {

namespace {

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string sanitize(std::string s) {
    for (char& ch : s)
        if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ';';
    return s;
}

ResultRow base_row(const SweepSpec& spec, const GridPoint& g, std::uint64_t seed) {
    ResultRow row;
    row.experiment = to_string(spec.experiment);
    row.d = g.d;
    row.n = g.n;
    row.c = static_cast<double>(g.d) / g.n;
    row.r = g.r;
    row.k = g.k;
    row.eta_trn = g.eta_trn;
    row.eta_tst = g.eta_tst;
    row.seed = seed;
    return row;
}

DataEnsemble ensemble_for(const SweepSpec& spec, const GridPoint& g, std::uint64_t seed) {
    EnsembleConfig ec;
    ec.d = g.d;
    ec.n = g.n;
    ec.r = g.r;
    ec.N_tst = spec.n_tst;
    ec.eta_trn = g.eta_trn;
    ec.eta_tst = g.eta_tst;
    ec.cond_bound = spec.cond_bound;
    ec.shape = spec.shape;
    ec.seed = seed;
    return make_ensemble(ec);
}

SolutionRecord solve_for(const SweepSpec& spec, const DataEnsemble& ens, ModelVariant v, const IndexSet& I, int k) {
    if (spec.lambda == 0.0) return dae_solution(ens, v, I, k);
    const TrainingPair tp = training_pair(ens, v);
    SolutionRecord rec = critical_point(tp.Y, tp.Z, I, spec.lambda, k);
    rec.variant = v;
    rec.includes_identity = v == ModelVariant::DAE_SKIP;
    return rec;
}

// Risk-type experiments: one row per variant and index set.
void risk_rows(const SweepSpec& spec, const GridPoint& g, std::uint64_t seed, std::vector<ResultRow>& rows) {
    const DataEnsemble ens = ensemble_for(spec, g, seed);
    std::vector<IndexSet> sets = spec.index_sets;
    if (sets.empty()) sets.push_back(IndexSet::first(g.k));

    for (ModelVariant v : spec.variants) {
        for (const IndexSet& I : sets) {
            ResultRow row = base_row(spec, g, seed);
            row.variant = to_string(v);
            row.index_set = I.to_string();
            std::string extra;
            try {
                const int k = std::max<int>(g.k, static_cast<int>(I.size()));
                const SolutionRecord rec = solve_for(spec, ens, v, I, k);
                if (spec.inner_trials > 0) {
                    const EmpiricalRisk er = risk_empirical(rec, ens, spec.inner_trials, substream(seed, 4));
                    row.emp_mean = er.sampled.total;
                    row.emp_stderr = er.sampled.std_error;
                    extra += "cond_total=" + num(er.conditional.total) + ";";
                    extra += "emp_bias=" + num(er.conditional.bias) + ";emp_variance=" + num(er.conditional.variance);
                } else {
                    const RiskBreakdown rb = bias_variance_split(rec, ens);
                    row.emp_mean = rb.total;
                    extra += "emp_bias=" + num(rb.bias) + ";emp_variance=" + num(rb.variance);
                }
                const bool has_theory = v == ModelVariant::DAE || v == ModelVariant::DAE_SKIP;
                if (!has_theory) {
                    extra += ";theory=none";
                } else if (!(ens.aspect_ratio() > 1.0) || ens.d < ens.n + ens.r) {
                    extra += ";theory=skipped(requires d >= n + r)";
                } else if (v == ModelVariant::DAE && I.max() >= ens.r) {
                    extra += ";theory=skipped(index beyond r)";
                } else {
                    const RiskBreakdown th = risk_theory(ens, v, I);
                    row.theory_bias = th.bias;
                    row.theory_variance = th.variance;
                    row.theory_total = th.total;
                }
            } catch (const std::exception& e) {
                row.theory_bias = row.theory_variance = row.theory_total = row.emp_mean = row.emp_stderr = std::nullopt;
                extra = "error=" + sanitize(e.what());
            }
            row.extra = extra;
            rows.push_back(std::move(row));
        }
    }
}

void spectrum_rows(const SweepSpec& spec, const GridPoint& g, std::uint64_t seed, std::vector<ResultRow>& rows) {
    const MpParams mp = MpParams::make(static_cast<double>(g.d) / g.n, g.eta_trn, MpScaling::VAR_OVER_D);
    const std::string edges = ";mp_a=" + num(mp.a) + ";mp_b=" + num(mp.b) + ";atom=" + num(mp.atom_mass);
    const DataEnsemble ens = ensemble_for(spec, g, seed);
    const std::pair<const char*, Matrix> cases[] = {{"NOISE", ens.A}, {"SIGNAL_PLUS_NOISE", ens.X + ens.A}};
    for (const auto& [name, M] : cases) {
        ResultRow row = base_row(spec, g, seed);
        row.variant = name;
        try {
            const std::vector<double> ev = gram_spectrum(M);
            row.emp_mean = esm_ks_distance(ev, mp);
            row.extra = "metric=ks" + edges + ";top_eigenvalue=" + num(ev.front());
        } catch (const std::exception& e) {
            row.extra = "error=" + sanitize(e.what());
        }
        rows.push_back(std::move(row));
    }
}

void alignment_rows(const SweepSpec& spec, const GridPoint& g, std::uint64_t seed, std::vector<ResultRow>& rows) {
    ResultRow row = base_row(spec, g, seed);
    row.variant = "RANK1";
    try {
        const Rank1Sample s = rank1_additive_sample(g.d, g.n, 1.0, g.eta_trn, seed);
        const AlignmentPair ap = alignment_identity(s, 1, g.n);
        row.emp_mean = ap.lhs;
        row.theory_total = ap.rhs;
        row.extra = "i=1;j=" + std::to_string(g.n) + ";lambda1=1;overlap_sq=" + num(ap.overlap_sq);
    } catch (const std::exception& e) {
        row.extra = "error=" + sanitize(e.what());
    }
    rows.push_back(std::move(row));
}

void train_rows(const SweepSpec& spec, const GridPoint& g, std::uint64_t seed, std::vector<ResultRow>& rows) {
    const DataEnsemble ens = ensemble_for(spec, g, seed);
    for (ModelVariant v : spec.variants) {
        ResultRow row = base_row(spec, g, seed);
        row.variant = to_string(v);
        row.index_set = IndexSet::first(g.k).to_string();
        try {
            const TrainingPair tp = training_pair(ens, v);
            const SolutionRecord ref = spec.lambda > 0.0 ? critical_point(tp.Y, tp.Z, IndexSet::first(g.k), spec.lambda)
                                                         : ridgeless_critical_point(tp.Y, tp.Z, IndexSet::first(g.k));
            TrainConfig tc;
            tc.lambda = spec.lambda;
            tc.seed = substream(seed, 5);
            tc.max_steps = 50000;
            tc.record_every = 1000;
            const Trajectory tr = train(tp.Y, tp.Z, g.k, tc, ref.W);
            const Matrix W = tr.final_factors.W2 * tr.final_factors.W1;
            row.theory_total = loss_value(ref.W, tp.Y, tp.Z, spec.lambda);
            row.emp_mean = loss_value(W, tp.Y, tp.Z, spec.lambda);
            const double rel = ref.W.norm() > 0 ? (W - ref.W).norm() / ref.W.norm() : (W - ref.W).norm();
            row.extra = "rel_dist=" + num(rel) + ";steps=" + std::to_string(tr.steps) +
                        ";converged=" + (tr.converged ? "1" : "0") + ";lambda=" + num(spec.lambda);
        } catch (const std::exception& e) {
            row.extra = "error=" + sanitize(e.what());
        }
        rows.push_back(std::move(row));
    }
}

std::string opt(const std::optional<double>& x) { return x ? num(*x) : std::string(); }

}  // namespace

std::vector<GridPoint> expand_grid(const SweepSpec& spec) {
    std::vector<std::pair<int, int>> dn;
    if (spec.c.empty()) {
        for (int d : spec.d)
            for (int n : spec.n) dn.emplace_back(d, n);
    } else if (spec.mode == SweepMode::VARY_N) {
        for (int d : spec.d)
            for (double c : spec.c) dn.emplace_back(d, std::max(1, static_cast<int>(std::lround(d / c))));
    } else {
        for (int n : spec.n)
            for (double c : spec.c) dn.emplace_back(std::max(1, static_cast<int>(std::lround(c * n))), n);
    }
    std::vector<GridPoint> out;
    const std::size_t nr = spec.r.size(), nt = spec.eta_trn.size(), ns = spec.eta_tst.size();
    for (std::size_t a = 0; a < dn.size(); ++a)
        for (int k : spec.k)
            for (std::size_t b = 0; b < nr; ++b)
                for (std::size_t c = 0; c < nt; ++c)
                    for (std::size_t e = 0; e < ns; ++e)
                        out.push_back({dn[a].first, dn[a].second, k, spec.r[b], spec.eta_trn[c], spec.eta_tst[e],
                                       ((a * nr + b) * nt + c) * ns + e});
    return out;
}

std::vector<ResultRow> run_sweep(const SweepSpec& spec, int workers) {
    const std::vector<GridPoint> grid = expand_grid(spec);
    const std::size_t trials = static_cast<std::size_t>(spec.trials);
    const std::size_t tasks = grid.size() * trials;
    if (workers <= 0) workers = spec.workers;

    auto run_task = [&](std::size_t idx) {
        const std::size_t p = idx / trials;
        const std::size_t t = idx % trials;
        const GridPoint& g = grid[p];
        const std::uint64_t seed = derive_seed(spec.base_seed, g.data_index, t);
        std::vector<ResultRow> rows;
        try {
            switch (spec.experiment) {
                case Experiment::RISK_CURVE:
                case Experiment::BOTTLENECK_SWEEP:
                case Experiment::CRITICAL_POINT_COMPARE: risk_rows(spec, g, seed, rows); break;
                case Experiment::SPECTRUM: spectrum_rows(spec, g, seed, rows); break;
                case Experiment::ALIGNMENT: alignment_rows(spec, g, seed, rows); break;
                case Experiment::TRAIN_VERIFY: train_rows(spec, g, seed, rows); break;
            }
        } catch (const std::exception& e) {
            // the ensemble itself could not be built
            rows.clear();
            ResultRow row = base_row(spec, g, seed);
            row.extra = "error=" + sanitize(e.what());
            rows.push_back(std::move(row));
        }
        return rows;
    };

    const auto chunks = parallel_map<std::vector<ResultRow>>(tasks, workers, run_task);
    std::vector<ResultRow> rows;
    for (const auto& ch : chunks) rows.insert(rows.end(), ch.begin(), ch.end());
    return rows;
}

const std::vector<std::string>& csv_header() {
    static const std::vector<std::string> h = {
        "experiment", "variant", "d",           "n",               "c",            "r",        "k",          "eta_trn", "eta_tst",
        "seed",       "index_set", "theory_bias", "theory_variance", "theory_total", "emp_mean", "emp_stderr", "extra"};
    return h;
}

std::string format_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream o;
    const auto& h = csv_header();
    for (std::size_t i = 0; i < h.size(); ++i) o << (i ? "," : "") << h[i];
    o << '\n';
    for (const auto& r : rows) {
        o << r.experiment << ',' << r.variant << ',' << r.d << ',' << r.n << ',' << num(r.c) << ',' << r.r << ','
          << r.k << ',' << num(r.eta_trn) << ',' << num(r.eta_tst) << ',' << r.seed << ',' << r.index_set << ','
          << opt(r.theory_bias) << ',' << opt(r.theory_variance) << ',' << opt(r.theory_total) << ','
          << opt(r.emp_mean) << ',' << opt(r.emp_stderr) << ',' << r.extra << '\n';
    }
    return o.str();
}

void emit_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << format_csv(rows);
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace ldae
