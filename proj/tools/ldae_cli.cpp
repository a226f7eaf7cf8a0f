#include "ldae/config.hpp"
#include "ldae/risk.hpp"
#include "ldae/rmt.hpp"
#include "ldae/sweep.hpp"
#include "ldae/trainer.hpp"
#include "ldae/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace ldae;

namespace {

struct Globals {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> workers;
};

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Leftover "--key=value" or "--key value" tokens become config overrides.
std::vector<std::pair<std::string, std::string>> overrides_from(std::vector<std::string> extra) {
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t i = 0; i < extra.size(); ++i) {
        std::string tok = extra[i];
        if (tok.rfind("--", 0) != 0) throw InvalidArgument("unexpected argument '" + tok + "'");
        tok = tok.substr(2);
        const auto eq = tok.find('=');
        if (eq != std::string::npos) {
            out.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
        } else if (i + 1 < extra.size()) {
            out.emplace_back(tok, extra[++i]);
        } else {
            throw InvalidArgument("missing value for --" + tok);
        }
    }
    return out;
}

SweepSpec load_spec(const Globals& g, const CLI::App& app) {
    auto ov = overrides_from(app.remaining(true));
    if (g.seed) ov.emplace_back("seed", std::to_string(*g.seed));
    if (g.out) ov.emplace_back("out", *g.out);
    if (g.workers) ov.emplace_back("workers", std::to_string(*g.workers));
    return parse_config(g.config, ov);
}

// The first grid point of the spec, as a full ensemble.
DataEnsemble first_ensemble(const SweepSpec& spec, std::uint64_t seed) {
    const std::vector<GridPoint> grid = expand_grid(spec);
    if (grid.empty()) throw InvalidArgument("empty grid");
    const GridPoint& p = grid.front();
    EnsembleConfig ec;
    ec.d = p.d;
    ec.n = p.n;
    ec.r = p.r;
    ec.N_tst = spec.n_tst;
    ec.eta_trn = p.eta_trn;
    ec.eta_tst = p.eta_tst;
    ec.cond_bound = spec.cond_bound;
    ec.shape = spec.shape;
    ec.seed = seed;
    return make_ensemble(ec);
}

IndexSet first_set(const SweepSpec& spec) {
    if (!spec.index_sets.empty()) return spec.index_sets.front();
    return IndexSet::first(spec.k.front());
}

void write_text(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

int cmd_sweep(const SweepSpec& spec) {
    const auto rows = run_sweep(spec, spec.workers);
    if (spec.out.empty()) {
        std::cout << format_csv(rows);
    } else {
        emit_csv(rows, spec.out);
        std::cerr << rows.size() << " rows written to " << spec.out << "\n";
    }
    return 0;
}

int cmd_solve(const SweepSpec& spec, const std::string& data_path, int r_override) {
    DataEnsemble ens;
    if (!data_path.empty()) {
        const Matrix raw = load_matrix(data_path);
        const int r = r_override > 0 ? r_override : spec.r.front();
        ens = ensemble_from_matrix(raw, r, spec.eta_trn.front(), spec.eta_tst.front());
        redraw_train_noise(ens, substream(spec.base_seed, 1));
    } else {
        ens = first_ensemble(spec, spec.base_seed);
    }
    const IndexSet I = first_set(spec);
    const int k = std::max<int>(spec.k.front(), static_cast<int>(I.size()));
    std::cout << "variant,index_set,lambda,train_loss,grad_norm,W_fro\n";
    for (ModelVariant v : spec.variants) {
        const TrainingPair tp = training_pair(ens, v);
        const SolutionRecord rec = spec.lambda > 0 ? critical_point(tp.Y, tp.Z, I, spec.lambda, k)
                                                   : ridgeless_critical_point(tp.Y, tp.Z, I, k);
        double gn = 0.0;
        if (rec.factors) {
            const FactorPair g = gradient(rec.factors->W2, rec.factors->W1, tp.Y, tp.Z, spec.lambda);
            gn = std::sqrt(g.W2.squaredNorm() + g.W1.squaredNorm());
        }
        std::cout << to_string(v) << ',' << I.to_string() << ',' << num(spec.lambda) << ','
                  << num(loss_value(rec.W, tp.Y, tp.Z, spec.lambda)) << ',' << num(gn) << ',' << num(rec.W.norm())
                  << '\n';
        if (!spec.out.empty()) {
            const std::string path = spec.out + "." + to_string(v) + ".csv";
            save_matrix(rec.W, path);
            std::cerr << "W written to " << path << "\n";
        }
    }
    return 0;
}

int cmd_risk(const SweepSpec& spec, int outer) {
    const DataEnsemble ens = first_ensemble(spec, spec.base_seed);
    std::string text = "variant,index_set,source,bias,variance,residual,total,stderr\n";
    auto line = [&](ModelVariant v, const IndexSet& I, const RiskBreakdown& rb) {
        text += to_string(v) + "," + I.to_string() + "," + to_string(rb.source) + "," + num(rb.bias) + "," +
                num(rb.variance) + "," + num(rb.residual) + "," + num(rb.total) + "," +
                (rb.std_error ? num(*rb.std_error) : std::string()) + "\n";
    };
    std::vector<IndexSet> sets = spec.index_sets;
    if (sets.empty()) sets.push_back(IndexSet::first(spec.k.front()));
    for (ModelVariant v : spec.variants) {
        for (const IndexSet& I : sets) {
            if ((v == ModelVariant::DAE || v == ModelVariant::DAE_SKIP) && ens.aspect_ratio() > 1.0 &&
                ens.d >= ens.n + ens.r)
                line(v, I, risk_theory(ens, v, I));
            line(v, I, bias_variance_split(dae_solution(ens, v, I), ens));
            line(v, I, monte_carlo_risk(ens, v, I, outer, substream(spec.base_seed, 9)));
        }
    }
    write_text(text, spec.out);
    return 0;
}

int cmd_spectrum(const SweepSpec& spec, bool with_signal) {
    const DataEnsemble ens = first_ensemble(spec, spec.base_seed);
    const std::vector<double> ev = gram_spectrum(with_signal ? Matrix(ens.X + ens.A) : ens.A);
    const MpParams mp = MpParams::make(ens.aspect_ratio(), ens.eta_trn, MpScaling::VAR_OVER_D);
    std::cout << "d=" << ens.d << " n=" << ens.n << " ks=" << num(esm_ks_distance(ev, mp)) << " mp_a=" << num(mp.a)
              << " mp_b=" << num(mp.b) << " top=" << num(ev.front()) << "\n";
    if (!spec.out.empty()) write_spectrum_csv(ev, spec.out);
    return 0;
}

int cmd_align(const SweepSpec& spec, std::vector<int> dims, double c, int trials, int i, int j_from_end,
              double lambda1) {
    const AlignmentScaling a =
        alignment_scaling_experiment(dims, c, trials, i, j_from_end, lambda1, spec.eta_trn.front(), spec.base_seed);
    std::cout << "d,mean_ratio,stderr\n";
    for (std::size_t t = 0; t < a.dims.size(); ++t)
        std::cout << a.dims[t] << ',' << num(a.mean_ratio[t]) << ',' << num(a.stderr_ratio[t]) << '\n';
    std::cout << "slope=" << num(a.slope) << "\n";
    if (!spec.out.empty()) write_alignment_csv(a, trials, spec.out);
    return 0;
}

int cmd_train(const SweepSpec& spec, TrainConfig tc) {
    const DataEnsemble ens = first_ensemble(spec, spec.base_seed);
    const ModelVariant v = spec.variants.front();
    const TrainingPair tp = training_pair(ens, v);
    const int k = spec.k.front();
    tc.lambda = spec.lambda;
    tc.seed = substream(spec.base_seed, 5);
    const SolutionRecord ref = spec.lambda > 0 ? critical_point(tp.Y, tp.Z, IndexSet::first(k), spec.lambda)
                                               : ridgeless_critical_point(tp.Y, tp.Z, IndexSet::first(k));
    const Trajectory tr = train(tp.Y, tp.Z, k, tc, ref.W);
    const Matrix W = tr.final_factors.W2 * tr.final_factors.W1;
    std::cout << "variant=" << to_string(v) << " steps=" << tr.steps << " converged=" << tr.converged
              << " final_loss=" << num(loss_value(W, tp.Y, tp.Z, spec.lambda))
              << " closed_form_loss=" << num(loss_value(ref.W, tp.Y, tp.Z, spec.lambda))
              << " rel_dist=" << num((W - ref.W).norm() / std::max(ref.W.norm(), 1e-300)) << "\n";
    if (!spec.out.empty()) write_trajectory_csv(tr, spec.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linear denoising autoencoder theory and experiments"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "key = value config file");
    app.add_option("--seed", g.seed, "base seed");
    app.add_option("--out", g.out, "output path");
    app.add_option("--workers", g.workers, "worker threads")->check(CLI::PositiveNumber);

    auto* sweep = app.add_subcommand("sweep", "run a configured sweep and emit CSV");

    auto* solve = app.add_subcommand("solve", "closed-form critical points for the first grid point");
    std::string data_path;
    int data_rank = 0;
    solve->add_option("--data", data_path, "comma-separated d x n matrix to use as clean data");
    solve->add_option("--rank", data_rank, "rank truncation for --data");

    auto* risk = app.add_subcommand("risk", "theory, conditional and Monte Carlo risk for the first grid point");
    int outer = 50;
    risk->add_option("--outer", outer, "Monte Carlo noise redraws");

    auto* spectrum = app.add_subcommand("spectrum", "noise Gram spectrum against Marchenko-Pastur");
    bool with_signal = false;
    spectrum->add_flag("--with-signal", with_signal, "use (X + A) instead of A");

    auto* align = app.add_subcommand("align", "rank-1 eigenvector alignment scaling");
    std::vector<int> dims{100, 200, 400, 800};
    double align_c = 2.0, lambda1 = 1.0;
    int align_trials = 50, align_i = 1, align_j = 0;
    align->add_option("--dims", dims, "dimensions")->delimiter(',');
    align->add_option("--aspect", align_c, "d / n");
    align->add_option("--trials", align_trials, "draws per dimension");
    align->add_option("--i", align_i, "noise eigenvector index (one-based)");
    align->add_option("--j-from-end", align_j, "0 picks j = n");
    align->add_option("--lambda1", lambda1, "spike strength");

    auto* trainc = app.add_subcommand("train", "gradient descent on the factored model");
    TrainConfig tc;
    trainc->add_option("--lr", tc.learning_rate, "step size (0: a quarter of the stability bound)");
    trainc->add_option("--steps", tc.max_steps, "step budget");
    trainc->add_option("--init-scale", tc.init_scale, "initial weight scale");
    trainc->add_option("--record-every", tc.record_every, "trajectory stride");

    auto* verify = app.add_subcommand("verify", "run the acceptance criteria");
    std::string level = "fast";
    std::vector<int> only;
    verify->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));
    verify->add_option("--only", only, "criterion ids")->delimiter(',');

    // unmatched subcommand tokens fall through to the top level, so collect them there
    app.allow_extras();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*verify) {
            if (!app.remaining(true).empty()) throw InvalidArgument("verify takes no config overrides");
            const int workers = g.workers.value_or(1);
            std::vector<int> ids = only.empty() ? criteria_for(level == "full" ? VerifyLevel::FULL : VerifyLevel::FAST) : only;
            int failed = 0;
            for (int id : ids) {
                const CriterionResult r = run_criterion(id, workers);
                std::cout << format_result(r) << std::endl;
                if (!r.pass) ++failed;
            }
            std::cout << ids.size() - failed << "/" << ids.size() << " criteria passed\n";
            return failed ? 1 : 0;
        }
        if (*sweep) return cmd_sweep(load_spec(g, app));
        if (*solve) return cmd_solve(load_spec(g, app), data_path, data_rank);
        if (*risk) return cmd_risk(load_spec(g, app), outer);
        if (*spectrum) return cmd_spectrum(load_spec(g, app), with_signal);
        if (*align) return cmd_align(load_spec(g, app), dims, align_c, align_trials, align_i, align_j, lambda1);
        if (*trainc) return cmd_train(load_spec(g, app), tc);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
