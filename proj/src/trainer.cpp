#include "ldae/trainer.hpp"

#include "ldae/random.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace ldae {

FactorPair gradient(const Matrix& W2, const Matrix& W1, const Matrix& Y, const Matrix& Z, double lambda) {
    if (W2.cols() != W1.rows() || W1.cols() != Z.rows() || W2.rows() != Y.rows() || Y.cols() != Z.cols())
        throw InvalidArgument("gradient: inconsistent shapes");
    const double n = static_cast<double>(Z.cols());
    const Matrix W = W2 * W1;
    // dL/dW = -(2/n)(Y - W Z) Z^T + 2 lambda W
    const Matrix dW = (-2.0 / n) * ((Y - W * Z) * Z.transpose()) + (2.0 * lambda) * W;
    return {dW * W1.transpose(), W2.transpose() * dW};
}

double stability_bound(const Matrix& Z, double lambda) {
    const double s = Z.size() ? Eigen::BDCSVD<Matrix>(Z).singularValues()(0) : 0.0;
    return 1.0 / (s * s / static_cast<double>(Z.cols()) + lambda);
}

Trajectory train(const Matrix& Y, const Matrix& Z, int k, const TrainConfig& cfg, const std::optional<Matrix>& W_ref) {
    if (k < 1) throw InvalidArgument("train: k must be positive");
    if (cfg.lambda < 0.0) throw InvalidArgument("train: lambda must be nonnegative");
    if (!(cfg.init_scale > 0.0)) throw InvalidArgument("train: init_scale must be positive");
    if (cfg.max_steps < 0 || cfg.record_every < 1) throw InvalidArgument("train: bad step counts");
    const double bound = stability_bound(Z, cfg.lambda);
    const double lr = cfg.learning_rate > 0.0 ? cfg.learning_rate : 0.25 * bound;
    if (!(lr < bound))
        throw InvalidArgument("train: learning rate " + std::to_string(lr) + " violates the stability bound " +
                              std::to_string(bound));

    Rng rng(substream(cfg.seed, 3));
    Matrix W2 = standard_gaussian(Y.rows(), k, rng) * cfg.init_scale;
    Matrix W1 = standard_gaussian(k, Z.rows(), rng) * cfg.init_scale;

    auto sample = [&](long step, double loss, double gnorm) {
        TrajectoryPoint p{step, loss, gnorm, std::numeric_limits<double>::quiet_NaN()};
        if (W_ref) p.dist_to_ref = (W2 * W1 - *W_ref).norm();
        return p;
    };

    Trajectory traj;
    const double loss0 = loss_value(W2, W1, Y, Z, cfg.lambda);
    long step = 0;
    for (;; ++step) {
        const FactorPair g = gradient(W2, W1, Y, Z, cfg.lambda);
        const double gnorm = std::sqrt(g.W2.squaredNorm() + g.W1.squaredNorm());
        const bool done = gnorm <= cfg.stop_grad_norm || step >= cfg.max_steps;
        if (step % cfg.record_every == 0 || done) {
            const double loss = loss_value(W2, W1, Y, Z, cfg.lambda);
            if (!std::isfinite(loss) || loss > 1e3 * loss0)
                throw NumericalError("train: diverged at step " + std::to_string(step));
            traj.points.push_back(sample(step, loss, gnorm));
        }
        if (done) {
            traj.converged = gnorm <= cfg.stop_grad_norm;
            break;
        }
        W2 -= lr * g.W2;
        W1 -= lr * g.W1;
    }
    traj.steps = step;
    traj.final_factors = {std::move(W2), std::move(W1)};
    return traj;
}

void write_trajectory_csv(const Trajectory& t, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "step,loss,grad_norm,dist_to_ref\n";
    char buf[128];
    for (const auto& p : t.points) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g\n", p.step, p.loss, p.grad_norm, p.dist_to_ref);
        out << buf;
    }
}

}  // namespace ldae
