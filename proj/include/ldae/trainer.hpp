#pragma once

#include "ldae/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace ldae {

struct TrainConfig {
    double learning_rate = 0.0;  // 0 picks 0.25 / (||Z||_2^2 / n + lambda)
    long max_steps = 20000;
    double lambda = 0.0;
    double init_scale = 1e-2;
    std::uint64_t seed = 0;
    double stop_grad_norm = 1e-10;
    long record_every = 100;
};

struct TrajectoryPoint {
    long step = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    double dist_to_ref = 0.0;  // NaN without a reference
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;
    FactorPair final_factors;
    long steps = 0;
    bool converged = false;
};

/// Partial derivatives of loss_value with respect to W2 and W1, returned as
/// {G2, G1} in a FactorPair.
FactorPair gradient(const Matrix& W2, const Matrix& W1, const Matrix& Y, const Matrix& Z, double lambda);

/// Largest step for which lr * (||Z||_2^2 / n + lambda) < 1.
double stability_bound(const Matrix& Z, double lambda);

/// Full-batch gradient descent from a small Gaussian initialization.
/// Throws NumericalError if the loss exceeds 1e3 times its initial value.
Trajectory train(const Matrix& Y, const Matrix& Z, int k, const TrainConfig& cfg,
                 const std::optional<Matrix>& W_ref = std::nullopt);

/// Columns step,loss,grad_norm,dist_to_ref.
void write_trajectory_csv(const Trajectory& t, const std::filesystem::path& path);

}  // namespace ldae
