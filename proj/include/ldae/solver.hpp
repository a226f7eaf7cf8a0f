#pragma once

#include "ldae/datagen.hpp"
#include "ldae/linalg.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ldae {

/// Input/output pairing used for training.
///   AE       (Y, Z) = (X, X)
///   NOISY_AE (Y, Z) = (X + A, X)
///   DAE      (Y, Z) = (X, X + A)
///   DAE_SKIP (Y, Z) = (-A, X + A), the trainable part of W + I
enum class ModelVariant { AE, NOISY_AE, DAE, DAE_SKIP };

std::string to_string(ModelVariant v);
ModelVariant parse_variant(const std::string& s);

struct TrainingPair {
    Matrix Y;
    Matrix Z;
};
TrainingPair training_pair(const DataEnsemble& ens, ModelVariant v);

struct FactorPair {
    Matrix W2;  // d x k
    Matrix W1;  // k x d
};

struct SolutionRecord {
    ModelVariant variant = ModelVariant::DAE;
    IndexSet index_set;
    double lambda = 0.0;
    int k = 0;
    Matrix W;
    std::optional<FactorPair> factors;
    bool is_global = false;          // I = [k]
    bool includes_identity = false;  // end-to-end map is W + I
};

/// G = Y Z^T (Z Z^T + n lambda I)^{-1} Z Y^T, pseudo-inverse at lambda = 0.
///
/// lambda is the coefficient of ||W||_F^2 in the loss with the 1/n-averaged
/// data term; the n in front of it makes the stationarity condition read
/// W (Z Z^T + n lambda I) = Y Z^T.
Matrix gram(const Matrix& Y, const Matrix& Z, double lambda);

/// Critical point for index set I with bottleneck k (k < 0 means k = |I|).
/// Canonical factors: W2 = U_{G,I} padded with zero columns, W1 the matching
/// rows of W.
SolutionRecord critical_point(const Matrix& Y, const Matrix& Z, const IndexSet& I, double lambda, int k = -1);

/// Same for several index sets, sharing one factorization of Z Z^T + n lambda I.
std::vector<SolutionRecord> critical_points(const Matrix& Y, const Matrix& Z, const std::vector<IndexSet>& sets,
                                            double lambda, int k = -1);

/// lambda -> 0 limit: W = P_I(Y Z^+ Z) Z^+, which is P_I(Y) Z^+ when Z has full
/// column rank. Rank-deficient Z is accepted only if the rows of Y already
/// lie in the row space of Z.
SolutionRecord ridgeless_critical_point(const Matrix& Y, const Matrix& Z, const IndexSet& I, int k = -1);

SolutionRecord dae_solution(const DataEnsemble& ens, ModelVariant v, const IndexSet& I, int k = -1);

/// Rank-constrained one-layer solution [P_k(X) Vb Db^-1 | P_k(X) Vb C] Ub^T
/// from the SVD of X + A. C is n x (d - n); zero when absent.
Matrix rrr_solution(const Matrix& X, const Matrix& A, int k, const std::optional<Matrix>& C = std::nullopt);

/// P_I(X)(X + A)^+ evaluated through the block expansion of the
/// pseudo-inverse of a rank-r perturbation of A. Requires d >= n + r.
Matrix wei_expansion(const DataEnsemble& ens, const IndexSet& I);

/// Pieces of the expansion, exposed for testing.
struct WeiBlocks {
    Matrix P;   // -(I - A A^+) U D
    Matrix H;   // V^T A^+
    Matrix Zx;  // I + V^T A^+ U D
    Matrix K1;  // H H^T + Zx (P^T P)^{-1} Zx^T
};
WeiBlocks wei_blocks(const DataEnsemble& ens);

/// (1/n)||Y - W2 W1 Z||_F^2 + lambda ||W2 W1||_F^2
double loss_value(const Matrix& W2, const Matrix& W1, const Matrix& Y, const Matrix& Z, double lambda);
double loss_value(const Matrix& W, const Matrix& Y, const Matrix& Z, double lambda);

}  // namespace ldae
