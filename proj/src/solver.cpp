#include "ldae/solver.hpp"

#include <algorithm>
#include <cmath>

namespace ldae {

std::string to_string(ModelVariant v) {
    switch (v) {
        case ModelVariant::AE: return "AE";
        case ModelVariant::NOISY_AE: return "NOISY_AE";
        case ModelVariant::DAE: return "DAE";
        case ModelVariant::DAE_SKIP: return "DAE_SKIP";
    }
    return "?";
}

ModelVariant parse_variant(const std::string& s) {
    std::string u;
    for (char ch : s) u += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (u == "AE") return ModelVariant::AE;
    if (u == "NOISY_AE") return ModelVariant::NOISY_AE;
    if (u == "DAE") return ModelVariant::DAE;
    if (u == "DAE_SKIP" || u == "SKIP") return ModelVariant::DAE_SKIP;
    throw InvalidArgument("unknown model variant '" + s + "' (expected AE, NOISY_AE, DAE, DAE_SKIP)");
}

TrainingPair training_pair(const DataEnsemble& ens, ModelVariant v) {
    if (v != ModelVariant::AE && !ens.has_noise())
        throw InvalidArgument("variant " + to_string(v) + " needs training noise");
    switch (v) {
        case ModelVariant::AE: return {ens.X, ens.X};
        case ModelVariant::NOISY_AE: return {ens.X + ens.A, ens.X};
        case ModelVariant::DAE: return {ens.X, ens.X + ens.A};
        case ModelVariant::DAE_SKIP: return {-ens.A, ens.X + ens.A};
    }
    throw InvalidArgument("bad variant");
}

namespace {

void check_shapes(const Matrix& Y, const Matrix& Z) {
    if (Y.cols() != Z.cols()) throw InvalidArgument("Y and Z must have the same number of columns");
    if (Y.cols() == 0) throw InvalidArgument("empty training set");
}

int resolve_k(const IndexSet& I, int k) {
    if (k < 0) return static_cast<int>(I.size());
    if (static_cast<int>(I.size()) > k)
        throw InvalidArgument("index set has " + std::to_string(I.size()) + " elements but k = " + std::to_string(k));
    return k;
}

void check_index_range(const IndexSet& I, int rank, const char* what) {
    if (I.max() >= rank)
        throw InvalidArgument(std::string(what) + ": index " + std::to_string(I.max() + 1) + " exceeds rank " +
                              std::to_string(rank));
}

// W2 = [U_I | 0], W1 = [U_I^T R; 0]
SolutionRecord assemble(const Matrix& U, const IndexSet& I, const Matrix& R, int k, double lambda) {
    const Eigen::Index d = U.rows();
    FactorPair fp{Matrix::Zero(d, k), Matrix::Zero(k, R.cols())};
    int slot = 0;
    for (int j : I) {
        fp.W2.col(slot) = U.col(j);
        fp.W1.row(slot) = U.col(j).transpose() * R;
        ++slot;
    }
    SolutionRecord rec;
    rec.index_set = I;
    rec.lambda = lambda;
    rec.k = k;
    rec.W = fp.W2 * fp.W1;
    rec.factors = std::move(fp);
    rec.is_global = I.is_prefix() && static_cast<int>(I.size()) == k;
    return rec;
}

}  // namespace

Matrix gram(const Matrix& Y, const Matrix& Z, double lambda) {
    check_shapes(Y, Z);
    if (lambda < 0.0) throw InvalidArgument("gram: lambda must be nonnegative");
    const double n = static_cast<double>(Z.cols());
    const Matrix M = Y * Z.transpose();
    Matrix G;
    if (lambda == 0.0) {
        const Matrix Zp = pinv(Z);
        const Matrix YP = Y * (Zp * Z);
        G = YP * Y.transpose();
    } else {
        Matrix Zt = Z * Z.transpose();
        Zt.diagonal().array() += n * lambda;
        G = M * Eigen::LLT<Matrix>(Zt).solve(M.transpose());
    }
    return 0.5 * (G + G.transpose());
}

std::vector<SolutionRecord> critical_points(const Matrix& Y, const Matrix& Z, const std::vector<IndexSet>& sets,
                                            double lambda, int k) {
    check_shapes(Y, Z);
    if (lambda < 0.0) throw InvalidArgument("critical_point: lambda must be nonnegative");
    std::vector<SolutionRecord> out;
    out.reserve(sets.size());
    if (lambda == 0.0) {
        const int rz = numerical_rank(Z);
        if (rz != std::min(Z.rows(), Z.cols()))
            throw InvalidArgument("critical_point: lambda = 0 with rank-deficient Z; use ridgeless_critical_point");
        for (const IndexSet& I : sets) out.push_back(ridgeless_critical_point(Y, Z, I, k));
        return out;
    }

    const double n = static_cast<double>(Z.cols());
    Matrix Zt = Z * Z.transpose();
    Zt.diagonal().array() += n * lambda;
    const Eigen::LLT<Matrix> llt(Zt);
    if (llt.info() != Eigen::Success) throw NumericalError("critical_point: Cholesky of Z Z^T + n lambda I failed");

    const Matrix M = Y * Z.transpose();
    // G = B B^T with B = M L^{-T}, so U_G comes from an SVD of B without squaring.
    const Matrix Bt = llt.matrixL().solve(M.transpose());
    const SvdFactors fb = svd(Bt.transpose());
    const Matrix R = llt.solve(M.transpose()).transpose();  // M Zt^{-1}
    for (const IndexSet& I : sets) {
        check_index_range(I, fb.reduced_rank, "critical_point");
        out.push_back(assemble(fb.left_vectors, I, R, resolve_k(I, k), lambda));
    }
    return out;
}

SolutionRecord critical_point(const Matrix& Y, const Matrix& Z, const IndexSet& I, double lambda, int k) {
    return std::move(critical_points(Y, Z, {I}, lambda, k).front());
}

SolutionRecord ridgeless_critical_point(const Matrix& Y, const Matrix& Z, const IndexSet& I, int k) {
    check_shapes(Y, Z);
    k = resolve_k(I, k);
    const SvdFactors fz = svd(Z);
    const Matrix Zp = pinv(fz, Z.rows(), Z.cols(), 1e-10);
    const bool full_col = fz.reduced_rank == Z.cols();
    const bool full_row = fz.reduced_rank == Z.rows();

    Matrix M = Y;
    if (!full_col) {
        M = Y * (Zp * Z);
        if (!full_row && (Y - M).norm() > 1e-10 * std::max(1.0, Y.norm()))
            throw InvalidArgument("ridgeless_critical_point: Z is rank-deficient (rank " +
                                  std::to_string(fz.reduced_rank) +
                                  ") and Y is not in its row space; use critical_point with lambda > 0");
    }
    const SvdFactors fm = svd(M);
    check_index_range(I, fm.reduced_rank, "ridgeless_critical_point");
    return assemble(fm.left_vectors, I, M * Zp, k, 0.0);
}

SolutionRecord dae_solution(const DataEnsemble& ens, ModelVariant v, const IndexSet& I, int k) {
    const TrainingPair tp = training_pair(ens, v);
    SolutionRecord rec = ridgeless_critical_point(tp.Y, tp.Z, I, k);
    rec.variant = v;
    rec.includes_identity = v == ModelVariant::DAE_SKIP;
    return rec;
}

Matrix rrr_solution(const Matrix& X, const Matrix& A, int k, const std::optional<Matrix>& C) {
    const Eigen::Index d = X.rows();
    const Eigen::Index n = X.cols();
    if (A.rows() != d || A.cols() != n) throw InvalidArgument("rrr_solution: X and A shapes differ");
    if (d < n) throw InvalidArgument("rrr_solution: requires d >= n");
    if (k == 0) return Matrix::Zero(d, d);
    const SvdFactors fz = svd(X + A);
    if (fz.reduced_rank < n)
        throw InvalidArgument("rrr_solution: X + A is rank-deficient (rank " + std::to_string(fz.reduced_rank) + ")");

    const Matrix Pk = project_components(X, IndexSet::first(k));
    const Matrix PV = Pk * fz.right_vectors;  // d x n
    Matrix left(d, d);
    left.leftCols(n) = PV * fz.singular_values.cwiseInverse().asDiagonal();
    if (d > n) {
        if (C) {
            if (C->rows() != n || C->cols() != d - n) throw InvalidArgument("rrr_solution: C must be n x (d - n)");
            left.rightCols(d - n) = PV * (*C);
        } else {
            left.rightCols(d - n).setZero();
        }
    }
    return left * fz.left_vectors.transpose();
}

WeiBlocks wei_blocks(const DataEnsemble& ens) {
    if (!ens.has_noise()) throw InvalidArgument("wei_expansion: ensemble has no training noise");
    if (ens.d < ens.n + ens.r) throw InvalidArgument("wei_expansion: requires d >= n + r");
    const int r = ens.r;
    const Matrix U = ens.X_factors.left_vectors.leftCols(r);
    const Matrix V = ens.X_factors.right_vectors.leftCols(r);
    const Matrix UD = U * ens.X_factors.singular_values.head(r).asDiagonal();

    const Matrix Ap = pinv(ens.A);
    WeiBlocks b;
    b.P = -(UD - ens.A * (Ap * UD));
    b.H = V.transpose() * Ap;
    b.Zx = Matrix::Identity(r, r) + b.H * UD;
    const Matrix PtP = b.P.transpose() * b.P;
    b.K1 = b.H * b.H.transpose() + b.Zx * PtP.ldlt().solve(b.Zx.transpose());
    return b;
}

Matrix wei_expansion(const DataEnsemble& ens, const IndexSet& I) {
    check_index_range(I, ens.r, "wei_expansion");
    const WeiBlocks b = wei_blocks(ens);
    if (I.empty()) return Matrix::Zero(ens.d, ens.d);

    const int r = ens.r;
    Vector dI = Vector::Zero(r);
    for (int j : I) dI(j) = ens.X_factors.singular_values(j);
    const Matrix UDI = ens.X_factors.left_vectors.leftCols(r) * dI.asDiagonal();

    const Matrix PtP = b.P.transpose() * b.P;
    const Eigen::LDLT<Matrix> ptp(PtP);
    const Eigen::PartialPivLU<Matrix> k1(b.K1);
    const Eigen::PartialPivLU<Matrix> zx(b.Zx);
    const Matrix Pp = ptp.solve(b.P.transpose());  // P^+ for full-column-rank P

    const Matrix first = UDI * ptp.solve(b.Zx.transpose()) * k1.solve(b.H);
    const Matrix second = UDI * zx.solve(b.H * b.H.transpose()) * k1.solve(b.Zx * Pp);
    return first - second;
}

double loss_value(const Matrix& W, const Matrix& Y, const Matrix& Z, double lambda) {
    check_shapes(Y, Z);
    const double n = static_cast<double>(Z.cols());
    return (Y - W * Z).squaredNorm() / n + lambda * W.squaredNorm();
}

double loss_value(const Matrix& W2, const Matrix& W1, const Matrix& Y, const Matrix& Z, double lambda) {
    if (W2.cols() != W1.rows()) throw InvalidArgument("loss_value: W2 and W1 inner dimensions differ");
    return loss_value(Matrix(W2 * W1), Y, Z, lambda);
}

}  // namespace ldae
