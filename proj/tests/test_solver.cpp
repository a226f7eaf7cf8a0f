#include "ldae/solver.hpp"
#include "ldae/trainer.hpp"

#include <Eigen/SVD>
#include <doctest.h>

using namespace ldae;

namespace {

DataEnsemble ensemble(int d, int n, int r, std::uint64_t seed) {
    EnsembleConfig c;
    c.d = d;
    c.n = n;
    c.r = r;
    c.N_tst = 10;
    c.seed = seed;
    return make_ensemble(c);
}

// Independent route: complete the square with Zt = Z Z^T + n lambda I, so
// n L(W) = ||Y||^2 - ||M||^2 + ||W Zt^{1/2} - M||^2 with M = Y Z^T Zt^{-1/2}.
// Critical points of the rank-k problem are then P_I(M) Zt^{-1/2}.
Matrix square_completion(const Matrix& Y, const Matrix& Z, const IndexSet& I, double lambda) {
    const Eigen::Index d = Z.rows();
    const Matrix Zt = Z * Z.transpose() + Z.cols() * lambda * Matrix::Identity(d, d);
    Eigen::SelfAdjointEigenSolver<Matrix> es(Zt);
    const Matrix inv_sqrt = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                            es.eigenvectors().transpose();
    const Matrix M = Y * Z.transpose() * inv_sqrt;
    Eigen::JacobiSVD<Matrix> js(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Matrix PI = Matrix::Zero(M.rows(), M.cols());
    for (int j : I) PI += js.singularValues()(j) * js.matrixU().col(j) * js.matrixV().col(j).transpose();
    return PI * inv_sqrt;
}

}  // namespace

TEST_CASE("variant names round trip") {
    for (auto v : {ModelVariant::AE, ModelVariant::NOISY_AE, ModelVariant::DAE, ModelVariant::DAE_SKIP})
        CHECK(parse_variant(to_string(v)) == v);
    CHECK(parse_variant("SKIP") == ModelVariant::DAE_SKIP);
    CHECK_THROWS_AS(parse_variant("VAE"), InvalidArgument);
}

TEST_CASE("training pairs follow the model definitions") {
    const DataEnsemble e = ensemble(30, 15, 3, 1);
    const Matrix XA = e.X + e.A;
    CHECK(training_pair(e, ModelVariant::AE).Y == e.X);
    CHECK(training_pair(e, ModelVariant::AE).Z == e.X);
    CHECK(training_pair(e, ModelVariant::NOISY_AE).Y == XA);
    CHECK(training_pair(e, ModelVariant::DAE).Z == XA);
    CHECK(training_pair(e, ModelVariant::DAE_SKIP).Y == -e.A);
}

TEST_CASE("regularized critical points match the square-completion oracle") {
    const DataEnsemble e = ensemble(40, 20, 5, 2);
    for (auto v : {ModelVariant::DAE, ModelVariant::DAE_SKIP}) {
        const TrainingPair tp = training_pair(e, v);
        for (double lambda : {1e-3, 0.5}) {
            for (const IndexSet& I : {IndexSet::first(3), IndexSet{0, 4}, IndexSet{2}, IndexSet{}}) {
                const SolutionRecord rec = critical_point(tp.Y, tp.Z, I, lambda, 3);
                const Matrix oracle = square_completion(tp.Y, tp.Z, I, lambda);
                CHECK((rec.W - oracle).norm() <= 1e-10 * std::max(1.0, oracle.norm()));
                REQUIRE(rec.factors);
                CHECK(rec.factors->W2.cols() == 3);
                CHECK((rec.factors->W2 * rec.factors->W1 - rec.W).norm() < 1e-12 * std::max(1.0, rec.W.norm()));
                CHECK(rec.is_global == (I == IndexSet::first(3)));
            }
        }
    }
}

TEST_CASE("the prefix index set minimizes the loss among critical points") {
    const DataEnsemble e = ensemble(30, 15, 4, 3);
    const TrainingPair tp = training_pair(e, ModelVariant::DAE);
    const double lambda = 1e-2;
    const double best = loss_value(critical_point(tp.Y, tp.Z, IndexSet::first(2), lambda).W, tp.Y, tp.Z, lambda);
    for (const IndexSet& I : {IndexSet{0, 2}, IndexSet{1, 2}, IndexSet{0, 3}, IndexSet{2, 3}, IndexSet{0}})
        CHECK(loss_value(critical_point(tp.Y, tp.Z, I, lambda).W, tp.Y, tp.Z, lambda) > best);
    // random rank-2 matrices never do better
    Rng rng(4);
    for (int t = 0; t < 50; ++t) {
        const Matrix W = standard_gaussian(30, 2, rng) * standard_gaussian(2, 30, rng) * 0.05;
        CHECK(loss_value(W, tp.Y, tp.Z, lambda) >= best);
    }
}

TEST_CASE("ridgeless loss identity n L = Tr(Y Y^T) - sum over I of eigenvalues of G") {
    const DataEnsemble e = ensemble(40, 20, 5, 5);
    for (auto v : {ModelVariant::DAE, ModelVariant::DAE_SKIP}) {
        const TrainingPair tp = training_pair(e, v);
        const Vector ev = sym_eigenvalues(gram(tp.Y, tp.Z, 0.0));
        for (const IndexSet& I : {IndexSet::first(2), IndexSet{1, 3}, IndexSet{4}}) {
            double drop = 0.0;
            for (int i : I) drop += ev(i);
            const double lhs = e.n * loss_value(ridgeless_critical_point(tp.Y, tp.Z, I).W, tp.Y, tp.Z, 0.0);
            const double rhs = tp.Y.squaredNorm() - drop;
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
        }
    }
}

TEST_CASE("small lambda approaches the ridgeless solution") {
    const DataEnsemble e = ensemble(40, 20, 5, 6);
    const TrainingPair tp = training_pair(e, ModelVariant::DAE);
    const Matrix W0 = ridgeless_critical_point(tp.Y, tp.Z, IndexSet::first(3)).W;
    const Matrix Wl = critical_point(tp.Y, tp.Z, IndexSet::first(3), 1e-10).W;
    CHECK((W0 - Wl).norm() < 1e-6 * W0.norm());
    // full column rank Z: W = P_I(Y) Z^+
    const Matrix direct = project_components(tp.Y, IndexSet::first(3)) * pinv(tp.Z);
    CHECK((W0 - direct).norm() < 1e-10 * direct.norm());
    CHECK((critical_point(tp.Y, tp.Z, IndexSet::first(3), 0.0).W - W0).norm() < 1e-10 * W0.norm());
}

TEST_CASE("ridgeless solver handles rank-deficient inputs honestly") {
    const DataEnsemble e = ensemble(30, 15, 3, 7);
    // AE: Y = Z = X has rank r < n, but Y lies in the row space of Z
    const SolutionRecord ae = ridgeless_critical_point(e.X, e.X, IndexSet::first(2));
    CHECK((ae.W * e.X - project_components(e.X, IndexSet::first(2))).norm() < 1e-10);
    // NOISY_AE: Y = X + A does not lie in the row space of X
    const TrainingPair noisy = training_pair(e, ModelVariant::NOISY_AE);
    CHECK_THROWS_AS(ridgeless_critical_point(noisy.Y, noisy.Z, IndexSet::first(2)), InvalidArgument);
    CHECK_THROWS_AS(critical_point(e.X, e.X, IndexSet::first(2), 0.0), InvalidArgument);
    CHECK_NOTHROW(critical_point(noisy.Y, noisy.Z, IndexSet::first(2), 1e-3));
}

TEST_CASE("batched critical points equal one-at-a-time solves") {
    const DataEnsemble e = ensemble(40, 20, 5, 12);
    const TrainingPair tp = training_pair(e, ModelVariant::DAE_SKIP);
    const std::vector<IndexSet> sets{IndexSet{}, IndexSet::first(2), IndexSet{1, 4}, IndexSet{3}};
    const auto batch = critical_points(tp.Y, tp.Z, sets, 1e-2, 3);
    REQUIRE(batch.size() == sets.size());
    for (std::size_t i = 0; i < sets.size(); ++i) CHECK(batch[i].W == critical_point(tp.Y, tp.Z, sets[i], 1e-2, 3).W);
    CHECK(critical_points(tp.Y, tp.Z, {}, 1e-2).empty());
}

TEST_CASE("solver argument checks") {
    const DataEnsemble e = ensemble(30, 15, 3, 8);
    const TrainingPair tp = training_pair(e, ModelVariant::DAE);
    CHECK_THROWS_AS(critical_point(tp.Y, tp.Z, IndexSet::first(3), 1e-2, 2), InvalidArgument);
    CHECK_THROWS_AS(critical_point(tp.Y, tp.Z, IndexSet::first(3), -1.0), InvalidArgument);
    CHECK_THROWS_AS(critical_point(tp.Y, Matrix(tp.Z.leftCols(5)), IndexSet::first(1), 1e-2), InvalidArgument);
    CHECK_THROWS_AS(ridgeless_critical_point(tp.Y, tp.Z, IndexSet{40}), InvalidArgument);
}

TEST_CASE("reduced-rank regression family") {
    const DataEnsemble e = ensemble(50, 25, 5, 9);
    const Matrix Z = e.X + e.A;
    const Matrix W0 = rrr_solution(e.X, e.A, 3);
    CHECK((W0 - project_components(e.X, IndexSet::first(3)) * pinv(Z)).norm() < 1e-10 * W0.norm());
    Rng rng(10);
    for (int t = 0; t < 3; ++t) {
        const Matrix C = standard_gaussian(25, 25, rng) * (t + 1.0);
        const Matrix WC = rrr_solution(e.X, e.A, 3, C);
        CHECK(std::abs(loss_value(WC, e.X, Z, 0.0) - loss_value(W0, e.X, Z, 0.0)) < 1e-12);
        CHECK(WC.norm() > W0.norm());  // C = 0 is the minimum-norm member
    }
    CHECK_THROWS_AS(rrr_solution(e.X, e.A, 3, Matrix::Zero(3, 3)), InvalidArgument);
}

TEST_CASE("pseudo-inverse expansion agrees with the direct route") {
    const DataEnsemble e = ensemble(60, 30, 6, 11);
    const WeiBlocks b = wei_blocks(e);
    CHECK((pinv(b.P) * b.H.transpose()).norm() < 1e-10);
    for (const IndexSet& I : {IndexSet::first(6), IndexSet{1, 4}}) {
        const Matrix direct = project_components(e.X, I) * pinv(e.X + e.A);
        CHECK((wei_expansion(e, I) - direct).norm() < 1e-8 * direct.norm());
    }
    const DataEnsemble small = ensemble(30, 28, 4, 12);
    CHECK_THROWS_AS(wei_expansion(small, IndexSet::first(2)), InvalidArgument);
}

TEST_CASE("dae_solution marks the skip variant") {
    const DataEnsemble e = ensemble(30, 15, 3, 13);
    CHECK(dae_solution(e, ModelVariant::DAE_SKIP, IndexSet::first(2)).includes_identity);
    CHECK_FALSE(dae_solution(e, ModelVariant::DAE, IndexSet::first(2)).includes_identity);
}
