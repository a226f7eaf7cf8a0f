#include "ldae/linalg.hpp"
#include "ldae/random.hpp"

#include <Eigen/SVD>
#include <doctest.h>

using namespace ldae;

namespace {

Matrix low_rank(int d, int n, int rank, Rng& rng) {
    return standard_gaussian(d, rank, rng) * standard_gaussian(rank, n, rng);
}

}  // namespace

TEST_CASE("index sets parse, print and order") {
    CHECK(IndexSet::parse("1-3;8").indices() == std::vector<int>{0, 1, 2, 7});
    CHECK(IndexSet::parse("2,4,7").to_string() == "2;4;7");
    CHECK(IndexSet::parse("").empty());
    CHECK(IndexSet::first(4).is_prefix());
    CHECK_FALSE(IndexSet::range1(2, 4).is_prefix());
    CHECK(IndexSet::range1(2, 4) == IndexSet{1, 2, 3});
    CHECK(IndexSet{3, 1}.indices() == std::vector<int>{1, 3});
    CHECK(IndexSet::parse(IndexSet::parse("1-5;8").to_string()) == IndexSet::parse("1-5;8"));
    CHECK_THROWS_AS(IndexSet::parse("0"), InvalidArgument);
    CHECK_THROWS_AS(IndexSet::parse("a-b"), InvalidArgument);
    CHECK_THROWS_AS(IndexSet(std::vector<int>{1, 1}), InvalidArgument);
}

TEST_CASE("svd agrees with an independent Jacobi decomposition") {
    Rng rng(11);
    for (auto [d, n] : {std::pair{12, 7}, std::pair{7, 12}, std::pair{9, 9}}) {
        const Matrix M = standard_gaussian(d, n, rng);
        const SvdFactors f = svd(M);
        Eigen::JacobiSVD<Matrix> oracle(M);
        CHECK((f.singular_values - oracle.singularValues()).norm() < 1e-12);
        CHECK((f.reconstruct() - M).norm() < 1e-12 * M.norm());
        CHECK((f.left_vectors.transpose() * f.left_vectors - Matrix::Identity(d, d)).norm() < 1e-12);
        CHECK((f.right_vectors.transpose() * f.right_vectors - Matrix::Identity(n, n)).norm() < 1e-12);
        CHECK(f.reduced_rank == std::min(d, n));
    }
}

TEST_CASE("svd sign convention makes repeated calls identical") {
    Rng rng(12);
    const Matrix M = standard_gaussian(10, 6, rng);
    const SvdFactors a = svd(M), b = svd(Matrix(M));
    CHECK(a.left_vectors == b.left_vectors);
    CHECK(a.right_vectors == b.right_vectors);
    const SvdFactors neg = svd(Matrix(-M));
    // same singular values, and the sign rule still reproduces -M
    CHECK((neg.singular_values - a.singular_values).norm() < 1e-12);
    CHECK((neg.reconstruct() + M).norm() < 1e-12);
}

TEST_CASE("Eckart-Young: truncation error equals the tail and beats random rank-k candidates") {
    Rng rng(13);
    const Matrix M = standard_gaussian(15, 10, rng);
    const SvdFactors f = svd(M);
    for (int k = 0; k <= 10; ++k) {
        const Matrix Mk = project_components(M, IndexSet::first(k));
        const double tail = f.singular_values.tail(10 - k).squaredNorm();
        CHECK((M - Mk).squaredNorm() == doctest::Approx(tail).epsilon(1e-10).scale(1.0));
        CHECK(numerical_rank(Mk) == k);
        for (int t = 0; t < 20 && k > 0; ++t) {
            const Matrix cand = low_rank(15, 10, k, rng);
            CHECK((M - cand).squaredNorm() >= tail - 1e-12);
        }
    }
}

TEST_CASE("project_components over an arbitrary index set") {
    Rng rng(14);
    const Matrix M = standard_gaussian(8, 6, rng);
    const SvdFactors f = svd(M);
    const IndexSet I{0, 2, 5};
    Matrix expect = Matrix::Zero(8, 6);
    for (int j : I) expect += f.singular_values(j) * f.left_vectors.col(j) * f.right_vectors.col(j).transpose();
    CHECK((project_components(M, I) - expect).norm() < 1e-12);
    CHECK((project_components(M, IndexSet::first(6)) - M).norm() < 1e-12);
    CHECK_THROWS_AS(project_components(M, IndexSet{6}), InvalidArgument);
}

TEST_CASE("pinv satisfies the four Moore-Penrose conditions") {
    Rng rng(15);
    const Matrix cases[] = {standard_gaussian(9, 5, rng), standard_gaussian(5, 9, rng), low_rank(8, 8, 3, rng),
                            Matrix::Zero(4, 3)};
    for (const Matrix& M : cases) {
        const Matrix P = pinv(M);
        const double s = std::max(1.0, M.norm());
        CHECK((M * P * M - M).norm() < 1e-10 * s);
        CHECK((P * M * P - P).norm() < 1e-10 * std::max(1.0, P.norm()));
        CHECK(((M * P).transpose() - M * P).norm() < 1e-10);
        CHECK(((P * M).transpose() - P * M).norm() < 1e-10);
    }
    const Matrix full = standard_gaussian(6, 6, rng);
    CHECK((pinv(full) - full.inverse()).norm() < 1e-9 * full.inverse().norm());
}

TEST_CASE("symmetric eigendecomposition is sorted and exact on a known spectrum") {
    Rng rng(16);
    const Matrix Q = orthonormal_columns(standard_gaussian(6, 6, rng));
    Vector lam(6);
    lam << 5, 3, 3, 1, 0, -2;
    const Matrix S = Q * lam.asDiagonal() * Q.transpose();
    const EigFactors e = sym_eig(S);
    CHECK((e.values - lam).norm() < 1e-12);
    CHECK((e.vectors * e.values.asDiagonal() * e.vectors.transpose() - S).norm() < 1e-12);
    CHECK((sym_eigenvalues(S) - lam).norm() < 1e-12);
}

TEST_CASE("orthonormal_columns spans the input with positive diagonal") {
    Rng rng(17);
    const Matrix M = standard_gaussian(10, 4, rng);
    const Matrix Q = orthonormal_columns(M);
    CHECK((Q.transpose() * Q - Matrix::Identity(4, 4)).norm() < 1e-13);
    CHECK((Q * Q.transpose() * M - M).norm() < 1e-12 * M.norm());
    const Matrix R = Q.transpose() * M;
    for (int i = 0; i < 4; ++i) CHECK(R(i, i) > 0);
}

TEST_CASE("numerical rank and finiteness") {
    Rng rng(18);
    CHECK(numerical_rank(low_rank(10, 10, 4, rng)) == 4);
    CHECK(numerical_rank(Matrix(Matrix::Zero(3, 3))) == 0);
    Matrix M = Matrix::Ones(2, 2);
    CHECK(all_finite(M));
    M(0, 1) = std::nan("");
    CHECK_FALSE(all_finite(M));
}

TEST_CASE("tied singular values are reported") {
    Matrix M = Matrix::Zero(4, 3);
    M(0, 0) = 2;
    M(1, 1) = 2;
    M(2, 2) = 1;
    const SvdFactors f = svd(M);
    CHECK(f.tied_pairs == std::vector<int>{0});
}
