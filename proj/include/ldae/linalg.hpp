#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace ldae {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when an argument violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical precondition (rank, conditioning) fails.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ordered set of component indices, stored zero-based, strictly increasing.
///
/// Printed and parsed one-based, since that is how index sets are written in
/// configuration files and CSV output ("1-5", "3,4,9").
class IndexSet {
public:
    IndexSet() = default;
    explicit IndexSet(std::vector<int> zero_based);
    IndexSet(std::initializer_list<int> zero_based);

    /// {0, ..., k-1}
    static IndexSet first(int k);
    /// One-based inclusive range [lo, hi].
    static IndexSet range1(int lo, int hi);
    /// Parses "1-5", "2,4,7", "1-3,8" (or with ";") or "" (empty set).
    static IndexSet parse(const std::string& text);

    [[nodiscard]] const std::vector<int>& indices() const { return idx_; }
    [[nodiscard]] std::size_t size() const { return idx_.size(); }
    [[nodiscard]] bool empty() const { return idx_.empty(); }
    [[nodiscard]] bool contains(int i) const;
    [[nodiscard]] int max() const { return idx_.empty() ? -1 : idx_.back(); }
    /// True when the set is exactly {0, ..., size-1}.
    [[nodiscard]] bool is_prefix() const;
    [[nodiscard]] std::string to_string() const;

    auto begin() const { return idx_.begin(); }
    auto end() const { return idx_.end(); }

    friend bool operator==(const IndexSet&, const IndexSet&) = default;

private:
    std::vector<int> idx_;
};

/// Full SVD M = U diag(s) V^T with a deterministic sign convention.
struct SvdFactors {
    Matrix left_vectors;      // d x d
    Vector singular_values;   // min(d, n), nonincreasing
    Matrix right_vectors;     // n x n
    int reduced_rank = 0;     // count of s_j > 1e-10 * s_1
    /// Indices j (zero-based) with s_j and s_{j+1} equal within 1e-9 relative.
    std::vector<int> tied_pairs;

    [[nodiscard]] Matrix sigma_matrix() const;  // d x n
    [[nodiscard]] Matrix reconstruct() const;
};

struct EigFactors {
    Matrix vectors;  // columns are eigenvectors
    Vector values;   // nonincreasing
};

SvdFactors svd(const Matrix& m);

/// Moore-Penrose pseudo-inverse; singular values below tol * s_1 are dropped.
Matrix pinv(const Matrix& m, double tol = 1e-12);
Matrix pinv(const SvdFactors& f, Eigen::Index rows, Eigen::Index cols, double tol = 1e-12);

/// Sum over j in I of s_j u_j v_j^T.
Matrix project_components(const Matrix& m, const IndexSet& set);
Matrix project_components(const SvdFactors& f, const IndexSet& set);

/// Symmetric eigendecomposition, values sorted nonincreasing.
EigFactors sym_eig(const Matrix& s);
/// Eigenvalues only, nonincreasing.
Vector sym_eigenvalues(const Matrix& s);

int numerical_rank(const Matrix& m, double tol = 1e-10);
int numerical_rank(const Vector& singular_values, double tol = 1e-10);

bool all_finite(const Matrix& m);

/// Orthonormal basis of the column space of a full-column-rank matrix.
Matrix orthonormal_columns(const Matrix& m);

}  // namespace ldae
