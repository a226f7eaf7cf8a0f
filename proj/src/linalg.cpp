#include "ldae/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ldae {

namespace {

// Flip so that the entry of largest magnitude is nonnegative. The first such
// entry wins on exact ties.
bool needs_flip(const Eigen::Ref<const Vector>& v) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v(i));
        if (a > best) {
            best = a;
            arg = i;
        }
    }
    return v.size() > 0 && v(arg) < 0.0;
}

}  // namespace

IndexSet::IndexSet(std::vector<int> zero_based) : idx_(std::move(zero_based)) {
    std::sort(idx_.begin(), idx_.end());
    if (std::adjacent_find(idx_.begin(), idx_.end()) != idx_.end())
        throw InvalidArgument("index set contains duplicates");
    if (!idx_.empty() && idx_.front() < 0)
        throw InvalidArgument("index set contains a negative index");
}

IndexSet::IndexSet(std::initializer_list<int> zero_based) : IndexSet(std::vector<int>(zero_based)) {}

IndexSet IndexSet::first(int k) {
    if (k < 0) throw InvalidArgument("IndexSet::first: negative size");
    std::vector<int> v(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) v[static_cast<std::size_t>(i)] = i;
    return IndexSet(std::move(v));
}

IndexSet IndexSet::range1(int lo, int hi) {
    if (lo < 1 || hi < lo - 1) throw InvalidArgument("IndexSet::range1: bad bounds");
    std::vector<int> v;
    for (int i = lo; i <= hi; ++i) v.push_back(i - 1);
    return IndexSet(std::move(v));
}

IndexSet IndexSet::parse(const std::string& text) {
    // ';' is accepted as well so that to_string output parses back
    std::string norm = text;
    std::replace(norm.begin(), norm.end(), ';', ',');
    std::vector<int> out;
    std::stringstream ss(norm);
    std::string part;
    while (std::getline(ss, part, ',')) {
        part.erase(std::remove_if(part.begin(), part.end(), ::isspace), part.end());
        if (part.empty()) continue;
        try {
            const auto dash = part.find('-');
            if (dash == std::string::npos) {
                out.push_back(std::stoi(part) - 1);
            } else {
                const int lo = std::stoi(part.substr(0, dash));
                const int hi = std::stoi(part.substr(dash + 1));
                if (lo < 1 || hi < lo) throw InvalidArgument("bad range");
                for (int i = lo; i <= hi; ++i) out.push_back(i - 1);
            }
        } catch (const std::logic_error&) {
            throw InvalidArgument("cannot parse index set '" + text + "'");
        }
    }
    return IndexSet(std::move(out));
}

bool IndexSet::contains(int i) const { return std::binary_search(idx_.begin(), idx_.end(), i); }

bool IndexSet::is_prefix() const {
    for (std::size_t j = 0; j < idx_.size(); ++j)
        if (idx_[j] != static_cast<int>(j)) return false;
    return true;
}

std::string IndexSet::to_string() const {
    // one-based, contiguous runs collapsed: "1-5", "2-3;7"
    std::string s;
    std::size_t j = 0;
    while (j < idx_.size()) {
        std::size_t e = j;
        while (e + 1 < idx_.size() && idx_[e + 1] == idx_[e] + 1) ++e;
        if (!s.empty()) s += ';';
        s += std::to_string(idx_[j] + 1);
        if (e > j) s += "-" + std::to_string(idx_[e] + 1);
        j = e + 1;
    }
    return s;
}

Matrix SvdFactors::sigma_matrix() const {
    Matrix s = Matrix::Zero(left_vectors.rows(), right_vectors.rows());
    for (Eigen::Index j = 0; j < singular_values.size(); ++j) s(j, j) = singular_values(j);
    return s;
}

Matrix SvdFactors::reconstruct() const {
    const Eigen::Index m = singular_values.size();
    return left_vectors.leftCols(m) * singular_values.asDiagonal() * right_vectors.leftCols(m).transpose();
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

SvdFactors svd(const Matrix& m) {
    if (!m.allFinite()) throw InvalidArgument("svd: matrix has non-finite entries");
    SvdFactors f;
    const Eigen::Index d = m.rows();
    const Eigen::Index n = m.cols();
    const Eigen::Index p = std::min(d, n);
    if (p == 0) {
        f.left_vectors = Matrix::Identity(d, d);
        f.right_vectors = Matrix::Identity(n, n);
        f.singular_values = Vector(0);
        return f;
    }

    Eigen::BDCSVD<Matrix> solver(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    f.left_vectors = solver.matrixU();
    f.right_vectors = solver.matrixV();
    f.singular_values = solver.singularValues();

    for (Eigen::Index j = 0; j < d; ++j) {
        if (!needs_flip(f.left_vectors.col(j))) continue;
        f.left_vectors.col(j) *= -1.0;
        if (j < p) f.right_vectors.col(j) *= -1.0;
    }
    for (Eigen::Index j = p; j < n; ++j)
        if (needs_flip(f.right_vectors.col(j))) f.right_vectors.col(j) *= -1.0;

    f.reduced_rank = numerical_rank(f.singular_values);
    const double s1 = f.singular_values(0);
    for (Eigen::Index j = 0; j + 1 < f.reduced_rank; ++j)
        if (f.singular_values(j) - f.singular_values(j + 1) <= 1e-9 * s1)
            f.tied_pairs.push_back(static_cast<int>(j));
    return f;
}

Matrix pinv(const SvdFactors& f, Eigen::Index rows, Eigen::Index cols, double tol) {
    Matrix out = Matrix::Zero(cols, rows);
    if (f.singular_values.size() == 0 || f.singular_values(0) == 0.0) return out;
    const double cut = tol * f.singular_values(0);
    for (Eigen::Index j = 0; j < f.singular_values.size(); ++j) {
        const double s = f.singular_values(j);
        if (s <= cut) break;
        out.noalias() += (1.0 / s) * f.right_vectors.col(j) * f.left_vectors.col(j).transpose();
    }
    return out;
}

Matrix pinv(const Matrix& m, double tol) {
    if (!m.allFinite()) throw InvalidArgument("pinv: matrix has non-finite entries");
    if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
    return pinv(svd(m), m.rows(), m.cols(), tol);
}

Matrix project_components(const SvdFactors& f, const IndexSet& set) {
    const Eigen::Index d = f.left_vectors.rows();
    const Eigen::Index n = f.right_vectors.rows();
    Matrix out = Matrix::Zero(d, n);
    for (int j : set) {
        if (j >= f.reduced_rank)
            throw InvalidArgument("project_components: index " + std::to_string(j + 1) +
                                  " exceeds numerical rank " + std::to_string(f.reduced_rank));
        out.noalias() += f.singular_values(j) * f.left_vectors.col(j) * f.right_vectors.col(j).transpose();
    }
    return out;
}

Matrix project_components(const Matrix& m, const IndexSet& set) {
    return project_components(svd(m), set);
}

EigFactors sym_eig(const Matrix& s) {
    if (s.rows() != s.cols()) throw InvalidArgument("sym_eig: matrix is not square");
    if (!s.allFinite()) throw InvalidArgument("sym_eig: matrix has non-finite entries");
    const double scale = s.norm();
    if ((s - s.transpose()).norm() > 1e-10 * std::max(scale, 1e-300))
        throw InvalidArgument("sym_eig: matrix is not symmetric within 1e-10 relative");
    const Matrix sym = 0.5 * (s + s.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) throw NumericalError("sym_eig: eigensolver failed");
    EigFactors f;
    f.values = solver.eigenvalues().reverse();
    f.vectors = solver.eigenvectors().rowwise().reverse();
    for (Eigen::Index j = 0; j < f.vectors.cols(); ++j)
        if (needs_flip(f.vectors.col(j))) f.vectors.col(j) *= -1.0;
    return f;
}

Vector sym_eigenvalues(const Matrix& s) {
    if (s.rows() != s.cols()) throw InvalidArgument("sym_eigenvalues: matrix is not square");
    const Matrix sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("sym_eigenvalues: eigensolver failed");
    return solver.eigenvalues().reverse();
}

int numerical_rank(const Vector& singular_values, double tol) {
    if (singular_values.size() == 0 || singular_values(0) <= 0.0) return 0;
    const double cut = tol * singular_values(0);
    int r = 0;
    for (Eigen::Index j = 0; j < singular_values.size(); ++j)
        if (singular_values(j) > cut) ++r;
    return r;
}

int numerical_rank(const Matrix& m, double tol) {
    if (m.size() == 0) return 0;
    Eigen::BDCSVD<Matrix> solver(m);
    return numerical_rank(Vector(solver.singularValues()), tol);
}

Matrix orthonormal_columns(const Matrix& m) {
    Eigen::HouseholderQR<Matrix> qr(m);
    Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
    // Fix the sign ambiguity of QR so the basis is a deterministic function of m.
    const Matrix r = qr.matrixQR().topRows(m.cols()).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    return q;
}

}  // namespace ldae
