#pragma once

// Dense matrix and subspace primitives. Everything here is a pure function
// of its arguments; matrices are small (d <= 50) and stored densely.

#include <swlim/config.hpp>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace swlim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline bool all_finite(const Matrix& m)
{
    return m.allFinite();
}

inline void require_finite(const Matrix& m, const std::string& what)
{
    require(m.allFinite(), what + ": non-finite entry");
}

inline void require_square(const Matrix& m, const std::string& what)
{
    require(m.rows() >= 1 && m.rows() == m.cols(), what + ": expected a nonempty square matrix");
}

/// Largest singular value.
inline double op_norm(const Matrix& m)
{
    if (m.size() == 0)
        return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

/// Operator norm of a symmetric matrix (largest |eigenvalue|).
inline double sym_op_norm(const Matrix& m)
{
    if (m.size() == 0)
        return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline Matrix symmetric_part(const Matrix& m)
{
    return 0.5 * (m + m.transpose());
}

/// Ascending eigenvalues of the symmetric part of `m`.
inline Vector sym_eigenvalues(const Matrix& m)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric_part(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

inline double max_sym_eigenvalue(const Matrix& m)
{
    return sym_eigenvalues(m).maxCoeff();
}

/// Max real part of the eigenvalues; -inf for an empty matrix.
inline double spectral_abscissa(const Matrix& m)
{
    if (m.size() == 0)
        return -std::numeric_limits<double>::infinity();
    Eigen::EigenSolver<Matrix> es(m, false);
    return es.eigenvalues().real().maxCoeff();
}

/// e^{tA}.
inline Matrix matrix_exponential(const Matrix& a, double t)
{
    require_square(a, "matrix_exponential");
    require_finite(a, "matrix_exponential");
    require(std::isfinite(t), "matrix_exponential: non-finite time");
    if (t == 0.0)
        return Matrix::Identity(a.rows(), a.cols());
    Matrix scaled = t * a;
    return scaled.exp();
}

struct PolarFactors {
    Matrix orthogonal;
    Matrix symmetric;
};

/// M = O S with O orthogonal and S the symmetric PSD square root of M^T M.
/// When M is singular, O is completed so that det(O) = +1.
inline PolarFactors polar_decompose(const Matrix& m)
{
    require_square(m, "polar_decompose");
    require_finite(m, "polar_decompose");
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Matrix u = svd.matrixU();
    const Matrix& v = svd.matrixV();
    const Vector& sigma = svd.singularValues();

    const double smallest = sigma(sigma.size() - 1);
    const bool singular = smallest <= std::numeric_limits<double>::epsilon() * sigma.size() * sigma(0)
                          || sigma(0) == 0.0;
    if (singular && (u * v.transpose()).determinant() < 0.0) {
        // the last singular direction carries no weight in S; flipping it
        // leaves O*S unchanged
        u.col(u.cols() - 1) *= -1.0;
    }

    PolarFactors out;
    out.orthogonal = u * v.transpose();
    Matrix s = v * sigma.asDiagonal() * v.transpose();
    out.symmetric = symmetric_part(s);
    return out;
}

/// Unique symmetric PSD square root. Eigenvalues in [-clamp, 0] are treated as 0.
inline Matrix sym_sqrt(const Matrix& s2, double sym_tol = 1e-10, double clamp = 1e-10)
{
    require_square(s2, "sym_sqrt");
    require_finite(s2, "sym_sqrt");
    const double scale = std::max(1.0, s2.cwiseAbs().maxCoeff());
    require((s2 - s2.transpose()).cwiseAbs().maxCoeff() <= sym_tol * scale,
            "sym_sqrt: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric_part(s2));
    Vector ev = es.eigenvalues();
    if (ev.minCoeff() < -clamp * scale)
        throw not_psd_error("sym_sqrt: eigenvalue " + std::to_string(ev.minCoeff()) + " is negative");
    ev = ev.cwiseMax(0.0).cwiseSqrt();
    Matrix root = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    return symmetric_part(root);
}

/// A linear subspace of R^d stored as a d x k matrix with orthonormal columns.
/// k = 0 is the zero subspace.
class Subspace {
public:
    Subspace() = default;

    static Subspace zero(Eigen::Index ambient)
    {
        require(ambient >= 1, "Subspace: ambient dimension must be positive");
        return Subspace(Matrix(ambient, 0));
    }

    static Subspace full(Eigen::Index ambient)
    {
        require(ambient >= 1, "Subspace: ambient dimension must be positive");
        return Subspace(Matrix::Identity(ambient, ambient));
    }

    /// Trusts that `basis` has orthonormal columns.
    static Subspace from_orthonormal(Matrix basis)
    {
        require(basis.rows() >= 1, "Subspace: ambient dimension must be positive");
        return Subspace(std::move(basis));
    }

    /// Orthonormal basis of the column span of `vectors`; columns whose
    /// singular value is below rel_tol * sigma_max are dropped.
    static Subspace span(const Matrix& vectors, double rel_tol = 1e-9)
    {
        require(vectors.rows() >= 1, "Subspace::span: ambient dimension must be positive");
        require_finite(vectors, "Subspace::span");
        if (vectors.cols() == 0)
            return zero(vectors.rows());
        Eigen::JacobiSVD<Matrix> svd(vectors, Eigen::ComputeFullU);
        const Vector& sigma = svd.singularValues();
        if (sigma(0) == 0.0)
            return zero(vectors.rows());
        Eigen::Index rank = 0;
        while (rank < sigma.size() && sigma(rank) > rel_tol * sigma(0))
            ++rank;
        return Subspace(svd.matrixU().leftCols(rank));
    }

    Eigen::Index ambient_dim() const { return basis_.rows(); }
    Eigen::Index dim() const { return basis_.cols(); }
    bool is_zero() const { return basis_.cols() == 0; }
    const Matrix& basis() const { return basis_; }

    Matrix projector() const { return basis_ * basis_.transpose(); }

    Vector project(const Vector& x) const
    {
        check_vector(x);
        return basis_ * (basis_.transpose() * x);
    }

    double distance(const Vector& x) const { return (x - project(x)).norm(); }

    /// True iff dist(x, U) <= tol * |x|. The zero vector is always contained.
    bool contains(const Vector& x, double tol = 1e-9) const
    {
        return distance(x) <= tol * x.norm();
    }

    /// Orthonormal basis of the orthogonal complement.
    Subspace complement() const
    {
        const Eigen::Index d = ambient_dim();
        if (dim() == 0)
            return full(d);
        if (dim() == d)
            return zero(d);
        Eigen::JacobiSVD<Matrix> svd(basis_, Eigen::ComputeFullU);
        return Subspace(svd.matrixU().rightCols(d - dim()));
    }

private:
    explicit Subspace(Matrix basis) : basis_(std::move(basis)) {}

    void check_vector(const Vector& x) const
    {
        require(x.size() == ambient_dim(), "Subspace: vector dimension mismatch");
    }

    Matrix basis_;
};

/// Span of the right singular vectors of A whose singular values are
/// <= rel_tol * max(sigma_max, scale); the whole space when both are 0.
inline Subspace nullspace(const Matrix& a, double rel_tol = 1e-9, double scale = 0.0)
{
    require(a.cols() >= 1, "nullspace: matrix must have at least one column");
    require_finite(a, "nullspace");
    require(rel_tol > 0.0 && rel_tol < 1.0, "nullspace: rel_tol must be in (0, 1)");
    const Eigen::Index n = a.cols();
    if (a.rows() == 0)
        return Subspace::full(n);
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
    const Vector& sigma = svd.singularValues();
    const double ref = std::max(sigma.size() == 0 ? 0.0 : sigma(0), scale);
    if (ref == 0.0)
        return Subspace::full(n);
    Eigen::Index rank = 0;
    while (rank < sigma.size() && sigma(rank) > rel_tol * ref)
        ++rank;
    if (rank == n)
        return Subspace::zero(n);
    return Subspace::from_orthonormal(svd.matrixV().rightCols(n - rank));
}

namespace detail {
inline void require_same_ambient(const Subspace& u, const Subspace& w, const char* what)
{
    require(u.ambient_dim() == w.ambient_dim(), std::string(what) + ": ambient dimension mismatch");
}
} // namespace detail

/// U ∩ W, from the nullspace of [Q_U, -Q_W]: a coefficient pair (a, b) with
/// Q_U a = Q_W b names a common vector.
inline Subspace subspace_intersect(const Subspace& u, const Subspace& w, double rel_tol = 1e-9)
{
    detail::require_same_ambient(u, w, "subspace_intersect");
    const Eigen::Index d = u.ambient_dim();
    if (u.is_zero() || w.is_zero())
        return Subspace::zero(d);
    Matrix stacked(d, u.dim() + w.dim());
    stacked << u.basis(), -w.basis();
    const Subspace coeffs = nullspace(stacked, rel_tol);
    if (coeffs.is_zero())
        return Subspace::zero(d);
    const Matrix from_u = u.basis() * coeffs.basis().topRows(u.dim());
    const Matrix from_w = w.basis() * coeffs.basis().bottomRows(w.dim());
    return Subspace::span(0.5 * (from_u + from_w), rel_tol);
}

inline Subspace subspace_sum(const Subspace& u, const Subspace& w, double rel_tol = 1e-9)
{
    detail::require_same_ambient(u, w, "subspace_sum");
    Matrix stacked(u.ambient_dim(), u.dim() + w.dim());
    stacked << u.basis(), w.basis();
    return Subspace::span(stacked, rel_tol);
}

inline bool subspace_contains(const Subspace& u, const Vector& x, double tol = 1e-9)
{
    require(x.size() == u.ambient_dim(), "subspace_contains: ambient dimension mismatch");
    return u.contains(x, tol);
}

/// U ⊆ W: every basis vector of U lies in W to `tol`.
inline bool subspace_included(const Subspace& u, const Subspace& w, double tol = 1e-9)
{
    detail::require_same_ambient(u, w, "subspace_included");
    for (Eigen::Index j = 0; j < u.dim(); ++j)
        if (w.distance(u.basis().col(j)) > tol)
            return false;
    return true;
}

inline bool subspace_equal(const Subspace& u, const Subspace& w, double tol = 1e-9)
{
    return u.dim() == w.dim() && subspace_included(u, w, tol) && subspace_included(w, u, tol);
}

/// Principal angles (ascending, radians) between U and W; min(dim U, dim W) values.
inline std::vector<double> principal_angles(const Subspace& u, const Subspace& w)
{
    detail::require_same_ambient(u, w, "principal_angles");
    std::vector<double> angles;
    if (u.is_zero() || w.is_zero())
        return angles;
    const Matrix cross = u.basis().transpose() * w.basis();
    Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Index k = svd.singularValues().size();
    // the sine form is accurate for small angles where acos(cos) is not
    const Matrix pu = u.basis() * svd.matrixU();
    const Matrix pw = w.basis() * svd.matrixV();
    for (Eigen::Index j = 0; j < k; ++j) {
        const double s = (pu.col(j) - pw.col(j)).norm() / 2.0;
        angles.push_back(2.0 * std::asin(std::min(1.0, s)));
    }
    std::sort(angles.begin(), angles.end());
    return angles;
}

/// Intersection of a list; the full space for an empty list.
inline Subspace intersect_all(const std::vector<Subspace>& spaces, Eigen::Index ambient, double rel_tol = 1e-9)
{
    Subspace acc = Subspace::full(ambient);
    for (const auto& s : spaces)
        acc = subspace_intersect(acc, s, rel_tol);
    return acc;
}

inline Subspace sum_all(const std::vector<Subspace>& spaces, Eigen::Index ambient, double rel_tol = 1e-9)
{
    Subspace acc = Subspace::zero(ambient);
    for (const auto& s : spaces)
        acc = subspace_sum(acc, s, rel_tol);
    return acc;
}

} // namespace swlim
