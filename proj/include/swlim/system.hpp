#pragma once

// Switched-system container, the common Lyapunov check, normalization to
// P = I, and the per-matrix norm-preserving / norm-stationary subspaces.

#include <swlim/config.hpp>
#include <swlim/linalg.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace swlim {

class SwitchedSystem {
public:
    SwitchedSystem() = default;

    explicit SwitchedSystem(std::vector<Matrix> matrices,
                            std::optional<Matrix> lyapunov = std::nullopt,
                            std::vector<std::string> labels = {})
        : matrices_(std::move(matrices)), lyapunov_(std::move(lyapunov)), labels_(std::move(labels))
    {
        require(!matrices_.empty(), "SwitchedSystem: at least one matrix is required");
        const Eigen::Index d = matrices_.front().rows();
        for (std::size_t i = 0; i < matrices_.size(); ++i) {
            const std::string what = "SwitchedSystem: matrix " + std::to_string(i);
            require_square(matrices_[i], what);
            require(matrices_[i].rows() == d, what + ": dimension differs from matrix 0");
            require_finite(matrices_[i], what);
        }
        if (lyapunov_) {
            require(lyapunov_->rows() == d && lyapunov_->cols() == d, "SwitchedSystem: lyapunov shape mismatch");
            require_finite(*lyapunov_, "SwitchedSystem: lyapunov");
        }
        require(labels_.empty() || labels_.size() == matrices_.size(),
                "SwitchedSystem: label count differs from matrix count");
        lipschitz_ = 0.0;
        for (const auto& b : matrices_)
            lipschitz_ = std::max(lipschitz_, op_norm(b));
    }

    Eigen::Index dim() const { return matrices_.empty() ? 0 : matrices_.front().rows(); }
    std::size_t size() const { return matrices_.size(); }
    const std::vector<Matrix>& matrices() const { return matrices_; }
    const Matrix& matrix(std::size_t i) const { return matrices_.at(i); }
    const std::vector<std::string>& labels() const { return labels_; }

    /// The Lyapunov matrix, identity when none was given.
    Matrix lyapunov() const { return lyapunov_ ? *lyapunov_ : Matrix::Identity(dim(), dim()); }
    bool has_lyapunov() const { return lyapunov_.has_value(); }

    /// True when the coordinates are those in which P = I.
    bool normalized() const { return !lyapunov_ || lyapunov_->isIdentity(0.0); }

    /// max_i |B_i|, the Lipschitz constant of the flow.
    double lipschitz() const { return lipschitz_; }

private:
    std::vector<Matrix> matrices_;
    std::optional<Matrix> lyapunov_;
    std::vector<std::string> labels_;
    double lipschitz_ = 0.0;
};

/// B~ = P^{1/2} B P^{-1/2} for every matrix; the result has P = I.
inline SwitchedSystem normalize_system(const SwitchedSystem& system, const Tolerances& tol = {})
{
    if (!system.has_lyapunov())
        return system;
    const Matrix p = system.lyapunov();
    const double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
    require((p - p.transpose()).cwiseAbs().maxCoeff() <= tol.symmetry * scale,
            "normalize_system: lyapunov matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric_part(p));
    require(es.eigenvalues().minCoeff() > 0.0, "normalize_system: lyapunov matrix is not positive definite");
    const Vector root = es.eigenvalues().cwiseSqrt();
    const Matrix& q = es.eigenvectors();
    const Matrix half = q * root.asDiagonal() * q.transpose();
    const Matrix inv_half = q * root.cwiseInverse().asDiagonal() * q.transpose();

    std::vector<Matrix> out;
    out.reserve(system.size());
    for (const auto& b : system.matrices())
        out.push_back(half * b * inv_half);
    return SwitchedSystem(std::move(out), std::nullopt, system.labels());
}

struct LyapunovVerdict {
    bool pass = true;
    std::size_t index = 0;  // first offending matrix when !pass
    double max_eig = 0.0;   // its largest eigenvalue of B^T + B
    std::vector<double> max_eigs; // per matrix, normalized coordinates
};

/// Checks lambda_max(B_i^T + B_i) <= tol for every normalized B_i.
inline LyapunovVerdict check_common_lyapunov(const SwitchedSystem& system, const Tolerances& tol = {})
{
    const SwitchedSystem norm = system.normalized() ? system : normalize_system(system, tol);
    LyapunovVerdict verdict;
    for (std::size_t i = 0; i < norm.size(); ++i) {
        const Matrix& b = norm.matrix(i);
        const double top = sym_eigenvalues(b + b.transpose()).maxCoeff();
        verdict.max_eigs.push_back(top);
        if (verdict.pass && top > tol.lyapunov) {
            verdict.pass = false;
            verdict.index = i;
            verdict.max_eig = top;
        }
    }
    return verdict;
}

/// ker(B^T + B): the directions where |e^{tB}x|^2 is stationary at t = 0.
inline Subspace compute_K(const Matrix& b, const Tolerances& tol = {})
{
    require_square(b, "compute_K");
    return nullspace(b + b.transpose(), tol.rank, op_norm(b));
}

struct InvariantChain {
    Subspace subspace;
    std::vector<Eigen::Index> dims; // dim W_0, dim W_1, ... until stable
};

/// Largest B-invariant subspace of ker(B^T + B), via
/// W_0 = ker(B^T + B), W_{j+1} = W_j ∩ {x : Bx ∈ W_j}.
inline InvariantChain compute_V_chain(const Matrix& b, const Tolerances& tol = {})
{
    require_square(b, "compute_V");
    require_finite(b, "compute_V");
    const Eigen::Index d = b.rows();
    const double scale = std::max(1.0, op_norm(b));
    require(max_sym_eigenvalue(b + b.transpose()) <= tol.lyapunov * scale,
            "compute_V: B^T + B is not negative semidefinite");

    InvariantChain chain;
    Subspace w = compute_K(b, tol);
    chain.dims.push_back(w.dim());
    for (Eigen::Index step = 0; step <= d && !w.is_zero(); ++step) {
        const Matrix off_w = Matrix::Identity(d, d) - w.projector();
        const Subspace preimage = nullspace(off_w * b, tol.rank, scale);
        Subspace next = subspace_intersect(w, preimage, tol.rank);
        const bool stable = next.dim() == w.dim();
        w = std::move(next);
        if (stable)
            break;
        chain.dims.push_back(w.dim());
    }
    chain.subspace = std::move(w);
    return chain;
}

inline Subspace compute_V(const Matrix& b, const Tolerances& tol = {})
{
    return compute_V_chain(b, tol).subspace;
}

struct MatrixAnalysis {
    std::size_t index = 0;
    Subspace V;
    Subspace K;
    bool is_hurwitz = false;
    double skew_residual = 0.0;
    double complement_spectral_abscissa = 0.0; // -inf when V is the whole space
};

inline MatrixAnalysis analyze_matrix(const Matrix& b, std::size_t index = 0, const Tolerances& tol = {})
{
    MatrixAnalysis out;
    out.index = index;
    out.V = compute_V(b, tol);
    out.K = compute_K(b, tol);
    out.is_hurwitz = out.V.is_zero();

    if (!out.V.is_zero()) {
        const Matrix& q = out.V.basis();
        const Matrix restricted = q.transpose() * b * q;
        out.skew_residual = op_norm(restricted + restricted.transpose()) / 2.0;
    }
    const Subspace perp = out.V.complement();
    if (perp.is_zero()) {
        out.complement_spectral_abscissa = -std::numeric_limits<double>::infinity();
    } else {
        const Matrix& q = perp.basis();
        out.complement_spectral_abscissa = spectral_abscissa(q.transpose() * b * q);
    }
    return out;
}

/// Per-matrix analyses of an already normalized system.
inline std::vector<MatrixAnalysis> analyze_system(const SwitchedSystem& system, const Tolerances& tol = {})
{
    require(system.normalized(), "analyze_system: system must be normalized");
    std::vector<MatrixAnalysis> out;
    out.reserve(system.size());
    for (std::size_t i = 0; i < system.size(); ++i)
        out.push_back(analyze_matrix(system.matrix(i), i, tol));
    return out;
}

inline std::vector<Subspace> v_subspaces(const std::vector<MatrixAnalysis>& analyses)
{
    std::vector<Subspace> out;
    for (const auto& a : analyses)
        out.push_back(a.V);
    return out;
}

inline std::vector<Subspace> k_subspaces(const std::vector<MatrixAnalysis>& analyses)
{
    std::vector<Subspace> out;
    for (const auto& a : analyses)
        out.push_back(a.K);
    return out;
}

} // namespace swlim
