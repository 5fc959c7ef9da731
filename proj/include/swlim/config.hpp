#pragma once

#include <stdexcept>
#include <string>

namespace swlim {

/// Thrown when an eigenvalue of a matrix that must be positive semidefinite
/// is below the clamping threshold.
class not_psd_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Every numerical threshold used across the library, in one place.
/// The CLI overrides individual fields from its flags.
struct Tolerances {
    double rank = 1e-9;            // relative singular-value cutoff for rank/nullspace
    double symmetry = 1e-10;       // asymmetry accepted for "symmetric" inputs
    double spectral_margin = 1e-9; // Hurwitz iff spectral abscissa < -margin
    double lyapunov = 1e-9;        // max eigenvalue of B^T + B accepted as <= 0
    double psd_clamp = 1e-10;      // eigenvalues in [-clamp, 0] are rounded to 0
    double convergence = 1e-8;     // Gram checkpoint difference (operator norm)
    double horizon_cap = 1e4;      // hard stop for S_u estimation
    double su_rank = 1e-6;         // absolute eigenvalue cutoff for rank(S_u)
    double inclusion = 1e-3;       // distance accepted by limit-set inclusion checks
};

inline void require(bool condition, const std::string& message)
{
    if (!condition)
        throw std::invalid_argument(message);
}

} // namespace swlim
