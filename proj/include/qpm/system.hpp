#pragma once

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "qpm/mat4.hpp"

namespace qpm {

/// Which diagonal the restoring terms use: alpha^2, beta^2 or plain alpha, beta.
enum class Variant { SquaredDiagonal, PlainDiagonal };

/// Grid point alpha = i/n, beta = j/n. Both frequencies must be positive and
/// at most 1, so 1 <= i, j <= n.
struct RationalPoint {
    int i = 1;
    int j = 1;
    int n = 1;

    RationalPoint() = default;
    RationalPoint(int i_, int j_, int n_) : i(i_), j(j_), n(n_) {
        if (n < 1 || i < 1 || j < 1 || i > n || j > n)
            throw std::invalid_argument("RationalPoint: need 1 <= i, j <= n");
    }

    double alpha() const { return static_cast<double>(i) / n; }
    double beta() const { return static_cast<double>(j) / n; }
};

/// Common period of cos(alpha t) and cos(beta t) on the rational grid.
inline double fundamental_period(const RationalPoint& p) {
    const int g = std::gcd(p.i, p.j);
    return 2.0 * std::numbers::pi * p.n / g;
}

struct SystemParams {
    double alpha = 1.0;
    double beta = 1.0;
    double epsilon = 0.0;
    Variant variant = Variant::SquaredDiagonal;
};

inline SystemParams from_rational(const RationalPoint& p, double epsilon,
                                  Variant variant = Variant::SquaredDiagonal) {
    return SystemParams{p.alpha(), p.beta(), epsilon, variant};
}

/// First-order form of
///   x'' + (d_a + eps cos(beta t)) x + eps cos(alpha t) y = 0
///   y'' + eps cos(beta t) x + (d_b + eps cos(alpha t)) y = 0
/// with state (x, y, x', y'); d_a, d_b are alpha^2, beta^2 or alpha, beta
/// depending on the variant. Trace is identically zero.
inline Mat4 rhs_matrix(const SystemParams& p, double t) {
    const double ca = std::cos(p.alpha * t);
    const double cb = std::cos(p.beta * t);
    const double da = p.variant == Variant::SquaredDiagonal ? p.alpha * p.alpha : p.alpha;
    const double db = p.variant == Variant::SquaredDiagonal ? p.beta * p.beta : p.beta;
    Mat4 m;
    m(0, 2) = 1.0;
    m(1, 3) = 1.0;
    m(2, 0) = -(da + p.epsilon * cb);
    m(2, 1) = -p.epsilon * ca;
    m(3, 0) = -p.epsilon * cb;
    m(3, 1) = -(db + p.epsilon * ca);
    return m;
}

/// Sign flip on the velocity block. A(-t) G + G A(t) = 0 holds exactly for
/// rhs_matrix, which is what lets a half-period integration determine the
/// full monodromy.
inline Mat4 reversal_matrix() { return Mat4::diagonal(1.0, 1.0, -1.0, -1.0); }

/// (alpha, beta, eps) -> (m alpha, m beta, m^2 eps) preserves the multiplier
/// set up to the time rescaling t -> t/m; stability is unchanged.
inline SystemParams scale_equivalent(const SystemParams& p, double m) {
    if (!(m > 0.0)) throw std::invalid_argument("scale_equivalent: m must be positive");
    return SystemParams{m * p.alpha, m * p.beta, m * m * p.epsilon, p.variant};
}

}  // namespace qpm
