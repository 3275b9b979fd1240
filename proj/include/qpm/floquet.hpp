#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>

#include "qpm/eig4.hpp"
#include "qpm/integrate.hpp"
#include "qpm/mat4.hpp"
#include "qpm/system.hpp"

namespace qpm {

/// Half-period determinant drifted too far from 1 for the inversion in the
/// monodromy reconstruction to mean anything.
struct SingularHalfPeriod : std::runtime_error {
    explicit SingularHalfPeriod(double d)
        : std::runtime_error("half-period determinant " + std::to_string(d) +
                             " too far from 1"),
          determinant(d) {}
    double determinant;
};

struct MultiplierSet {
    std::array<cplx, 4> values{};
    std::array<double, 4> residuals{};
    double max_norm = 0.0;
};

enum class MultiplierConfiguration {
    CentreCentre,    // two conjugate pairs on the unit circle
    SaddleCentre,    // one real reciprocal pair off the circle, one pair on it
    KreinQuartet,    // quartet {l, 1/l, conj l, 1/conj l} off the circle
    RealSaddlePair,  // two real reciprocal pairs
    Degenerate,
};

struct StabilityVerdict {
    bool stable = false;
    double max_norm = 0.0;
    double cutoff = 1.025;
};

/// Norm ceiling on a composed monodromy. Past this, forming the
/// characteristic polynomial would overflow (coefficients scale like norm^4),
/// so the point is reported through the saturation path like any other
/// blow-up; anything this large is unstable beyond question.
inline constexpr double monodromy_norm_guard = 1e75;

/// Monodromy over one period of any coefficient matrix satisfying
/// A(-t) G + G A(t) = 0: integrate to T/2 and reconstruct
/// Phi(T) = G Phi(T/2)^{-1} G Phi(T/2). The inverse is adjugate over
/// determinant, which is safe exactly because det stays near 1.
template <class AFunc>
FundamentalMatrix monodromy_reversible(AFunc&& afunc, double T, const Mat4& G,
                                       const IntegratorConfig& cfg) {
    FundamentalMatrix half = integrate_fundamental_ode(afunc, T / 2.0, cfg);
    const double d = det(half.entries);
    // The drift check only means something while the cofactor determinant is
    // accurate: its rounding floor grows like eps * |Phi|^4, so the slack
    // must too, and on unstable points with |Phi| beyond ~1e4 the check is
    // effectively waived rather than tripped by rounding noise.
    const double h4 = std::pow(inf_norm(half.entries), 4);
    const double slack = 1e-3 + 1e-13 * h4;
    if (std::isfinite(d) && std::isfinite(slack) && !(std::abs(d - 1.0) <= slack))
        throw SingularHalfPeriod(d);

    // The reconstruction is only as good as the inverse, and kappa grows like
    // |Phi|^2 on unstable points, so certify the inverse by its product
    // residual instead of trusting det ~ 1. Past the certification the
    // second half-period is integrated directly; that costs the time the
    // trick saved, but only on cells violent enough to have eaten all the
    // digits of the adjugate.
    const Mat4 inv = (1.0 / d) * adjugate(half.entries);
    const double product_residual = inf_norm(half.entries * inv - Mat4::identity());
    if (product_residual <= 1e-6) {
        FundamentalMatrix full;
        full.time = T;
        full.entries = G * inv * G * half.entries;
        full.diagnostics = half.diagnostics;
        if (!(inf_norm(full.entries) < monodromy_norm_guard)) throw OverflowSaturation(T / 2.0);
        return full;
    }

    FundamentalMatrix full = advance_fundamental_ode(afunc, half, T, cfg);
    if (!(inf_norm(full.entries) < monodromy_norm_guard)) throw OverflowSaturation(T);
    return full;
}

inline FundamentalMatrix monodromy(const SystemParams& params, double T,
                                   const IntegratorConfig& cfg) {
    return monodromy_reversible([&params](double t) { return rhs_matrix(params, t); }, T,
                                reversal_matrix(), cfg);
}

inline MultiplierSet multipliers(const FundamentalMatrix& phi) {
    if (!(inf_norm(phi.entries) < monodromy_norm_guard)) throw OverflowSaturation(phi.time);
    const Eigen4 e = eigen4(phi.entries);
    MultiplierSet ms;
    ms.values = e.values;
    ms.residuals = e.residuals;
    for (const auto& v : e.values) ms.max_norm = std::max(ms.max_norm, std::abs(v));
    return ms;
}

/// Position taxonomy for the four multipliers, total given a tolerance on
/// collisions and on distance from the unit circle.
inline MultiplierConfiguration classify(const MultiplierSet& ms, double tol = 1e-4) {
    const auto& v = ms.values;

    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j)
            if (std::abs(v[i] - v[j]) <= tol * std::max(1.0, std::abs(v[i])))
                return MultiplierConfiguration::Degenerate;

    std::array<bool, 4> on_circle{}, is_real{};
    int n_on = 0;
    for (std::size_t k = 0; k < 4; ++k) {
        on_circle[k] = std::abs(std::abs(v[k]) - 1.0) <= tol;
        is_real[k] = std::abs(v[k].imag()) <= tol;
        n_on += on_circle[k];
    }

    if (n_on == 4) {
        for (std::size_t k = 0; k < 4; ++k)
            if (is_real[k]) return MultiplierConfiguration::Degenerate;
        return MultiplierConfiguration::CentreCentre;
    }

    if (n_on == 2) {
        // saddle-centre: the off-circle pair real and reciprocal, the
        // on-circle pair genuinely complex
        std::array<std::size_t, 2> off{}, on{};
        std::size_t wf = 0, wn = 0;
        for (std::size_t k = 0; k < 4; ++k)
            (on_circle[k] ? on[wn++] : off[wf++]) = k;
        if (is_real[off[0]] && is_real[off[1]] && !is_real[on[0]] && !is_real[on[1]] &&
            std::abs(v[off[0]] * v[off[1]] - 1.0) <= 10 * tol)
            return MultiplierConfiguration::SaddleCentre;
        return MultiplierConfiguration::Degenerate;
    }

    if (n_on == 0) {
        int n_real = 0;
        for (std::size_t k = 0; k < 4; ++k) n_real += is_real[k];
        if (n_real == 4) return MultiplierConfiguration::RealSaddlePair;
        if (n_real == 0) {
            // genuine quartet: each value has a reciprocal partner in the set
            for (std::size_t k = 0; k < 4; ++k) {
                bool found = false;
                for (std::size_t j = 0; j < 4; ++j)
                    if (j != k && std::abs(v[k] * v[j] - 1.0) <= 10 * tol) found = true;
                if (!found) return MultiplierConfiguration::Degenerate;
            }
            return MultiplierConfiguration::KreinQuartet;
        }
    }

    return MultiplierConfiguration::Degenerate;
}

namespace detail {

struct Rational {
    long long num = 0;
    long long den = 1;
};

/// Continued-fraction reconstruction; grid coordinates i/n round-trip exactly.
inline Rational to_rational(double x, long long max_den = 1'000'000) {
    if (!(x > 0.0) || !std::isfinite(x))
        throw std::invalid_argument("to_rational: need a positive finite value");
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double r = x;
    for (int it = 0; it < 64; ++it) {
        const double fl = std::floor(r);
        const long long a = static_cast<long long>(fl);
        const long long p2 = a * p1 + p0;
        const long long q2 = a * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        if (std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) < 1e-14) break;
        const double frac = r - fl;
        if (frac < 1e-15) break;
        r = 1.0 / frac;
    }
    // grid coordinates hit their rational exactly (error ~1e-17 relative);
    // the best sub-max_den convergent of a quadratic irrational like
    // sqrt(2)/2 still misses by ~1e-12, so it must be rejected here
    if (q1 == 0 || std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) >
                       1e-13 * std::max(1.0, std::abs(x)))
        throw std::invalid_argument("parameters are not rational-grid representable");
    return {p1, q1};
}

}  // namespace detail

/// Common period of cos(alpha t), cos(beta t) for rational alpha, beta.
inline double common_fundamental_period(double alpha, double beta) {
    const auto a = detail::to_rational(alpha);
    const auto b = detail::to_rational(beta);
    const long long n = std::lcm(a.den, b.den);
    const long long i = a.num * (n / a.den);
    const long long j = b.num * (n / b.den);
    const long long g = std::gcd(i, j);
    return 2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(g);
}

/// Period, monodromy, multipliers, verdict in one call. Saturation during
/// integration means the solution grew past any reasonable bound, which is a
/// definitive "unstable", not an error.
inline StabilityVerdict verdict(const SystemParams& params, double cutoff = 1.025,
                                const IntegratorConfig& cfg = {}) {
    const double T = common_fundamental_period(params.alpha, params.beta);
    try {
        const MultiplierSet ms = multipliers(monodromy(params, T, cfg));
        return {ms.max_norm <= cutoff, ms.max_norm, cutoff};
    } catch (const OverflowSaturation&) {
        return {false, OverflowSaturation::saturation_norm, cutoff};
    }
}

inline StabilityVerdict verdict(const RationalPoint& pt, double epsilon,
                                Variant variant = Variant::SquaredDiagonal,
                                double cutoff = 1.025, const IntegratorConfig& cfg = {}) {
    const double T = fundamental_period(pt);
    const SystemParams params = from_rational(pt, epsilon, variant);
    try {
        const MultiplierSet ms = multipliers(monodromy(params, T, cfg));
        return {ms.max_norm <= cutoff, ms.max_norm, cutoff};
    } catch (const OverflowSaturation&) {
        return {false, OverflowSaturation::saturation_norm, cutoff};
    }
}

}  // namespace qpm
