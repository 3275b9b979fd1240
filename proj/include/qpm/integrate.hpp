#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qpm/mat4.hpp"
#include "qpm/system.hpp"

namespace qpm {

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-10;
    double max_step = 1.0;
    bool monitor_determinant = false;
};

struct IntegrationDiagnostics {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    double max_det_drift = 0.0;  // only tracked when monitor_determinant is set
};

struct FundamentalMatrix {
    double time = 0.0;
    Mat4 entries = Mat4::identity();
    IntegrationDiagnostics diagnostics{};
};

/// Controller collapsed the step to nothing: a configuration problem, not
/// instability (growing solutions integrate fine).
struct StepSizeUnderflow : std::runtime_error {
    explicit StepSizeUnderflow(double t)
        : std::runtime_error("step size underflow at t = " + std::to_string(t)), time(t) {}
    double time;
};

/// Solution magnitude left the representable range we are willing to trust.
/// Callers computing stability verdicts treat this as "unstable, norm huge".
struct OverflowSaturation : std::runtime_error {
    explicit OverflowSaturation(double t)
        : std::runtime_error("solution exceeded 1e100 at t = " + std::to_string(t)), time(t) {}
    double time;
    static constexpr double saturation_norm = 1e100;
};

namespace detail {

inline void validate(const IntegratorConfig& cfg) {
    if (!(cfg.rel_tol > 0.0 && cfg.rel_tol < 1.0) || !(cfg.abs_tol > 0.0 && cfg.abs_tol < 1.0))
        throw std::invalid_argument("IntegratorConfig: tolerances must lie in (0, 1)");
    if (!(cfg.max_step > 0.0)) throw std::invalid_argument("IntegratorConfig: max_step must be positive");
}

/// Dormand-Prince 5(4) with FSAL and PI step control, on a flat state of
/// size N. Deriv is f(t, y, dy); Observer is called after each accepted
/// step with (t, y) and may be a no-op.
template <std::size_t N, class Deriv, class Observer>
void dopri5(Deriv&& f, double t0, double t_end, std::array<double, N>& y,
            const IntegratorConfig& cfg, IntegrationDiagnostics& diag, Observer&& observe) {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // difference against the embedded 4th-order weights
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

    constexpr double safety = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
    constexpr double facc1 = 5.0, facc2 = 0.1;  // bounds h_new/h to [0.2, 10]

    std::array<double, N> k1, k2, k3, k4, k5, k6, k7, yt, ynew;
    f(t0, y, k1);

    // starting step: balance |y| against |f| and a crude second derivative
    double h;
    {
        double d0 = 0, d1 = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sk = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
            d0 += (y[i] / sk) * (y[i] / sk);
            d1 += (k1[i] / sk) * (k1[i] / sk);
        }
        double h0 = (d0 < 1e-10 || d1 < 1e-10) ? 1e-6 : 0.01 * std::sqrt(d0 / d1);
        h0 = std::min(h0, cfg.max_step);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + h0 * k1[i];
        f(t0 + h0, yt, k2);
        double d2 = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sk = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
            d2 += ((k2[i] - k1[i]) / sk) * ((k2[i] - k1[i]) / sk);
        }
        d2 = std::sqrt(d2) / h0;
        const double dm = std::max(std::sqrt(d1), d2);
        const double h1 = dm > 1e-15 ? std::pow(0.01 / dm, 0.2) : std::max(1e-6, h0 * 1e-3);
        h = std::min({100 * h0, h1, cfg.max_step, t_end - t0});
    }

    double t = t0;
    double facold = 1e-4;
    bool rejected = false;

    while (t < t_end) {
        // negated comparison so a NaN step (possible when the init heuristic
        // overflows on absurd tolerances) lands here instead of looping
        if (!(h >= 1e-14 * std::max(1.0, std::abs(t)))) throw StepSizeUnderflow(t);
        bool last = false;
        if (t + h >= t_end) {
            h = t_end - t;
            last = true;
        }

        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + h * a21 * k1[i];
        f(t + c2 * h, yt, k2);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        f(t + c3 * h, yt, k3);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(t + c4 * h, yt, k4);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(t + c5 * h, yt, k5);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        f(t + h, yt, k6);
        for (std::size_t i = 0; i < N; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        f(t + h, ynew, k7);  // FSAL

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sk =
                cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            const double ei =
                h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            err += (ei / sk) * (ei / sk);
        }
        err = std::sqrt(err / N);
        if (!std::isfinite(err)) {
            ++diag.rejected;
            rejected = true;
            h *= 0.1;
            continue;
        }

        const double fac11 = std::pow(err, expo1);
        if (err <= 1.0) {
            double fac = fac11 / std::pow(facold, beta);
            fac = std::max(facc2, std::min(facc1, fac / safety));
            double hnew = h / fac;
            facold = std::max(err, 1e-4);
            t = last ? t_end : t + h;  // pin the endpoint, no ulp residue
            y = ynew;
            k1 = k7;
            ++diag.accepted;
            for (std::size_t i = 0; i < N; ++i)
                if (std::abs(y[i]) > OverflowSaturation::saturation_norm) throw OverflowSaturation(t);
            observe(t, y);
            if (last) break;
            if (rejected) hnew = std::min(hnew, h);
            rejected = false;
            h = std::min(hnew, cfg.max_step);
        } else {
            h = h / std::min(facc1, fac11 / safety);
            rejected = true;
            ++diag.rejected;
        }
    }
}

}  // namespace detail

/// Continue a fundamental matrix from its recorded time to t_end. The 16
/// entries advance as one flat system so a single step controller sees every
/// column; diagnostics accumulate across the legs.
template <class AFunc>
FundamentalMatrix advance_fundamental_ode(AFunc&& afunc, const FundamentalMatrix& from,
                                          double t_end, const IntegratorConfig& cfg) {
    detail::validate(cfg);
    if (!(t_end > from.time))
        throw std::invalid_argument("advance_fundamental: t_end must exceed the start time");

    std::array<double, 16> y = from.entries.a;

    auto deriv = [&afunc](double t, const std::array<double, 16>& v, std::array<double, 16>& dv) {
        const Mat4 A = afunc(t);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                double s = 0.0;
                for (int k = 0; k < 4; ++k) s += A(i, k) * v[static_cast<std::size_t>(4 * k + j)];
                dv[static_cast<std::size_t>(4 * i + j)] = s;
            }
    };

    FundamentalMatrix out;
    out.diagnostics = from.diagnostics;
    auto observe = [&](double, const std::array<double, 16>& v) {
        if (!cfg.monitor_determinant) return;
        Mat4 m;
        m.a = v;
        out.diagnostics.max_det_drift =
            std::max(out.diagnostics.max_det_drift, std::abs(det(m) - 1.0));
    };

    detail::dopri5<16>(deriv, from.time, t_end, y, cfg, out.diagnostics, observe);
    out.time = t_end;
    out.entries.a = y;
    return out;
}

/// Fundamental matrix of dPhi/dt = A(t) Phi from the identity at t = 0.
template <class AFunc>
FundamentalMatrix integrate_fundamental_ode(AFunc&& afunc, double t_end, const IntegratorConfig& cfg) {
    if (!(t_end > 0.0)) throw std::invalid_argument("integrate_fundamental: t_end must be positive");
    FundamentalMatrix start;
    start.time = 0.0;
    start.entries = Mat4::identity();
    return advance_fundamental_ode(afunc, start, t_end, cfg);
}

inline FundamentalMatrix integrate_fundamental(const SystemParams& params, double t_end,
                                               const IntegratorConfig& cfg) {
    return integrate_fundamental_ode([&params](double t) { return rhs_matrix(params, t); }, t_end,
                                     cfg);
}

/// Trajectory of a single initial state, sampled at `samples` uniformly
/// spaced times from 0 to t_end inclusive. The integrator lands on each
/// sample time exactly rather than interpolating.
inline std::vector<std::pair<double, Vec4>> integrate_state(const SystemParams& params,
                                                            const Vec4& initial, double t_end,
                                                            const IntegratorConfig& cfg,
                                                            int samples) {
    detail::validate(cfg);
    if (!(t_end > 0.0)) throw std::invalid_argument("integrate_state: t_end must be positive");
    if (samples < 2) throw std::invalid_argument("integrate_state: samples must be >= 2");

    std::array<double, 4> y = initial;
    auto deriv = [&params](double t, const std::array<double, 4>& v, std::array<double, 4>& dv) {
        const Mat4 A = rhs_matrix(params, t);
        for (int i = 0; i < 4; ++i) {
            double s = 0.0;
            for (int j = 0; j < 4; ++j) s += A(i, j) * v[static_cast<std::size_t>(j)];
            dv[static_cast<std::size_t>(i)] = s;
        }
    };

    std::vector<std::pair<double, Vec4>> series;
    series.reserve(static_cast<std::size_t>(samples));
    series.emplace_back(0.0, initial);
    IntegrationDiagnostics diag;
    for (int k = 1; k < samples; ++k) {
        const double ta = t_end * (k - 1) / (samples - 1);
        const double tb = k == samples - 1 ? t_end : t_end * k / (samples - 1);
        detail::dopri5<4>(deriv, ta, tb, y, cfg, diag, [](double, const std::array<double, 4>&) {});
        series.emplace_back(tb, y);
    }
    return series;
}

}  // namespace qpm
