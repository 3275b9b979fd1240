#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "qpm/floquet.hpp"
#include "qpm/pgm.hpp"
#include "qpm/sweep.hpp"

namespace qpm {

/// Coefficient matrices of the averaged system near the 1:1 resonance,
/// dY/dt* = [A + mu (A0 + A1 cos t* + A2 cos 2t* + B1 sin t* + B2 sin 2t*)] Y.
/// Values are a hand transcription; the dedicated transcription test pins
/// every entry, and q_matrix() re-derives the same system independently.
struct SlowFlowModel {
    Mat4 A, A0, A1, A2, B1, B2;
};

namespace detail {

inline Mat4 from_rows(const int (&rows)[4][4]) {
    Mat4 m;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) m(r, c) = rows[r][c];
    return m;
}

}  // namespace detail

inline const SlowFlowModel& slow_flow_model() {
    static const SlowFlowModel model = [] {
        SlowFlowModel m;
        m.A = detail::from_rows({{0, 0, 0, 0},  //
                                 {0, 0, 0, 0},
                                 {0, 0, 0, 1},
                                 {0, 0, -1, 0}});
        m.A0 = detail::from_rows({{0, -2, 0, 1},  //
                                  {2, 0, 5, 0},
                                  {0, -2, 0, 1},
                                  {2, 0, 5, 0}});
        m.A1 = detail::from_rows({{0, 1, 0, 1},  //
                                  {5, 0, 5, 0},
                                  {0, 1, 0, 1},
                                  {5, 0, 5, 0}});
        m.A2 = detail::from_rows({{0, 3, 0, 0},  //
                                  {3, 0, 0, 0},
                                  {0, 3, 0, 0},
                                  {3, 0, 0, 0}});
        m.B1 = detail::from_rows({{-1, 0, 7, 0},  //
                                  {0, -7, 0, 1},
                                  {-1, 0, 7, 0},
                                  {0, -7, 0, 1}});
        m.B2 = detail::from_rows({{3, 0, 0, 0},  //
                                  {0, -3, 0, 0},
                                  {3, 0, 0, 0},
                                  {0, -3, 0, 0}});
        return m;
    }();
    return model;
}

inline Mat4 mu_rhs(const SlowFlowModel& m, double mu, double tstar) {
    const double c1 = std::cos(tstar), s1 = std::sin(tstar);
    const double c2 = std::cos(2.0 * tstar), s2 = std::sin(2.0 * tstar);
    return m.A + mu * (m.A0 + c1 * m.A1 + c2 * m.A2 + s1 * m.B1 + s2 * m.B2);
}

/// The same slow-flow system in its unscaled form, built entrywise from the
/// displayed matrix rather than from the coefficient decomposition. Equals
/// 24 alpha^3 beta2 * mu_rhs(model, 1/(24 alpha^3 beta2), beta2 T).
inline Mat4 q_matrix(double alpha, double beta2, double T) {
    if (beta2 == 0.0) throw std::invalid_argument("q_matrix: beta2 must be nonzero");
    const double c1 = std::cos(beta2 * T), s1 = std::sin(beta2 * T);
    const double c2 = std::cos(2.0 * beta2 * T), s2 = std::sin(2.0 * beta2 * T);
    const double k = 24.0 * alpha * alpha * alpha * beta2;
    Mat4 q;
    q(0, 0) = -s1 + 3.0 * s2;
    q(0, 1) = -2.0 + c1 + 3.0 * c2;
    q(0, 2) = 7.0 * s1;
    q(0, 3) = 1.0 + c1;
    q(1, 0) = 2.0 + 5.0 * c1 + 3.0 * c2;
    q(1, 1) = -7.0 * s1 - 3.0 * s2;
    q(1, 2) = 5.0 + 5.0 * c1;
    q(1, 3) = s1;
    q(2, 0) = -s1 + 3.0 * s2;
    q(2, 1) = -2.0 + c1 + 3.0 * c2;
    q(2, 2) = 7.0 * s1;
    q(2, 3) = 1.0 + k + c1;
    q(3, 0) = 2.0 + 5.0 * c1 + 3.0 * c2;
    q(3, 1) = -7.0 * s1 - 3.0 * s2;
    q(3, 2) = 5.0 - k + 5.0 * c1;
    q(3, 3) = s1;
    return q;
}

/// The horizon here is one 2 pi period with no repeated composition, so the
/// multiplier cutoff carries no accumulation allowance.
inline constexpr double mu_cutoff = 1.0 + 1e-6;

struct MuWindow {
    double mu_minus = 0.0;
    double mu_plus = 0.0;
};

struct MuScanPoint {
    double mu = 0.0;
    double max_norm = 0.0;
};

struct MuScanResult {
    std::vector<MuScanPoint> trace;
    std::vector<MuWindow> windows;
    std::size_t primary = 0;  // index into windows, meaningful when non-empty
};

struct NoWindowFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Largest multiplier norm of the mu-system over one 2 pi period.
///
/// The stable pairs of this system ride within ~1e-8 of the parabolic
/// collision at lambda = 1, where |lambda| computed from a split pair loses
/// half its digits to square-root amplification of monodromy error. The
/// trace coordinate w = lambda + 1/lambda of the reciprocal quartic stays
/// well conditioned, so classification happens there: |w| <= 2 (within
/// w_snap) means an exact unit-circle pair. Past the window edges the
/// off-circle pair opens a w-gap of order 1e-2 within one 1e-3 scan step,
/// so the snap moves the detected edges by under 1e-7 in mu.
inline double mu_max_norm(const SlowFlowModel& model, double mu,
                          const IntegratorConfig& cfg = {}, double w_snap = 1e-6) {
    const auto rhs = [&](double t) { return mu_rhs(model, mu, t); };
    const FundamentalMatrix fm = integrate_fundamental_ode(rhs, 2.0 * std::numbers::pi, cfg);

    const std::array<double, 4> c = detail::char_poly(fm.entries);
    const double scale = inf_norm(fm.entries);
    const double sym_slack =
        1e-3 * std::max(1.0, std::abs(c[3])) + 1e-12 * scale * scale * scale;
    const bool reciprocal = std::abs(det(fm.entries) - 1.0) <= 1e-3 &&
                            std::abs(c[1] - c[3]) <= sym_slack;
    if (reciprocal) {
        const double disc = c[3] * c[3] - 4.0 * (c[2] - 2.0);
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            double norm = 1.0;
            for (const double w : {0.5 * (-c[3] + sq), 0.5 * (-c[3] - sq)}) {
                if (std::abs(w) <= 2.0 + w_snap) continue;  // unit-circle pair
                const double a = std::abs(w) / 2.0;
                norm = std::max(norm, a + std::sqrt(a * a - 1.0));
            }
            return norm;
        }
        // complex w: quartet strictly off the circle, the general solver
        // resolves it cleanly
    }
    return multipliers(fm).max_norm;
}

/// Scan mu over [mu_lo, mu_hi], classify each point, and return every
/// contiguous stable window with its endpoints refined by bisection to
/// refine_tol. The window containing 0.185 is designated primary (the
/// widest one if none does).
inline MuScanResult scan_stability(const SlowFlowModel& model, double mu_lo, double mu_hi,
                                   double scan_step = 1e-3, double refine_tol = 1e-5,
                                   double cutoff = mu_cutoff, const IntegratorConfig& cfg = {},
                                   unsigned workers = 0) {
    if (!(mu_lo > 0.0) || !(mu_hi <= 1.0) || !(mu_lo < mu_hi))
        throw std::invalid_argument("scan_stability: need 0 < mu_lo < mu_hi <= 1");
    if (!(scan_step > 0.0) || !(refine_tol > 0.0))
        throw std::invalid_argument("scan_stability: step and tolerance must be positive");

    std::vector<double> mus;
    for (double mu = mu_lo; mu < mu_hi - 1e-12 * scan_step; mu += scan_step) mus.push_back(mu);
    mus.push_back(mu_hi);

    MuScanResult out;
    out.trace.resize(mus.size());
    unsigned pool = workers ? workers : std::max(1u, std::thread::hardware_concurrency());
    pool = static_cast<unsigned>(std::min<std::size_t>(pool, mus.size()));
    std::atomic<std::size_t> cursor{0};
    auto work = [&] {
        for (;;) {
            const std::size_t k = cursor.fetch_add(1);
            if (k >= mus.size()) return;
            out.trace[k] = {mus[k], mu_max_norm(model, mus[k], cfg)};
        }
    };
    if (pool <= 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(pool);
        for (unsigned w = 0; w < pool; ++w) threads.emplace_back(work);
        for (auto& t : threads) t.join();
    }

    const auto stable_at = [&](std::size_t k) { return out.trace[k].max_norm <= cutoff; };
    const auto stable_mu = [&](double mu) { return mu_max_norm(model, mu, cfg) <= cutoff; };
    // bisect the stable/unstable bracket; returns the midpoint of the final one
    const auto refine = [&](double inside, double outside) {
        while (std::abs(outside - inside) > refine_tol) {
            const double mid = 0.5 * (inside + outside);
            (stable_mu(mid) ? inside : outside) = mid;
        }
        return 0.5 * (inside + outside);
    };

    for (std::size_t k = 0; k < mus.size(); ++k) {
        if (!stable_at(k)) continue;
        std::size_t e = k;
        while (e + 1 < mus.size() && stable_at(e + 1)) ++e;
        MuWindow w;
        w.mu_minus = k == 0 ? mus[k] : refine(mus[k], mus[k - 1]);
        w.mu_plus = e + 1 == mus.size() ? mus[e] : refine(mus[e], mus[e + 1]);
        out.windows.push_back(w);
        k = e;
    }

    out.primary = 0;
    double best_width = -1.0;
    for (std::size_t w = 0; w < out.windows.size(); ++w) {
        if (out.windows[w].mu_minus <= 0.185 && 0.185 <= out.windows[w].mu_plus) {
            out.primary = w;
            break;
        }
        const double width = out.windows[w].mu_plus - out.windows[w].mu_minus;
        if (width > best_width) {
            best_width = width;
            out.primary = w;
        }
    }
    return out;
}

inline MuWindow stability_window(const SlowFlowModel& model, double mu_lo, double mu_hi,
                                 double scan_step = 1e-3, double refine_tol = 1e-5,
                                 const IntegratorConfig& cfg = {}) {
    const MuScanResult r =
        scan_stability(model, mu_lo, mu_hi, scan_step, refine_tol, mu_cutoff, cfg);
    if (r.windows.empty())
        throw NoWindowFound("no stable mu in [" + std::to_string(mu_lo) + ", " +
                            std::to_string(mu_hi) + "]; check the coefficient matrices");
    return r.windows[r.primary];
}

struct BetaInterval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Predicted stable beta intervals at fixed alpha: one above the diagonal,
/// beta in (alpha + eps^2/(24 a^3 mu_plus), alpha + eps^2/(24 a^3 mu_minus)),
/// and its mirror below, from the symmetry of the system under swapping the
/// two coordinates.
inline std::pair<BetaInterval, BetaInterval> stability_band(double alpha, double epsilon,
                                                            const MuWindow& w) {
    if (!(alpha > 0.0) || !(epsilon > 0.0))
        throw std::invalid_argument("stability_band: alpha and epsilon must be positive");
    if (!(w.mu_minus > 0.0) || !(w.mu_minus < w.mu_plus))
        throw std::invalid_argument("stability_band: need 0 < mu_minus < mu_plus");
    const double k = epsilon * epsilon / (24.0 * alpha * alpha * alpha);
    const BetaInterval above{alpha + k / w.mu_plus, alpha + k / w.mu_minus};
    const BetaInterval below{alpha - k / w.mu_minus, alpha - k / w.mu_plus};
    return {above, below};
}

/// Chart rendering with the four predicted band boundary curves marked in a
/// distinct gray. The band uses the chart's own epsilon; a chart with
/// epsilon = 0 has no band and renders unchanged.
inline Pgm overlay_band(const StabilityChart& chart, const MuWindow& w,
                        RenderMode mode = RenderMode::Binary) {
    Pgm img = render_chart(chart, mode);
    const double eps = chart.spec.epsilon;
    if (!(eps > 0.0)) return img;
    const int n = chart.spec.n;
    constexpr unsigned char band_gray = 64;
    for (int i = 1; i <= n; ++i) {
        const double alpha = static_cast<double>(i) / n;
        const auto [above, below] = stability_band(alpha, eps, w);
        for (const double beta : {above.lo, above.hi, below.lo, below.hi}) {
            const long j = std::lround(beta * n);
            if (j >= 1 && j <= n) img.at(n - static_cast<int>(j), i - 1) = band_gray;
        }
    }
    return img;
}

inline std::string mu_scan_csv(const MuScanResult& r) {
    std::string out = "mu,max_norm\n";
    char line[64];
    for (const auto& p : r.trace) {
        std::snprintf(line, sizeof line, "%.9g,%.9g\n", p.mu, p.max_norm);
        out += line;
    }
    return out;
}

inline std::string window_report(const MuScanResult& r) {
    std::string out;
    char line[128];
    if (r.windows.empty()) {
        out = "no stable window found\n";
    } else {
        for (std::size_t w = 0; w < r.windows.size(); ++w) {
            std::snprintf(line, sizeof line, "window %zu: mu_minus=%.6f mu_plus=%.6f%s\n", w,
                          r.windows[w].mu_minus, r.windows[w].mu_plus,
                          w == r.primary ? " (primary)" : "");
            out += line;
        }
    }
    return out;
}

}  // namespace qpm
