#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "qpm/integrate.hpp"

using namespace qpm;
constexpr double pi = std::numbers::pi;

namespace {

// closed form for eps = 0: decoupled oscillators of frequencies alpha, beta
Mat4 analytic_eps0(double alpha, double beta, double t) {
    Mat4 m;
    m(0, 0) = std::cos(alpha * t);
    m(0, 2) = std::sin(alpha * t) / alpha;
    m(2, 0) = -alpha * std::sin(alpha * t);
    m(2, 2) = std::cos(alpha * t);
    m(1, 1) = std::cos(beta * t);
    m(1, 3) = std::sin(beta * t) / beta;
    m(3, 1) = -beta * std::sin(beta * t);
    m(3, 3) = std::cos(beta * t);
    return m;
}

double entry_gap(const Mat4& a, const Mat4& b) {
    double g = 0.0;
    for (std::size_t k = 0; k < 16; ++k) g = std::max(g, std::abs(a.a[k] - b.a[k]));
    return g;
}

}  // namespace

TEST_CASE("unit oscillators over a full period return to identity") {
    const FundamentalMatrix phi =
        integrate_fundamental({1.0, 1.0, 0.0, Variant::SquaredDiagonal}, 2 * pi, {});
    CHECK(entry_gap(phi.entries, Mat4::identity()) < 1e-8);
    CHECK(phi.time == 2 * pi);
}

TEST_CASE("unit oscillators at quarter period") {
    const FundamentalMatrix phi =
        integrate_fundamental({1.0, 1.0, 0.0, Variant::SquaredDiagonal}, pi / 2, {});
    CHECK(phi.entries(0, 0) == Catch::Approx(0.0).margin(1e-9));
    CHECK(phi.entries(0, 2) == Catch::Approx(1.0).epsilon(1e-9));
    CHECK(phi.entries(2, 0) == Catch::Approx(-1.0).epsilon(1e-9));
    CHECK(phi.entries(2, 2) == Catch::Approx(0.0).margin(1e-9));
    CHECK(phi.entries(1, 1) == Catch::Approx(0.0).margin(1e-9));
    CHECK(phi.entries(1, 3) == Catch::Approx(1.0).epsilon(1e-9));
    CHECK(phi.entries(3, 1) == Catch::Approx(-1.0).epsilon(1e-9));
    CHECK(phi.entries(3, 3) == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("decoupled case matches the closed form at general frequencies") {
    const double alpha = 0.5, beta = 1.0 / 3.0;
    const FundamentalMatrix phi =
        integrate_fundamental({alpha, beta, 0.0, Variant::SquaredDiagonal}, 3.0, {});
    CHECK(entry_gap(phi.entries, analytic_eps0(alpha, beta, 3.0)) < 1e-9);
}

TEST_CASE("determinant stays near one over a long horizon") {
    IntegratorConfig cfg;
    cfg.monitor_determinant = true;
    const FundamentalMatrix phi =
        integrate_fundamental({435.0 / 800, 425.0 / 800, 0.1, Variant::SquaredDiagonal},
                              320 * pi, cfg);
    CHECK(std::abs(det(phi.entries) - 1.0) < 1e-6);
    CHECK(phi.diagnostics.max_det_drift < 1e-6);
    CHECK(phi.diagnostics.accepted > 0);
}

TEST_CASE("determinant drift bounded on random bounded-growth points") {
    // draws are conditioned on moderate growth: determinant accuracy in
    // floating point cannot outrun an exponentially large matrix norm
    std::mt19937 rng(21);
    std::uniform_int_distribution<int> dn(8, 48);
    std::uniform_real_distribution<double> de(0.0, 0.4);
    int tested = 0;
    while (tested < 10) {
        const int n = dn(rng);
        std::uniform_int_distribution<int> dij(1, n);
        const RationalPoint pt{dij(rng), dij(rng), n};
        const SystemParams p = from_rational(pt, de(rng));
        const double T = fundamental_period(pt);
        try {
            const FundamentalMatrix phi = integrate_fundamental(p, T, {});
            if (inf_norm(phi.entries) > 50.0) continue;
            CHECK(std::abs(det(phi.entries) - 1.0) < 1e-6);
            ++tested;
        } catch (const OverflowSaturation&) {
            continue;
        }
    }
}

TEST_CASE("tighter tolerances reduce the error") {
    const SystemParams p{0.5, 1.0 / 3.0, 0.0, Variant::SquaredDiagonal};
    const double t_end = 40.0;
    const Mat4 exact = analytic_eps0(p.alpha, p.beta, t_end);

    IntegratorConfig loose;
    loose.rel_tol = loose.abs_tol = 1e-6;
    IntegratorConfig tighter;
    tighter.rel_tol = tighter.abs_tol = 5e-7;

    const double err_loose = entry_gap(integrate_fundamental(p, t_end, loose).entries, exact);
    const double err_tight = entry_gap(integrate_fundamental(p, t_end, tighter).entries, exact);
    CHECK(err_tight < err_loose);
}

TEST_CASE("state trajectory reproduces cosine") {
    const auto series =
        integrate_state({1.0, 1.0, 0.0, Variant::SquaredDiagonal}, {1, 0, 0, 0}, 2 * pi, {}, 9);
    REQUIRE(series.size() == 9);
    CHECK(series.front().first == 0.0);
    CHECK(series.back().first == 2 * pi);
    for (const auto& [t, s] : series) {
        CHECK(s[0] == Catch::Approx(std::cos(t)).margin(1e-8));
        CHECK(s[2] == Catch::Approx(-std::sin(t)).margin(1e-8));
        CHECK(s[1] == Catch::Approx(0.0).margin(1e-10));
    }
}

TEST_CASE("state trajectory equals fundamental matrix times initial state") {
    const SystemParams p{0.7, 0.4, 0.2, Variant::SquaredDiagonal};
    const Vec4 x0{1.0, -0.5, 0.3, 0.2};
    const auto series = integrate_state(p, x0, 10.0, {}, 5);
    for (const auto& [t, s] : series) {
        if (t == 0.0) continue;
        const Vec4 ref = integrate_fundamental(p, t, {}).entries * x0;
        for (int k = 0; k < 4; ++k)
            CHECK(s[static_cast<std::size_t>(k)] ==
                  Catch::Approx(ref[static_cast<std::size_t>(k)]).margin(1e-9));
    }
}

TEST_CASE("trajectory inside the island stays bounded") {
    const auto series = integrate_state({435.0 / 800, 425.0 / 800, 0.1, Variant::SquaredDiagonal},
                                        {1, 1, 0, 0}, 1600 * pi, {}, 200);
    double amp = 0.0;
    for (const auto& [t, s] : series) amp = std::max({amp, std::abs(s[0]), std::abs(s[1])});
    // near-degenerate multipliers allow transient beats well above the
    // initial amplitude; 100 is a fixed bound an unstable neighbor blows
    // through by orders of magnitude (compare the growing case below)
    CHECK(amp < 100.0);
}

TEST_CASE("trajectory just outside the island grows") {
    const auto series = integrate_state({436.0 / 800, 425.0 / 800, 0.1, Variant::SquaredDiagonal},
                                        {1, 1, 0, 0}, 1600 * pi, {}, 200);
    double amp = 0.0;
    for (const auto& [t, s] : series) amp = std::max({amp, std::abs(s[0]), std::abs(s[1])});
    CHECK(amp > 10.0);
}

TEST_CASE("configuration validation") {
    IntegratorConfig bad;
    bad.rel_tol = 0.0;
    CHECK_THROWS_AS(integrate_fundamental({1, 1, 0, Variant::SquaredDiagonal}, 1.0, bad),
                    std::invalid_argument);
    bad = {};
    bad.abs_tol = 1.5;
    CHECK_THROWS_AS(integrate_fundamental({1, 1, 0, Variant::SquaredDiagonal}, 1.0, bad),
                    std::invalid_argument);
    bad = {};
    bad.max_step = 0.0;
    CHECK_THROWS_AS(integrate_fundamental({1, 1, 0, Variant::SquaredDiagonal}, 1.0, bad),
                    std::invalid_argument);
    CHECK_THROWS_AS(integrate_fundamental({1, 1, 0, Variant::SquaredDiagonal}, -1.0, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        integrate_state({1, 1, 0, Variant::SquaredDiagonal}, {1, 0, 0, 0}, 1.0, {}, 1),
        std::invalid_argument);
}

TEST_CASE("runaway growth saturates instead of overflowing") {
    // far outside any stability region: negative stiffness most of the time
    const SystemParams p{0.05, 0.04, 0.4, Variant::SquaredDiagonal};
    CHECK_THROWS_AS(integrate_fundamental(p, 400 * pi, {}), OverflowSaturation);
}

TEST_CASE("unreachable tolerances underflow the step instead of spinning") {
    // 1/tol overflows the init heuristic to a NaN step; the controller must
    // report that as a step underflow, not iterate on it
    IntegratorConfig tiny;
    tiny.rel_tol = 1e-300;
    tiny.abs_tol = 1e-300;
    CHECK_THROWS_AS(integrate_fundamental({0.5, 1.0 / 3, 0.1, Variant::SquaredDiagonal}, 1.0, tiny),
                    StepSizeUnderflow);
}
