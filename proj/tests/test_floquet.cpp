#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "qpm/floquet.hpp"

using namespace qpm;
constexpr double pi = std::numbers::pi;

namespace {

MultiplierSet set_of(std::initializer_list<cplx> vals) {
    MultiplierSet ms;
    std::size_t k = 0;
    for (const cplx& v : vals) {
        ms.values[k++] = v;
        ms.max_norm = std::max(ms.max_norm, std::abs(v));
    }
    return ms;
}

bool contains(const MultiplierSet& ms, cplx target, double tol) {
    for (const auto& v : ms.values)
        if (std::abs(v - target) <= tol) return true;
    return false;
}

// a random grid point whose monodromy norm stays moderate, so comparisons
// at absolute tolerances stay meaningful
struct BoundedDraw {
    RationalPoint pt{1, 1, 2};
    SystemParams params;
    double T = 0.0;
    FundamentalMatrix full;
};

BoundedDraw draw_bounded_point(std::mt19937& rng, double eps_max = 0.4, double norm_cap = 50.0) {
    std::uniform_int_distribution<int> dn(8, 48);
    std::uniform_real_distribution<double> de(0.0, eps_max);
    IntegratorConfig cfg;
    cfg.rel_tol = cfg.abs_tol = 1e-11;
    for (;;) {
        const int n = dn(rng);
        std::uniform_int_distribution<int> dij(1, n);
        BoundedDraw d;
        d.pt = RationalPoint{dij(rng), dij(rng), n};
        d.params = from_rational(d.pt, de(rng));
        d.T = fundamental_period(d.pt);
        try {
            d.full = integrate_fundamental(d.params, d.T, cfg);
        } catch (const OverflowSaturation&) {
            continue;
        }
        if (inf_norm(d.full.entries) > norm_cap) continue;
        return d;
    }
}

}  // namespace

TEST_CASE("monodromy of the unit oscillators is the identity") {
    const FundamentalMatrix phi = monodromy({1, 1, 0, Variant::SquaredDiagonal}, 2 * pi, {});
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(phi.entries(i, j) == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-8));
}

TEST_CASE("monodromy over a resonant grid period is the identity") {
    const SystemParams p = from_rational({3, 2, 6}, 0.0);
    const FundamentalMatrix phi = monodromy(p, 12 * pi, {});
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(phi.entries(i, j) == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-8));
}

TEST_CASE("half-period reconstruction equals direct full-period integration") {
    std::mt19937 rng(41);
    IntegratorConfig cfg;
    cfg.rel_tol = cfg.abs_tol = 1e-11;
    for (int k = 0; k < 20; ++k) {
        const BoundedDraw d = draw_bounded_point(rng);
        const FundamentalMatrix recon = monodromy(d.params, d.T, cfg);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                CHECK(recon.entries(i, j) ==
                      Catch::Approx(d.full.entries(i, j)).margin(1e-6));
    }
}

TEST_CASE("multipliers of the identity monodromy") {
    FundamentalMatrix phi;
    phi.time = 2 * pi;
    const MultiplierSet ms = multipliers(phi);
    CHECK(ms.max_norm == Catch::Approx(1.0).epsilon(1e-9));
    for (const auto& v : ms.values) CHECK(std::abs(v - cplx(1, 0)) < 1e-9);
}

TEST_CASE("decoupled multipliers are oscillator phases") {
    const double alpha = 0.5, beta = 1.0 / 3.0, T = 5.0;
    FundamentalMatrix phi = integrate_fundamental({alpha, beta, 0, Variant::SquaredDiagonal}, T, {});
    const MultiplierSet ms = multipliers(phi);
    CHECK(contains(ms, std::polar(1.0, alpha * T), 1e-8));
    CHECK(contains(ms, std::polar(1.0, -alpha * T), 1e-8));
    CHECK(contains(ms, std::polar(1.0, beta * T), 1e-8));
    CHECK(contains(ms, std::polar(1.0, -beta * T), 1e-8));
    CHECK(ms.max_norm == Catch::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("multiplier reciprocity and unit product on random points") {
    std::mt19937 rng(42);
    for (int k = 0; k < 20; ++k) {
        const BoundedDraw d = draw_bounded_point(rng);
        IntegratorConfig cfg;
        cfg.rel_tol = cfg.abs_tol = 1e-11;
        const MultiplierSet ms = multipliers(monodromy(d.params, d.T, cfg));

        cplx prod = 1.0;
        for (const auto& v : ms.values) prod *= v;
        CHECK(std::abs(prod - 1.0) < 1e-5);

        for (const auto& v : ms.values) {
            bool partnered = false;
            for (const auto& w : ms.values)
                if (std::abs(v * w - 1.0) < 1e-5) partnered = true;
            CHECK(partnered);
        }
    }
}

TEST_CASE("small coupling leaves two multipliers near one") {
    // at a generic stable point the x-oscillator pair perturbs off +1 only
    // by the coupling. pick a short-period point so phases of the x pair
    // return to one: i divides the period count
    const RationalPoint pt{4, 3, 4};  // alpha = 1, beta = 3/4, T = 8 pi
    const MultiplierSet ms =
        multipliers(monodromy(from_rational(pt, 0.01), fundamental_period(pt), {}));
    // two closest to +1
    std::array<double, 4> dist;
    for (std::size_t k = 0; k < 4; ++k) dist[k] = std::abs(ms.values[k] - cplx(1, 0));
    std::sort(dist.begin(), dist.end());
    CHECK(dist[0] <= 0.1);
    CHECK(dist[1] <= 0.1);
}

TEST_CASE("classification taxonomy") {
    const double th = 0.9;
    CHECK(classify(set_of({cplx(1.2, 0), cplx(1 / 1.2, 0), std::polar(1.0, th),
                           std::polar(1.0, -th)})) == MultiplierConfiguration::SaddleCentre);
    CHECK(classify(set_of({std::polar(1.0, 0.7), std::polar(1.0, -0.7), std::polar(1.0, 1.3),
                           std::polar(1.0, -1.3)})) == MultiplierConfiguration::CentreCentre);
    CHECK(classify(set_of({std::polar(1.1, th), std::polar(1.1, -th), std::polar(1 / 1.1, th),
                           std::polar(1 / 1.1, -th)})) == MultiplierConfiguration::KreinQuartet);
    CHECK(classify(set_of({cplx(2, 0), cplx(0.5, 0), cplx(3, 0), cplx(1.0 / 3, 0)})) ==
          MultiplierConfiguration::RealSaddlePair);
    CHECK(classify(set_of({cplx(1, 0), cplx(1, 0), cplx(1, 0), cplx(1, 0)})) ==
          MultiplierConfiguration::Degenerate);
    // unit-modulus reals count as degenerate even with all moduli at one
    CHECK(classify(set_of({cplx(1, 0), cplx(-1, 0), std::polar(1.0, 0.4),
                           std::polar(1.0, -0.4)})) == MultiplierConfiguration::Degenerate);
    // collision within tolerance
    CHECK(classify(set_of({std::polar(1.0, 0.5), std::polar(1.0, -0.5),
                           std::polar(1.0, 0.500000001), std::polar(1.0, -0.500000001)})) ==
          MultiplierConfiguration::Degenerate);
}

TEST_CASE("zero coupling verdict is stable with unit norm") {
    std::mt19937 rng(43);
    std::uniform_int_distribution<int> dn(2, 30);
    for (int k = 0; k < 5; ++k) {
        const int n = dn(rng);
        std::uniform_int_distribution<int> dij(1, n);
        const StabilityVerdict v = verdict(RationalPoint{dij(rng), dij(rng), n}, 0.0);
        CHECK(v.stable);
        CHECK(v.max_norm == Catch::Approx(1.0).margin(1e-6));
        CHECK(v.cutoff == 1.025);
    }
}

TEST_CASE("island point pair straddles the verdict") {
    const StabilityVerdict inside = verdict(RationalPoint{435, 425, 800}, 0.1);
    CHECK(inside.stable);
    CHECK(inside.max_norm <= 1.025);
    CHECK(inside.max_norm > 0.999);

    const StabilityVerdict outside = verdict(RationalPoint{436, 425, 800}, 0.1);
    CHECK_FALSE(outside.stable);
    CHECK(outside.max_norm > 1.025);
}

TEST_CASE("parameter-based verdict reconstructs the grid point") {
    const StabilityVerdict a = verdict(SystemParams{0.5, 1.0 / 3.0, 0.1, Variant::SquaredDiagonal});
    const StabilityVerdict b = verdict(RationalPoint{3, 2, 6}, 0.1);
    CHECK(a.stable == b.stable);
    CHECK(a.max_norm == Catch::Approx(b.max_norm).epsilon(1e-9));
}

TEST_CASE("period reconstruction from floating-point coordinates") {
    CHECK(common_fundamental_period(435.0 / 800, 425.0 / 800) ==
          Catch::Approx(320 * pi).epsilon(1e-12));
    CHECK(common_fundamental_period(0.5, 1.0 / 3.0) == Catch::Approx(12 * pi).epsilon(1e-12));
    CHECK(common_fundamental_period(435.0 / 1600, 425.0 / 1600) ==
          Catch::Approx(640 * pi).epsilon(1e-12));
    CHECK_THROWS_AS(common_fundamental_period(std::numbers::sqrt2 / 2, 0.5),
                    std::invalid_argument);
}

TEST_CASE("huge growth stays on the regular path below the overflow guard") {
    // strongly unstable but short enough that nothing saturates: the verdict
    // must come back through the eigenvalue route with the true norm
    const StabilityVerdict v = verdict(RationalPoint{5, 4, 100}, 0.4);
    CHECK_FALSE(v.stable);
    CHECK(v.max_norm > 1e20);
    CHECK(v.max_norm < monodromy_norm_guard);
}

TEST_CASE("saturating growth yields an unstable verdict with the sentinel norm") {
    // ten times slower forcing means a ten times longer period; growth at
    // this depth of the negative-stiffness regime overflows the cap mid-run
    const StabilityVerdict v = verdict(RationalPoint{5, 4, 1000}, 0.4);
    CHECK_FALSE(v.stable);
    CHECK(v.max_norm == OverflowSaturation::saturation_norm);
}

TEST_CASE("scaled parameters give the same verdict") {
    std::mt19937 rng(44);
    std::uniform_int_distribution<int> dij(1, 40);
    std::uniform_real_distribution<double> de(0.0, 0.1);
    for (int k = 0; k < 6; ++k) {
        const RationalPoint pt{dij(rng), dij(rng), 40};
        const double eps = de(rng);
        const SystemParams p = from_rational(pt, eps);
        const StabilityVerdict v1 = verdict(p);
        const StabilityVerdict v2 = verdict(scale_equivalent(p, 0.5));
        CHECK(v1.stable == v2.stable);
    }
}
