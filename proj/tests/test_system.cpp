#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "qpm/system.hpp"

using namespace qpm;
constexpr double pi = std::numbers::pi;

TEST_CASE("grid point validation") {
    CHECK_NOTHROW(RationalPoint(1, 1, 1));
    CHECK_NOTHROW(RationalPoint(435, 425, 800));
    CHECK_THROWS_AS(RationalPoint(0, 1, 5), std::invalid_argument);
    CHECK_THROWS_AS(RationalPoint(1, 0, 5), std::invalid_argument);
    CHECK_THROWS_AS(RationalPoint(6, 1, 5), std::invalid_argument);
    CHECK_THROWS_AS(RationalPoint(1, 6, 5), std::invalid_argument);
    CHECK_THROWS_AS(RationalPoint(-1, 1, 5), std::invalid_argument);
}

TEST_CASE("fundamental period uses the gcd of the grid indices") {
    CHECK(fundamental_period({435, 425, 800}) == Catch::Approx(320 * pi).epsilon(1e-14));
    CHECK(fundamental_period({436, 425, 800}) == Catch::Approx(1600 * pi).epsilon(1e-14));
    CHECK(fundamental_period({3, 2, 6}) == Catch::Approx(12 * pi).epsilon(1e-14));
    CHECK(fundamental_period({2, 2, 4}) == Catch::Approx(4 * pi).epsilon(1e-14));
    CHECK(fundamental_period({1, 1, 1}) == Catch::Approx(2 * pi).epsilon(1e-14));
}

TEST_CASE("from_rational fills coordinates") {
    const SystemParams p = from_rational({435, 425, 800}, 0.1);
    CHECK(p.alpha == Catch::Approx(0.54375).epsilon(1e-15));
    CHECK(p.beta == Catch::Approx(0.53125).epsilon(1e-15));
    CHECK(p.epsilon == 0.1);
    CHECK(p.variant == Variant::SquaredDiagonal);
}

TEST_CASE("coefficient matrix at the unit frequencies") {
    const Mat4 m = rhs_matrix({1.0, 1.0, 0.0, Variant::SquaredDiagonal}, 0.37);
    const double expect[16] = {0, 0, 1, 0, 0, 0, 0, 1, -1, 0, 0, 0, 0, -1, 0, 0};
    for (int k = 0; k < 16; ++k) CHECK(m.a[static_cast<std::size_t>(k)] == expect[k]);
}

TEST_CASE("coefficient matrix stiffness block at t=0") {
    const Mat4 m = rhs_matrix({1.0, 2.0, 0.1, Variant::SquaredDiagonal}, 0.0);
    CHECK(m(2, 0) == Catch::Approx(-1.1).epsilon(1e-15));
    CHECK(m(2, 1) == Catch::Approx(-0.1).epsilon(1e-15));
    CHECK(m(3, 0) == Catch::Approx(-0.1).epsilon(1e-15));
    CHECK(m(3, 1) == Catch::Approx(-4.1).epsilon(1e-15));
}

TEST_CASE("plain variant keeps the frequencies unsquared on the diagonal") {
    const Mat4 m = rhs_matrix({0.25, 0.5, 0.0, Variant::PlainDiagonal}, 1.7);
    CHECK(m(2, 0) == Catch::Approx(-0.25).epsilon(1e-15));
    CHECK(m(3, 1) == Catch::Approx(-0.5).epsilon(1e-15));
    const Mat4 sq = rhs_matrix({0.25, 0.5, 0.0, Variant::SquaredDiagonal}, 1.7);
    CHECK(sq(2, 0) == Catch::Approx(-0.0625).epsilon(1e-15));
    CHECK(sq(3, 1) == Catch::Approx(-0.25).epsilon(1e-15));
}

TEST_CASE("coefficient matrix is trace-free") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int k = 0; k < 50; ++k) {
        const SystemParams p{u(rng), u(rng), 0.4 * u(rng),
                             k % 2 ? Variant::PlainDiagonal : Variant::SquaredDiagonal};
        CHECK(trace(rhs_matrix(p, 10.0 * u(rng))) == 0.0);
    }
}

TEST_CASE("time reversal identity holds exactly") {
    // A(-t) G + G A(t) = 0 entrywise, with G flipping the velocity block
    const Mat4 G = reversal_matrix();
    std::mt19937 rng(12);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int k = 0; k < 50; ++k) {
        const SystemParams p{u(rng), u(rng), 0.4 * u(rng), Variant::SquaredDiagonal};
        const double t = 20.0 * (u(rng) - 0.5);
        const Mat4 lhs = rhs_matrix(p, -t) * G + G * rhs_matrix(p, t);
        for (double v : lhs.a) CHECK(v == 0.0);
    }
}

TEST_CASE("reversal matrix is an involution") {
    const Mat4 G = reversal_matrix();
    const Mat4 gg = G * G;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(gg(i, j) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("frequency scaling maps epsilon quadratically") {
    const SystemParams p{0.54375, 0.53125, 0.1, Variant::SquaredDiagonal};

    const SystemParams half = scale_equivalent(p, 0.5);
    CHECK(half.alpha == Catch::Approx(0.271875).epsilon(1e-15));
    CHECK(half.beta == Catch::Approx(0.265625).epsilon(1e-15));
    CHECK(half.epsilon == Catch::Approx(0.025).epsilon(1e-15));

    const SystemParams quarter = scale_equivalent(p, 0.25);
    CHECK(quarter.epsilon == Catch::Approx(0.00625).epsilon(1e-15));

    const SystemParams twice = scale_equivalent(p, 2.0);
    CHECK(twice.alpha == Catch::Approx(1.0875).epsilon(1e-15));
    CHECK(twice.epsilon == Catch::Approx(0.4).epsilon(1e-15));

    CHECK_THROWS_AS(scale_equivalent(p, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(scale_equivalent(p, -1.0), std::invalid_argument);
}
