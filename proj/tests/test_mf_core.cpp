#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "adaptire/error.hpp"
#include "adaptire/mf_core.hpp"
#include "oracles.hpp"

using namespace adaptire;

namespace {

BaseMfCoefficients sample_coeffs() {
    BaseMfCoefficients c;
    c.a1 = -2.0e-5;
    c.a2 = 1.10;
    c.a3 = 60000.0;
    c.a4 = 4000.0;
    return c;
}

}  // namespace

TEST_CASE("cornering stiffness examples") {
    const auto c = sample_coeffs();
    CHECK(cornering_stiffness(c, 4000.0) == doctest::Approx(60000.0).epsilon(1e-15));
    CHECK(cornering_stiffness(c, 0.0) == 0.0);
    CHECK(cornering_stiffness(c, 8000.0) == doctest::Approx(oracle::stiffness_closed_form(60000, 4000, 8000)));
    CHECK(cornering_stiffness(c, 8000.0) == doctest::Approx(48000.0).epsilon(1e-12));
    CHECK_THROWS_AS((void)cornering_stiffness(c, -1.0), InvalidInput);
    CHECK_THROWS_AS((void)cornering_stiffness(c, NAN), InvalidInput);
}

TEST_CASE("stiffness stays in [0, a3] and peaks at a4") {
    const auto c = sample_coeffs();
    double best = 0.0;
    double bestLoad = 0.0;
    for (double fz = 0.0; fz <= 20000.0; fz += 10.0) {
        const double cs = cornering_stiffness(c, fz);
        CHECK(cs >= 0.0);
        CHECK(cs <= c.a3 * (1.0 + 1e-15));
        if (cs > best) {
            best = cs;
            bestLoad = fz;
        }
    }
    CHECK(bestLoad == 4000.0);
}

TEST_CASE("peak friction examples") {
    auto c = sample_coeffs();
    CHECK(peak_friction(c, 5000.0) == doctest::Approx(1.00));
    CHECK(peak_friction(c, 2500.0) == doctest::Approx(1.05));
    c.a1 = 0.0;
    CHECK(peak_friction(c, 123.0) == doctest::Approx(1.10));
    CHECK(peak_friction(c, 99999.0) == doctest::Approx(1.10));
    c.a1 = -1e-3;
    CHECK_THROWS_AS((void)peak_friction(c, 5000.0), CoefficientError);
}

TEST_CASE("lateral force matches a step-by-step evaluation") {
    // D = 5000 N and BCD = 48000 N/rad at Fz = 8000 N
    BaseMfCoefficients c;
    c.a1 = 0.0;
    c.a2 = 0.625;
    c.a3 = 60000.0;
    c.a4 = 4000.0;
    c.shapeC = 1.3;
    c.curvatureE = -1.0;
    const double fy = lateral_force(c, {0.5, 8000.0});
    const double expected = static_cast<double>(oracle::mf_lateral_force(1.3L, -1.0L, 5000.0L, 48000.0L, 0.5L));
    CHECK(fy == doctest::Approx(expected).epsilon(1e-13));
    CHECK(std::abs(fy) <= 5000.0);
}

TEST_CASE("lateral force through origin, odd, bounded") {
    const auto c = sample_coeffs();
    CHECK(lateral_force(c, {0.0, 4000.0}) == 0.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> alpha(-std::numbers::pi / 2, std::numbers::pi / 2);
    std::uniform_real_distribution<double> load(100.0, 9000.0);
    for (int i = 0; i < 2000; ++i) {
        const double a = alpha(rng);
        const double fz = load(rng);
        const double plus = lateral_force(c, {a, fz});
        const double minus = lateral_force(c, {-a, fz});
        CHECK(plus == -minus);
        CHECK(std::abs(plus) <= peak_friction(c, fz) * fz);
    }
}

TEST_CASE("lateral force rejects undefined cases") {
    auto c = sample_coeffs();
    CHECK_THROWS_AS((void)lateral_force(c, {0.1, 0.0}), InvalidInput);
    CHECK_THROWS_AS((void)lateral_force(c, {2.0, 4000.0}), InvalidInput);
    CHECK_THROWS_AS((void)lateral_force(c, {NAN, 4000.0}), InvalidInput);
}

TEST_CASE("offset shifts the curve") {
    auto c = sample_coeffs();
    c.offsetSv = 50.0;
    CHECK(lateral_force(c, {0.0, 4000.0}) == 50.0);
    const double fz = 3000.0;
    for (double a = -1.5; a <= 1.5; a += 0.01) {
        CHECK(std::abs(lateral_force(c, {a, fz}) - 50.0) <= peak_friction(c, fz) * fz + 1e-9);
    }
}

TEST_CASE("slope at origin equals BCD") {
    BaseMfCoefficients c;
    c.a1 = 0.0;
    c.a2 = 0.625;
    CHECK(slope_at_origin(c, 8000.0) == doctest::Approx(48000.0).epsilon(1e-6));
    CHECK(slope_at_origin(c, 0.0) == 0.0);
    CHECK(slope_at_origin(c, c.a4) == doctest::Approx(c.a3).epsilon(1e-6));
}

TEST_CASE("monotone up to the first peak") {
    const auto c = sample_coeffs();
    const double fz = 4000.0;
    double previous = 0.0;
    double a = 0.0;
    for (; a < 1.5; a += 1e-4) {
        const double fy = lateral_force(c, {a, fz});
        if (fy < previous) {
            break;
        }
        previous = fy;
    }
    CHECK(a > 0.05);
    CHECK(previous == doctest::Approx(peak_friction(c, fz) * fz).epsilon(1e-6));
}

TEST_CASE("validate") {
    BaseMfCoefficients c;
    CHECK_NOTHROW(c.validate());
    c.a1 = 1e-5;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = {};
    c.shapeC = 2.5;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = {};
    c.curvatureE = 1.5;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = {};
    c.a4 = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
}
