#include "mmdrb/bounds.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace mmdrb;

TEST_CASE("cantelli closed forms", "[bounds]") {
    // 1 / (1 + c^2)
    CHECK(cantelli(1.0) == 0.5);
    CHECK_THAT(cantelli(2.0), Catch::Matchers::WithinAbs(0.2, 1e-15));
    CHECK_THAT(cantelli(2.5), Catch::Matchers::WithinAbs(0.13793103448275862, 1e-15));
    CHECK_THAT(cantelli(3.0), Catch::Matchers::WithinAbs(0.1, 1e-15));
}

TEST_CASE("gaussian chernoff closed forms", "[bounds]") {
    // exp(-c^2 / 2)
    CHECK_THAT(chernoff_gaussian(1.0), Catch::Matchers::WithinAbs(0.6065306597126334, 1e-15));
    CHECK_THAT(chernoff_gaussian(2.0), Catch::Matchers::WithinAbs(0.1353352832366127, 1e-15));
    CHECK_THAT(chernoff_gaussian(2.5), Catch::Matchers::WithinAbs(0.04393693362340742, 1e-15));
}

TEST_CASE("tail bounds reject nonpositive thresholds", "[bounds]") {
    CHECK_THROWS_AS(cantelli(0.0), std::invalid_argument);
    CHECK_THROWS_AS(cantelli(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(chernoff_gaussian(0.0), std::invalid_argument);
    const double nan = std::nan("");
    CHECK_THROWS_AS(cantelli(nan), std::invalid_argument);
    CHECK_THROWS_AS(chernoff_gaussian(nan), std::invalid_argument);
}

TEST_CASE("bounds decrease in the threshold and stay in (0, 1]", "[bounds]") {
    double prev_cant = 1.0;
    double prev_cher = 1.0;
    for (double c = 0.1; c <= 6.0; c += 0.1) {
        const double a = cantelli(c);
        const double b = chernoff_gaussian(c);
        CHECK(a > 0.0);
        CHECK(a < 1.0);
        CHECK(b > 0.0);
        CHECK(b < 1.0);
        CHECK(a < prev_cant);
        CHECK(b < prev_cher);
        prev_cant = a;
        prev_cher = b;
    }
}

TEST_CASE("report packs both bounds", "[bounds]") {
    const auto r = tail_bounds(2.5);
    CHECK(r.threshold == 2.5);
    CHECK(r.cantelli_bound == cantelli(2.5));
    CHECK(r.chernoff_bound == chernoff_gaussian(2.5));
}
