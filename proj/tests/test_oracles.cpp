#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <gchoquet/oracles.hpp>

using namespace gchoquet;

TEST_CASE("normal cdf basics") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_cdf(1.3) == Catch::Approx(0.9031995154143897).margin(1e-14));
    CHECK(normal_cdf(1.5) == Catch::Approx(0.9331927987311419).margin(1e-14));
    for (double x : {-2.7, -0.4, 0.9, 3.1})
        CHECK(normal_cdf(x) + normal_cdf(-x) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("drift spec integrals are exact piecewise sums") {
    const auto b = DriftSpec::step(0.2, 0.4, 0.5, 1.0);
    CHECK(b.total(0) == Catch::Approx(0.3).margin(1e-16));
    CHECK(b.integral(0.25, 0.75, 0) == Catch::Approx(0.05 + 0.1).margin(1e-16));
    CHECK(b.integral(0.5, 1.0, 0) == Catch::Approx(0.2).margin(1e-16));

    CHECK_THROWS_AS(DriftSpec(1, 1.0, {}), std::invalid_argument);
    CHECK_THROWS_AS(DriftSpec(1, 1.0, {DriftSpec::Piece{0.0, 0.6, {1.0, 0.0}}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(b.integral(0.5, 0.2, 0), std::invalid_argument);
}

TEST_CASE("linear oracle on structured claims") {
    const double T = 1.0;
    SECTION("b = 0.3, tail indicator at -1") {
        const double v = linear_girsanov_expectation(DriftSpec::constant(0.3, T),
                                                     parse_claim("ind(w1>=-1)"), T);
        CHECK(v == Catch::Approx(normal_cdf(1.3)).margin(1e-14));
        CHECK(v == Catch::Approx(0.9031995).margin(1e-6));
    }
    SECTION("no drift, half line at 0") {
        CHECK(linear_girsanov_expectation(DriftSpec::constant(0.0, T), parse_claim("ind(w1>=0)"),
                                          T) == 0.5);
    }
    SECTION("affine claim picks up the mean shift") {
        CHECK(linear_girsanov_expectation(DriftSpec::constant(0.3, T), parse_claim("coord(1)"),
                                          T) == Catch::Approx(0.3).margin(1e-15));
    }
    SECTION("band, sum and scale combine linearly") {
        const auto e = parse_claim("sum(ind(w1>=-1),ind(0>=w1>=-1))");
        const double v =
            linear_girsanov_expectation(DriftSpec::constant(0.3, T), e, T);
        const double expected = normal_cdf(1.3) + (normal_cdf(-0.3) - normal_cdf(-1.3));
        CHECK(v == Catch::Approx(expected).margin(1e-14));
    }
    SECTION("step drift only enters through its integral") {
        const auto e = parse_claim("ind(w1>=-1)");
        CHECK(linear_girsanov_expectation(DriftSpec::step(0.2, 0.4, 0.5, T), e, T) ==
              linear_girsanov_expectation(DriftSpec::constant(0.3, T), e, T));
    }
    SECTION("two-dimensional claims use the matching component") {
        const auto b = DriftSpec::constant2(0.1, -0.2, T);
        CHECK(linear_girsanov_expectation(b, parse_claim("coord(2)"), T) ==
              Catch::Approx(-0.2).margin(1e-15));
        CHECK(linear_girsanov_expectation(b, parse_claim("ind(w2>=0)"), T) ==
              Catch::Approx(normal_cdf(-0.2)).margin(1e-14));
        CHECK_THROWS_AS(linear_girsanov_expectation(DriftSpec::constant(0.1, T),
                                                    parse_claim("ind(w2>=0)"), T),
                        std::invalid_argument);
    }
}

TEST_CASE("quadrature path matches closed forms on smooth integrands") {
    const double T = 1.0;
    const auto b = DriftSpec::constant(0.3, T);

    SECTION("second moment") {
        const double v = linear_girsanov_expectation(
            b, [](const LatticeState& st) { return st.w[0] * st.w[0]; }, T);
        CHECK(v == Catch::Approx(T + 0.09).margin(1e-10));
    }
    SECTION("cosine transform") {
        const double v = linear_girsanov_expectation(
            b, [](const LatticeState& st) { return std::cos(st.w[0]); }, T);
        CHECK(v == Catch::Approx(std::exp(-0.5 * T) * std::cos(0.3)).margin(1e-10));
    }
    SECTION("two-dimensional product integrand") {
        const auto b2 = DriftSpec::constant2(0.1, 0.2, T);
        const double v = linear_girsanov_expectation(
            b2, [](const LatticeState& st) { return st.w[0] * st.w[1]; }, T);
        CHECK(v == Catch::Approx(0.1 * 0.2).margin(1e-10));
    }
    SECTION("non-finite integrand is rejected") {
        CHECK_THROWS_AS(linear_girsanov_expectation(
                            b, [](const LatticeState& st) { return 1.0 / (st.w[0] - st.w[0]); }, T),
                        std::runtime_error);
    }
}

TEST_CASE("drift-shift oracle for monotone data") {
    const double T = 1.0;
    SECTION("increasing tail indicator under k = 0.5") {
        const double v =
            drift_shift_monotone_expectation(0.5, parse_claim("ind(w1>=-1)"), Direction::Increasing, T);
        CHECK(v == Catch::Approx(normal_cdf(1.5)).margin(1e-14));
        CHECK(v == Catch::Approx(0.9331928).margin(1e-6));
    }
    SECTION("k = 0 agrees with the driftless linear oracle") {
        for (const char* spec : {"ind(w1>=-1)", "coord(1)", "sum(ind(w1>=0.25),coord(1))"}) {
            const auto e = parse_claim(spec);
            CHECK(drift_shift_monotone_expectation(0.0, e, Direction::Increasing, T) ==
                  linear_girsanov_expectation(DriftSpec::constant(0.0, T), e, T));
        }
    }
    SECTION("decreasing indicator shifts the other way") {
        const double v =
            drift_shift_monotone_expectation(0.5, parse_claim("ind(0>=w1)"), Direction::Decreasing, T);
        CHECK(v == Catch::Approx(normal_cdf(0.5)).margin(1e-14));
        CHECK(v == Catch::Approx(0.6914625).margin(1e-6));
    }
    SECTION("agrees exactly with the linear oracle at b = k for increasing data") {
        for (double k : {0.1, 0.5, 1.25}) {
            const auto e = parse_claim("ind(w1>=-0.75)");
            CHECK(drift_shift_monotone_expectation(k, e, Direction::Increasing, T) ==
                  linear_girsanov_expectation(DriftSpec::constant(k, T), e, T));
        }
    }
    SECTION("direction mismatches and non-monotone claims are rejected") {
        CHECK_THROWS_AS(drift_shift_monotone_expectation(0.5, parse_claim("ind(w1>=0)"),
                                                         Direction::Decreasing, T),
                        std::invalid_argument);
        CHECK_THROWS_AS(drift_shift_monotone_expectation(
                            0.5, parse_claim("sum(ind(w1>=0),ind(0>=w1))"), Direction::Increasing, T),
                        std::invalid_argument);
        CHECK_THROWS_AS(drift_shift_monotone_expectation(-0.1, parse_claim("ind(w1>=0)"),
                                                         Direction::Increasing, T),
                        std::invalid_argument);
    }
}

TEST_CASE("closed-form indicator z values") {
    SECTION("tail form at the root") {
        // t=0, w=0, n=1, drift integral 0.5, T=1: pdf(1.5)
        const double v = indicator_tail_z(0.0, 0.0, 1.0, 0.5, 1.0);
        CHECK(v == Catch::Approx(0.1295175956658917).margin(1e-15));
        CHECK(v == Catch::Approx(normal_pdf(1.5)).margin(1e-16));
    }
    SECTION("lower form at the root") {
        const double v = indicator_lower_z(0.0, 0.0, 0.5, 1.0);
        CHECK(v == Catch::Approx(-0.3520653267642995).margin(1e-15));
        CHECK(v == Catch::Approx(-normal_pdf(0.5)).margin(1e-16));
    }
    SECTION("signs are strict over a sweep of inputs") {
        for (double t : {0.0, 0.3, 0.9})
            for (double w : {-2.0, -0.1, 0.0, 1.7})
                for (double I : {-0.4, 0.0, 0.6}) {
                    CHECK(indicator_tail_z(t, w, 1.0, I, 1.0) > 0.0);
                    CHECK(indicator_lower_z(t, w, I, 1.0) < 0.0);
                }
    }
    SECTION("two-dimensional forms have exact zero components") {
        const auto a = indicator_tail_z_coord1(0.2, 0.3, 1.0, 0.4, 1.0);
        CHECK(a[1] == 0.0);
        CHECK(a[0] > 0.0);
        const auto b = indicator_half_z_coord2(0.2, -0.3, 0.4, 1.0);
        CHECK(b[0] == 0.0);
        CHECK(b[1] > 0.0);
    }
    SECTION("t >= T is rejected") {
        CHECK_THROWS_AS(indicator_tail_z(1.0, 0.0, 1.0, 0.0, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(indicator_lower_z(1.5, 0.0, 0.0, 1.0), std::invalid_argument);
    }
}
