#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include <gchoquet/bsde.hpp>
#include <gchoquet/oracles.hpp>

#include "support/claim_family.hpp"

using namespace gchoquet;

namespace {
const Generator kZero = linear_generator(0.0);

double direct_mean(const LatticeModel& model, const Claim& xi) {
    const auto p = terminal_probabilities(model);
    const auto v = terminal_values(model, xi);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += p[i] * v[i];
    return acc;
}
}  // namespace

TEST_CASE("step-size guard") {
    // K = 5 on a 25-step unit-horizon lattice: K sqrt(dt) = 1 > 1/2
    const Generator stiff = linear_generator(5.0);
    const auto model = build_lattice(1, 1.0, 25);
    try {
        solve_bsde(model, stiff, constant_claim(1.0));
        FAIL("guard violation not raised");
    } catch (const std::invalid_argument& e) {
        // the message names the smallest admissible step count, 4 K^2 T = 100
        CHECK(std::string(e.what()).find("100") != std::string::npos);
    }
    CHECK_NOTHROW(solve_bsde(build_lattice(1, 1.0, 100), stiff, constant_claim(1.0)));
}

TEST_CASE("generator and model dimensions must agree") {
    CHECK_THROWS_AS(solve_bsde(build_lattice(2, 1.0, 4), abs_generator(0.5), constant_claim(0.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(solve_bsde(build_lattice(1, 1.0, 4), euclid_generator(0.5), constant_claim(0.0)),
                    std::invalid_argument);
}

TEST_CASE("driverless solve: two-step indicator enumerates to 3/4") {
    const auto model = build_lattice(1, 1.0, 2);
    const double y0 = g_expectation(model, kZero, indicator(threshold_event(0, 0.0)));
    CHECK(y0 == 0.75);
}

TEST_CASE("driverless solve of W itself: zero value, unit integrand everywhere") {
    const auto model = build_lattice(1, 1.0, 16);
    const auto sol = solve_bsde(model, kZero, coordinate_claim(0));
    CHECK(sol.g_expectation() == 0.0);
    for (int i = 0; i < 16; ++i)
        for (int node = 0; node <= i; ++node) CHECK(sol.z(i, node) == 1.0);
}

TEST_CASE("driverless interior values equal the one-step successor mean exactly") {
    const auto model = build_lattice(1, 1.0, 12);
    gqtest::Rng rng(7);
    const auto sol = solve_bsde(model, kZero, gqtest::random_claim(rng, 1));
    for (int i = 0; i < 12; ++i)
        for (int node = 0; node <= i; ++node)
            CHECK(sol.y(i, node) == 0.5 * (sol.y(i + 1, node + 1) + sol.y(i + 1, node)));
}

TEST_CASE("driverless solve equals the direct lattice mean to rounding") {
    const auto model = build_lattice(1, 1.0, 200);
    gqtest::Rng rng(20240811);
    for (int trial = 0; trial < 6; ++trial) {
        const Claim xi = gqtest::random_claim(rng, 1);
        CHECK(std::abs(g_expectation(model, kZero, xi) - direct_mean(model, xi)) <= 1e-12);
    }
}

TEST_CASE("linear driver regression values on the tail indicator") {
    // Reference behavior of the scheme itself (frozen from a fine study);
    // the indicator threshold sits on a terminal atom at N=100 and N=400,
    // so the deviation from the continuum value shrinks like sqrt(dt) with
    // a sawtooth in N, not like dt.
    const Generator g = linear_generator(0.3);
    const Claim xi = indicator(threshold_event(0, -1.0));
    const double phi13 = normal_cdf(1.3);

    const double y100 = g_expectation(build_lattice(1, 1.0, 100), g, xi);
    const double y200 = g_expectation(build_lattice(1, 1.0, 200), g, xi);
    const double y400 = g_expectation(build_lattice(1, 1.0, 400), g, xi);

    CHECK(y100 == Catch::Approx(0.9193600858430470).margin(1e-12));
    CHECK(y200 == Catch::Approx(0.9132464513968863).margin(1e-12));
    CHECK(y400 == Catch::Approx(0.9115203876832457).margin(1e-12));

    // deviation from the Girsanov value decreases monotonically on this ladder
    CHECK(std::abs(y100 - phi13) > std::abs(y200 - phi13));
    CHECK(std::abs(y200 - phi13) > std::abs(y400 - phi13));
}

TEST_CASE("constant claims are reproduced exactly under any admissible driver") {
    for (const char* spec : {"linear:0.3", "abs:0.5", "kink:0.5,0.2", "step-linear:0.2,0.4"}) {
        const Generator g = parse_generator(spec, 1.0).generator;
        const auto model = build_lattice(1, 1.0, 64);
        CHECK(g_expectation(model, g, constant_claim(2.5)) == 2.5);
        CHECK(g_expectation(model, g, constant_claim(-1.0)) == -1.0);
    }
}

TEST_CASE("translation invariance is exact on the scheme for y-independent drivers") {
    const auto model = build_lattice(1, 1.0, 128);
    const Generator g = abs_generator(0.5);
    gqtest::Rng rng(42);
    for (int trial = 0; trial < 4; ++trial) {
        const Claim xi = gqtest::random_claim(rng, 1);
        for (double c : {5.0, -2.0}) {
            const Claim parts[] = {xi, constant_claim(1.0)};
            const double coef[] = {1.0, c};
            const auto base = solve_bsde(model, g, xi);
            const auto shifted = solve_bsde(model, g, combine(parts, coef));
            double worst = 0.0;
            for (int i = 0; i <= 128; i += 16)
                for (int node = 0; node <= i; ++node)
                    worst = std::max(worst, std::abs(shifted.y(i, node) - base.y(i, node) - c));
            CHECK(worst <= 1e-12);
        }
    }
}

TEST_CASE("positive homogeneity is exact; doubling is even bit-exact") {
    const auto model = build_lattice(1, 1.0, 96);
    const Generator g = abs_generator(0.5);
    gqtest::Rng rng(43);
    const Claim xi = gqtest::random_claim(rng, 1);
    const double base = g_expectation(model, g, xi);

    const Claim doubled_parts[] = {xi};
    const double two[] = {2.0};
    CHECK(g_expectation(model, g, combine(doubled_parts, two)) == 2.0 * base);

    for (double lam : {0.0, 0.5, 3.0}) {
        const double coef[] = {lam};
        const double scaled = g_expectation(model, g, combine(doubled_parts, coef));
        CHECK(std::abs(scaled - lam * base) <= 1e-12 * std::max(1.0, std::abs(lam * base)));
    }
}

TEST_CASE("g-probabilities") {
    const auto model = build_lattice(1, 1.0, 50);
    const Generator g = abs_generator(0.5);

    SECTION("full and empty events are pinned exactly") {
        CHECK(g_probability(model, g, always_event()) == 1.0);
        CHECK(g_probability(model, g, never_event()) == 0.0);
    }

    SECTION("values stay in the unit interval") {
        gqtest::Rng rng(5);
        for (int trial = 0; trial < 6; ++trial) {
            const double a = rng.dyadic(-2.0, 2.0);
            const double p = g_probability(model, g, threshold_event(0, a));
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }

    SECTION("frozen regression at N=400 under 0.5|z|") {
        const double p =
            g_probability(build_lattice(1, 1.0, 400), g, threshold_event(0, -1.0));
        CHECK(p == Catch::Approx(0.9394715190293871).margin(1e-12));
        // the z-surface for increasing data has constant sign
        const auto sol =
            solve_bsde(build_lattice(1, 1.0, 400), g, indicator(threshold_event(0, -1.0)));
        CHECK(sol.min_z() >= 0.0);
    }
}

TEST_CASE("comonotonic additivity gap") {
    const auto model = build_lattice(1, 1.0, 200);

    SECTION("a constant partner never opens a gap") {
        const Generator g = abs_generator(0.5);
        gqtest::Rng rng(11);
        const Claim xi = gqtest::random_claim(rng, 1);
        CHECK(std::abs(comonotonic_additivity_gap(model, g, xi, constant_claim(3.0))) <= 1e-12);
    }

    SECTION("linear drivers are additive to rounding") {
        const Generator g = linear_generator(0.3);
        const Claim a = indicator(threshold_event(0, -1.0));
        const Claim b = indicator(band_event(0, 0.0, -1.0));
        CHECK(std::abs(comonotonic_additivity_gap(model, g, a, b)) <= 1e-12);
    }

    SECTION("0.5|z| on the witness pair: frozen nonzero gap, stable under doubling") {
        const Generator g = abs_generator(0.5);
        const Claim a = indicator(threshold_event(0, -1.0));
        const Claim b = indicator(band_event(0, 0.0, -1.0));
        const double gap200 = comonotonic_additivity_gap(model, g, a, b);
        const double gap400 =
            comonotonic_additivity_gap(build_lattice(1, 1.0, 400), g, a, b);
        CHECK(gap200 == Catch::Approx(-0.05378083366053077).margin(1e-12));
        CHECK(gap400 == Catch::Approx(-0.05551530593780163).margin(1e-12));
        CHECK(std::abs(gap400 - gap200) <= 0.2 * std::abs(gap200));
    }
}

TEST_CASE("discrete comparison: pointwise-ordered claims have ordered values") {
    const auto model = build_lattice(1, 1.0, 80);
    const Generator g = abs_generator(0.5);
    gqtest::Rng rng(99);
    for (int trial = 0; trial < 8; ++trial) {
        const Claim lo = gqtest::random_claim(rng, 1);
        const Claim bump = gqtest::random_claim(rng, 1, /*nonneg=*/true);
        const Claim hi = add(lo, bump);
        CHECK(g_expectation(model, g, lo) <= g_expectation(model, g, hi) + 1e-13);
    }
}

TEST_CASE("stability report") {
    const Claim tail = indicator(threshold_event(0, 0.0));

    SECTION("identical claims: both sides vanish, ratio reported as zero") {
        const auto model = build_lattice(1, 1.0, 40);
        const auto rep = stability_gap(model, linear_generator(0.3), tail, tail);
        CHECK(rep.terminal_mean_square == 0.0);
        CHECK(rep.sup_mean_square_y == 0.0);
        CHECK(rep.z_square_integral == 0.0);
        CHECK(rep.ratio == 0.0);
    }

    SECTION("a constant offset gives ratio one") {
        const auto model = build_lattice(1, 1.0, 40);
        const Claim parts[] = {tail, constant_claim(1.0)};
        const double coef[] = {1.0, 2.0};
        const auto rep = stability_gap(model, abs_generator(0.5), combine(parts, coef), tail);
        CHECK(rep.ratio == Catch::Approx(1.0).margin(1e-10));
    }

    SECTION("ratio stays bounded while refining") {
        const int ladder[] = {50, 100, 200};
        const auto study =
            stability_study(1, 1.0, ladder, linear_generator(0.3), tail, constant_claim(0.0));
        REQUIRE(study.ratios.size() == 3);
        CHECK(study.bounded);
        for (double r : study.ratios) {
            CHECK(r > 0.0);
            CHECK(r < 5.0);
        }
    }
}

TEST_CASE("solution terminal layer stores the claim values exactly") {
    const auto model = build_lattice(1, 1.0, 32);
    gqtest::Rng rng(314);
    const Claim xi = gqtest::random_claim(rng, 1);
    const auto sol = solve_bsde(model, abs_generator(0.5), xi);
    for (int node = 0; node <= 32; ++node) CHECK(sol.y(32, node) == xi(model.state(32, node)));
}

TEST_CASE("substitution property holds to solver rounding") {
    const auto model = build_lattice(1, 1.0, 64);
    const int t0 = 32;

    SECTION("frozen-plus-terminal under the zero driver") {
        const auto f = [](double x, const LatticeState& st) { return x + st.w[0]; };
        const Claim xi("ind(w>=0 at t0)",
                       [](const LatticeState& st) { return st.w[0] >= -kAtomTolerance ? 1.0 : 0.0; });
        CHECK(substitution_check(model, kZero, f, t0, xi) <= 1e-12);
    }

    SECTION("constant xi reduces substitution to the identity") {
        const auto f = [](double x, const LatticeState& st) {
            return x * (st.w[0] >= -kAtomTolerance ? 1.0 : 0.0);
        };
        CHECK(substitution_check(model, abs_generator(0.5), f, t0, constant_claim(2.0)) == 0.0);
    }

    SECTION("indicator data under 0.5|z|") {
        const auto f = [](double x, const LatticeState& st) {
            return x * (st.w[0] >= -kAtomTolerance ? 1.0 : 0.0);
        };
        const Claim xi("ind(w>=0 at t0)",
                       [](const LatticeState& st) { return st.w[0] >= -kAtomTolerance ? 1.0 : 0.0; });
        CHECK(substitution_check(model, abs_generator(0.5), f, t0, xi) <= 1e-12);
    }

    SECTION("t0 must be an interior index") {
        const auto f = [](double x, const LatticeState&) { return x; };
        CHECK_THROWS_AS(substitution_check(model, kZero, f, 64, constant_claim(0.0)),
                        std::invalid_argument);
    }
}

TEST_CASE("two-dimensional solves") {
    const auto model = build_lattice(2, 1.0, 24);

    SECTION("coordinate claims are driftless martingales with unit integrand") {
        const auto sol = solve_bsde(model, linear2_generator(0.0, 0.0), coordinate_claim(0));
        CHECK(sol.g_expectation() == 0.0);
        CHECK(sol.z(0, 0, 0) == 1.0);
        CHECK(sol.z(0, 0, 1) == 0.0);
    }

    SECTION("linear drift moves coordinate claims by its integral, exactly") {
        const auto sol = solve_bsde(model, linear2_generator(0.2, 0.4), coordinate_claim(1));
        CHECK(sol.g_expectation() == Catch::Approx(0.4).margin(1e-13));
    }

    SECTION("euclidean driver on a first-coordinate claim acts like 0.5|z|") {
        const Claim xi = indicator(threshold_event(0, 0.0));
        const double e2 = g_expectation(model, euclid_generator(0.5), xi);
        const double e1 =
            g_expectation(build_lattice(1, 1.0, 24), abs_generator(0.5), xi);
        CHECK(e2 == Catch::Approx(e1).margin(1e-13));
    }
}

TEST_CASE("surface accessors validate their indices") {
    const auto model = build_lattice(1, 1.0, 8);
    const auto sol = solve_bsde(model, kZero, constant_claim(1.0));
    CHECK_THROWS_AS(sol.y(9, 0), std::out_of_range);
    CHECK_THROWS_AS(sol.y(3, 4), std::out_of_range);
    CHECK_THROWS_AS(sol.z(8, 0), std::out_of_range);
    CHECK_THROWS_AS(sol.z(0, 0, 1), std::out_of_range);
}

TEST_CASE("solves are deterministic") {
    const auto model = build_lattice(1, 1.0, 64);
    const Generator g = abs_generator(0.5);
    const Claim xi = indicator(band_event(0, 0.5, -1.0));
    const auto a = solve_bsde(model, g, xi);
    const auto b = solve_bsde(model, g, xi);
    for (int i = 0; i <= 64; i += 8)
        for (int node = 0; node <= i; ++node) CHECK(a.y(i, node) == b.y(i, node));
}

TEST_CASE("non-finite claims are rejected") {
    const auto model = build_lattice(1, 1.0, 4);
    const Claim bad("bad", [](const LatticeState& st) { return 1.0 / (st.w[0] - st.w[0]); });
    CHECK_THROWS_AS(solve_bsde(model, kZero, bad), std::runtime_error);
}
