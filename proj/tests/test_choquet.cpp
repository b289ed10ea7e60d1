#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include <gchoquet/choquet.hpp>

#include "support/claim_family.hpp"

using namespace gchoquet;

namespace {

double direct_mean(const LatticeModel& model, const Claim& xi) {
    const auto p = terminal_probabilities(model);
    const auto v = terminal_values(model, xi);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += p[i] * v[i];
    return acc;
}

// Direct numerical quadrature of the defining integral
//   C = int_{-inf}^0 (V(xi >= t) - 1) dt + int_0^inf V(xi >= t) dt,
// with V evaluated by a fresh indicator solve at the midpoint of every
// interval between consecutive knots of the (finite) value set. The survival
// map is constant on those intervals, so midpoint quadrature is exact.
double quadrature_choquet(const LatticeModel& model, const Generator& g, const Claim& xi) {
    const auto vals = terminal_values(model, xi);
    std::vector<double> knots(vals.begin(), vals.end());
    knots.push_back(0.0);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double a = knots[i], b = knots[i + 1];
        if (b <= a) continue;
        const double mid = 0.5 * (a + b);
        std::vector<double> level(vals.size());
        for (std::size_t n = 0; n < vals.size(); ++n) level[n] = vals[n] >= mid ? 1.0 : 0.0;
        const double survival =
            solve_bsde_terminal(model, g, std::move(level), "quad level").g_expectation();
        acc += (b - a) * (mid < 0.0 ? survival - 1.0 : survival);
    }
    return acc;
}

}  // namespace

TEST_CASE("capacity curve of an indicator") {
    const auto model = build_lattice(1, 1.0, 60);
    const Generator g = abs_generator(0.5);
    const Event a = threshold_event(0, -1.0);
    const auto curve = capacity_curve(model, g, indicator(a));
    REQUIRE(curve.size() == 2);
    CHECK(curve.values[0] == 0.0);
    CHECK(curve.values[1] == 1.0);
    CHECK(curve.capacities[0] == 1.0);
    CHECK(curve.capacities[1] == g_probability(model, g, a));
}

TEST_CASE("choquet of an indicator equals its g-probability bit for bit") {
    const auto model = build_lattice(1, 1.0, 75);
    const Generator g = abs_generator(0.5);
    for (double a : {-1.0, -0.25, 0.0, 0.5}) {
        const Event ev = threshold_event(0, a);
        CHECK(choquet_expectation(model, g, indicator(ev)).value == g_probability(model, g, ev));
    }
}

TEST_CASE("driverless capacity degenerates to survival probability") {
    const auto model = build_lattice(1, 1.0, 64);
    const Generator zero = linear_generator(0.0);
    gqtest::Rng rng(3);
    const Claim xi = gqtest::random_claim(rng, 1);
    const auto curve = capacity_curve(model, zero, xi);
    const auto p = terminal_probabilities(model);
    const auto v = terminal_values(model, xi);
    for (std::size_t k = 0; k < curve.size(); ++k) {
        double survival = 0.0;
        for (std::size_t n = 0; n < v.size(); ++n)
            if (v[n] >= curve.values[k] - 1e-12) survival += p[n];
        CHECK(curve.capacities[k] == Catch::Approx(survival).margin(1e-12));
    }
    CHECK(choquet_expectation(model, zero, xi).value ==
          Catch::Approx(direct_mean(model, xi)).margin(1e-12));
}

TEST_CASE("constant claims have a one-point curve") {
    const auto model = build_lattice(1, 1.0, 10);
    const auto r = choquet_expectation(model, abs_generator(0.5), constant_claim(2.5));
    REQUIRE(r.curve.size() == 1);
    CHECK(r.curve.capacities[0] == 1.0);
    CHECK(r.value == 2.5);
}

TEST_CASE("layered sum over a {0,1,2}-valued claim") {
    const auto model = build_lattice(1, 1.0, 100);
    const Generator g = abs_generator(0.5);
    const Claim sum = add(indicator(threshold_event(0, -1.0)), indicator(band_event(0, 0.0, -1.0)));
    const auto r = choquet_expectation(model, g, sum);
    REQUIRE(r.curve.size() == 3);
    CHECK(r.value == Catch::Approx(r.curve.capacities[1] + r.curve.capacities[2]).margin(1e-15));
    // the decomposition reassembles to the value
    double acc = 0.0;
    for (double t : r.layer_terms) acc += t;
    CHECK(std::abs(acc - r.value) <= 1e-12);
}

TEST_CASE("layered sum agrees with direct quadrature of the definition") {
    const auto model = build_lattice(1, 1.0, 48);
    const Generator g = abs_generator(0.5);
    const Claim claims[] = {
        add(indicator(threshold_event(0, -1.0)), indicator(band_event(0, 0.0, -1.0))),
        claim_from_spec("sum(scale(1.5,ind(w1>=0.25)),scale(-0.75,ind(w1>=-0.5)),const(0.25))"),
        claim_from_spec("sum(scale(-2,ind(w1>=1)),scale(0.5,ind(w1>=-1)),const(-0.5))"),
    };
    for (const Claim& xi : claims) {
        const double layered = choquet_expectation(model, g, xi).value;
        const double quad = quadrature_choquet(model, g, xi);
        CHECK(layered == Catch::Approx(quad).margin(1e-12));
    }
}

TEST_CASE("curves are monotone with capacities inside the unit interval") {
    const auto model = build_lattice(1, 1.0, 72);
    const Generator g = abs_generator(0.5);
    gqtest::Rng rng(8);
    for (int trial = 0; trial < 6; ++trial) {
        const auto curve = capacity_curve(model, g, gqtest::random_claim(rng, 1));
        CHECK(curve.capacities.front() == 1.0);
        for (std::size_t k = 0; k + 1 < curve.size(); ++k)
            CHECK(curve.capacities[k + 1] <= curve.capacities[k] + 1e-12);
        for (double v : curve.capacities) {
            CHECK(v >= -1e-12);
            CHECK(v <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("value depends only on the node-value map, not the description") {
    const auto model = build_lattice(1, 1.0, 50);
    const Generator g = abs_generator(0.5);
    const Claim via_expr = claim_from_spec("sum(ind(w1>=-1),ind(0>=w1>=-1))");
    const Claim via_lambda("handwritten", [](const LatticeState& st) {
        const double w = st.w[0];
        double v = 0.0;
        if (w >= -1.0 - kAtomTolerance) v += 1.0;
        if (w >= -1.0 - kAtomTolerance && w <= kAtomTolerance) v += 1.0;
        return v;
    });
    CHECK(choquet_expectation(model, g, via_expr).value ==
          choquet_expectation(model, g, via_lambda).value);
}

TEST_CASE("choquet value is bounded by the sup norm of the claim") {
    const auto model = build_lattice(1, 1.0, 64);
    const Generator g = abs_generator(0.5);
    gqtest::Rng rng(21);
    for (int trial = 0; trial < 6; ++trial) {
        const Claim xi = gqtest::random_claim(rng, 1);
        const auto v = terminal_values(model, xi);
        double sup = 0.0;
        for (double x : v) sup = std::max(sup, std::abs(x));
        CHECK(std::abs(choquet_expectation(model, g, xi).value) <= sup + 1e-12);
    }
}

TEST_CASE("property suite on a random family") {
    const auto model = build_lattice(1, 1.0, 96);
    const Generator g = abs_generator(0.5);
    gqtest::Rng rng(777);

    std::vector<Claim> family;
    for (int i = 0; i < 6; ++i) family.push_back(gqtest::random_claim(rng, 1));
    // ensure at least one pointwise-ordered pair exists
    family.push_back(add(family[0], gqtest::random_claim(rng, 1, /*nonneg=*/true)));

    std::vector<std::pair<Claim, Claim>> pairs;
    for (int i = 0; i < 3; ++i) pairs.push_back(gqtest::random_comonotone_pair(rng, 1));

    const auto rep = choquet_property_suite(model, g, family, pairs);
    CHECK(rep.monotonicity <= 1e-10);
    CHECK(rep.homogeneity <= 1e-10);
    CHECK(rep.translation <= 1e-10);
    CHECK(rep.comonotone_additivity <= 1e-10);
}

TEST_CASE("property suite rejects a pair that is not comonotone") {
    const auto model = build_lattice(1, 1.0, 16);
    const Generator g = abs_generator(0.5);
    const Claim up = coordinate_claim(0);
    const Claim parts[] = {up};
    const double minus[] = {-1.0};
    std::vector<std::pair<Claim, Claim>> pairs{{up, combine(parts, minus)}};
    CHECK_THROWS_AS(choquet_property_suite(model, g, {up}, pairs), std::invalid_argument);
}
