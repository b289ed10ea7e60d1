#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gchoquet/bsde.hpp"
#include "gchoquet/claims.hpp"

namespace gchoquet {

/// Survival map of a claim under the g-capacity: sorted distinct claim values
/// v_0 < ... < v_{m-1} together with V_k = P_g(xi >= v_k). One solve per
/// distinct value; the first entry is the whole space, so V_0 == 1 exactly.
struct CapacityCurve {
    std::vector<double> values;
    std::vector<double> capacities;
    std::string generator_label;
    std::string claim_label;

    std::size_t size() const { return values.size(); }
};

namespace detail {

/// Distinct-value clustering with a merge tolerance: sorted values whose
/// consecutive difference is <= tol collapse onto the smallest member.
/// Returns the sorted representatives and the per-node cluster index.
inline std::pair<std::vector<double>, std::vector<int>> cluster_values(
    const std::vector<double>& node_values, double merge_tol) {
    const std::size_t n = node_values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return node_values[a] < node_values[b]; });

    std::vector<double> reps;
    std::vector<int> cluster(n, 0);
    double last = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double v = node_values[order[r]];
        if (reps.empty() || v - last > merge_tol) {
            reps.push_back(v);
            last = v;
        }
        cluster[order[r]] = static_cast<int>(reps.size()) - 1;
    }
    return {std::move(reps), std::move(cluster)};
}

}  // namespace detail

/// Capacity curve of a claim: V_k from one indicator solve per threshold
/// event {xi >= v_k}. The level sets are decided on exact node identity via
/// the cluster indices, so re-deriving values cannot flip a membership.
/// The threshold solves are mutually independent; this implementation runs
/// them sequentially in value order, so the curve is deterministic.
/// Monotonicity of the curve is asserted, not repaired; a violation means
/// the scheme guard failed and is a hard error.
inline CapacityCurve capacity_curve(const LatticeModel& model, const Generator& g, const Claim& xi,
                                    double merge_tol = 1e-12) {
    const auto node_values = terminal_values(model, xi);
    auto [reps, cluster] = detail::cluster_values(node_values, merge_tol);

    CapacityCurve curve;
    curve.generator_label = g.label();
    curve.claim_label = xi.label();
    curve.values = reps;
    curve.capacities.reserve(reps.size());

    const std::size_t n = node_values.size();
    for (int k = 0; k < static_cast<int>(reps.size()); ++k) {
        std::vector<double> level(n);
        for (std::size_t node = 0; node < n; ++node)
            level[node] = cluster[node] >= k ? 1.0 : 0.0;
        const std::string label = "ind[" + xi.label() +
                                  " >= " + detail::format_number(reps[static_cast<std::size_t>(k)]) + "]";
        curve.capacities.push_back(
            solve_bsde_terminal(model, g, std::move(level), label).g_expectation());
    }

    if (!curve.capacities.empty()) {
        if (curve.capacities.front() != 1.0)
            throw std::runtime_error("capacity_curve: V at the smallest value must be exactly 1");
        for (std::size_t k = 0; k + 1 < curve.capacities.size(); ++k)
            if (curve.capacities[k + 1] > curve.capacities[k] + 1e-12)
                throw std::runtime_error(
                    "capacity_curve: capacities increased along the value ladder (guard or scheme bug)");
        for (double v : curve.capacities)
            if (v < -1e-12 || v > 1.0 + 1e-12)
                throw std::runtime_error("capacity_curve: capacity outside [0,1]");
    }
    return curve;
}

/// Choquet expectation with its layer decomposition:
/// value = v_0 + sum_{k>=1} (v_k - v_{k-1}) V_k. Exact evaluation of the
/// defining integral for a finitely valued claim, since the survival map is
/// the piecewise-constant function t -> V_k on (v_{k-1}, v_k], equal to 1
/// for t <= v_0.
struct ChoquetResult {
    double value = 0.0;
    CapacityCurve curve;
    std::vector<double> layer_terms;
};

inline ChoquetResult from_capacity_curve(CapacityCurve curve) {
    ChoquetResult r;
    r.layer_terms.reserve(curve.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < curve.size(); ++k) {
        const double term = k == 0 ? curve.values[0]
                                   : (curve.values[k] - curve.values[k - 1]) * curve.capacities[k];
        r.layer_terms.push_back(term);
        acc += term;
    }
    r.value = acc;
    r.curve = std::move(curve);
    return r;
}

inline ChoquetResult choquet_expectation(const LatticeModel& model, const Generator& g,
                                         const Claim& xi, double merge_tol = 1e-12) {
    return from_capacity_curve(capacity_curve(model, g, xi, merge_tol));
}

/// Choquet property report over a supplied claim family: worst violations of
/// monotonicity (over pointwise-ordered pairs found in the family), positive
/// homogeneity, translation invariance and comonotonic additivity (over
/// pairs the caller supplies; each pair is re-certified exactly before use).
struct ChoquetPropertyReport {
    double monotonicity = 0.0;
    double homogeneity = 0.0;
    double translation = 0.0;
    double comonotone_additivity = 0.0;

    double worst() const {
        return std::max(std::max(monotonicity, homogeneity),
                        std::max(translation, comonotone_additivity));
    }
};

inline ChoquetPropertyReport choquet_property_suite(
    const LatticeModel& model, const Generator& g, const std::vector<Claim>& family,
    const std::vector<std::pair<Claim, Claim>>& comonotone_pairs,
    const std::vector<double>& lambdas = {0.0, 0.5, 2.0, 3.0},
    const std::vector<double>& shifts = {-2.0, 3.0}) {
    ChoquetPropertyReport rep;

    std::vector<double> values;
    std::vector<std::vector<double>> node_vals;
    for (const auto& xi : family) {
        values.push_back(choquet_expectation(model, g, xi).value);
        node_vals.push_back(terminal_values(model, xi));
    }

    // monotonicity over pointwise-ordered pairs present in the family
    for (std::size_t i = 0; i < family.size(); ++i)
        for (std::size_t j = 0; j < family.size(); ++j) {
            if (i == j) continue;
            bool leq = true;
            for (std::size_t n = 0; n < node_vals[i].size() && leq; ++n)
                leq = node_vals[i][n] <= node_vals[j][n];
            if (leq) rep.monotonicity = std::max(rep.monotonicity, values[i] - values[j]);
        }

    for (std::size_t i = 0; i < family.size(); ++i) {
        const Claim& xi = family[i];
        for (double lam : lambdas) {
            if (lam < 0.0) continue;
            const Claim cs[] = {xi};
            const double as[] = {lam};
            const double scaled = choquet_expectation(model, g, combine(cs, as)).value;
            rep.homogeneity = std::max(rep.homogeneity, std::abs(scaled - lam * values[i]));
        }
        for (double c : shifts) {
            const Claim cs[] = {xi, constant_claim(1.0)};
            const double as[] = {1.0, c};
            const double shifted = choquet_expectation(model, g, combine(cs, as)).value;
            rep.translation = std::max(rep.translation, std::abs(shifted - (values[i] + c)));
        }
    }

    for (const auto& [xi, eta] : comonotone_pairs) {
        if (!is_comonotonic(model, xi, eta))
            throw std::invalid_argument("choquet_property_suite: pair ('" + xi.label() + "', '" +
                                        eta.label() + "') is not comonotonic on this lattice");
        const double joint = choquet_expectation(model, g, add(xi, eta)).value;
        const double split = choquet_expectation(model, g, xi).value +
                             choquet_expectation(model, g, eta).value;
        rep.comonotone_additivity = std::max(rep.comonotone_additivity, std::abs(joint - split));
    }
    return rep;
}

}  // namespace gchoquet
