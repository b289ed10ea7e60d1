#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gchoquet/claims.hpp"
#include "gchoquet/generators.hpp"
#include "gchoquet/lattice.hpp"

namespace gchoquet {

/// Monotone-scheme step-size guard: K*sqrt(dt) <= 1/2. Keeps the one-step
/// update a positive combination of successor values (the driver perturbs
/// each branch weight by at most K*sqrt(dt)/2 per component, worst case in
/// two dimensions), which is what makes the discrete comparison property and
/// hence monotone capacities hold. Violations are hard errors.
inline void check_solver_guard(const LatticeModel& model, const Generator& g) {
    const double k = g.lipschitz();
    const double s = model.increment();
    if (k * s <= 0.5) return;
    const double horizon = model.grid().horizon;
    const int min_steps = static_cast<int>(std::ceil(4.0 * k * k * horizon));
    throw std::invalid_argument(
        "solve_bsde: step-size guard K*sqrt(dt) <= 1/2 violated for generator '" + g.label() +
        "' (K=" + detail::format_number(k) + ", steps=" + std::to_string(model.grid().steps) +
        "); need at least " + std::to_string(min_steps) + " steps on this horizon");
}

namespace detail {

// One backward step of the explicit scheme, d=1. `next` has i+2 entries,
// `y_out` and `z_out` receive i+1 entries. The driver's y argument is the
// one-step mean; its time argument is the left endpoint t.
inline void step_layer_1d(const Generator& g, double t, double dt, double s,
                          std::span<const double> next, std::span<double> y_out,
                          std::span<double> z_out) {
    const std::size_t n = y_out.size();
    for (std::size_t j = 0; j < n; ++j) {
        const double yu = next[j + 1];
        const double yd = next[j];
        const double m = 0.5 * (yu + yd);
        const double zv = (yu - yd) / (2.0 * s);
        z_out[j] = zv;
        const double gv = g(t, m, std::span<const double>(&zv, 1));
        const double y = m + gv * dt;
        if (!std::isfinite(y))
            throw std::runtime_error("solve_bsde: non-finite intermediate value (generator '" +
                                     g.label() + "')");
        y_out[j] = y;
    }
}

// One backward step, d=2. `next` is the (i+2)x(i+2) layer in row-major order,
// outputs are (i+1)x(i+1); z is interleaved per node as (z1, z2).
inline void step_layer_2d(const Generator& g, double t, double dt, double s, int rows,
                          std::span<const double> next, std::span<double> y_out,
                          std::span<double> z_out) {
    const int stride = rows + 1;
    for (int j1 = 0; j1 < rows; ++j1) {
        for (int j2 = 0; j2 < rows; ++j2) {
            const double dd = next[static_cast<std::size_t>(j1 * stride + j2)];
            const double du = next[static_cast<std::size_t>(j1 * stride + j2 + 1)];
            const double ud = next[static_cast<std::size_t>((j1 + 1) * stride + j2)];
            const double uu = next[static_cast<std::size_t>((j1 + 1) * stride + j2 + 1)];
            const double hi = uu + ud;
            const double lo = du + dd;
            const double m = 0.25 * (hi + lo);
            double zv[2];
            zv[0] = (hi - lo) / (4.0 * s);
            zv[1] = ((uu - ud) + (du - dd)) / (4.0 * s);
            const std::size_t node = static_cast<std::size_t>(j1 * rows + j2);
            z_out[2 * node] = zv[0];
            z_out[2 * node + 1] = zv[1];
            const double gv = g(t, m, std::span<const double>(zv, 2));
            const double y = m + gv * dt;
            if (!std::isfinite(y))
                throw std::runtime_error("solve_bsde: non-finite intermediate value (generator '" +
                                         g.label() + "')");
            y_out[node] = y;
        }
    }
}

}  // namespace detail

/// Full backward-induction solution: the y surface over every (time, node)
/// and the z surface over every (time < steps, node).
class BsdeSolution {
public:
    BsdeSolution(LatticeModel model, std::string generator_label, std::string claim_label,
                 std::vector<std::vector<double>> y, std::vector<std::vector<double>> z)
        : model_(std::move(model)),
          generator_label_(std::move(generator_label)),
          claim_label_(std::move(claim_label)),
          y_(std::move(y)),
          z_(std::move(z)) {}

    const LatticeModel& model() const { return model_; }
    const std::string& generator_label() const { return generator_label_; }
    const std::string& claim_label() const { return claim_label_; }

    /// E_g of the terminal claim: the root of the y surface.
    double g_expectation() const { return y_[0][0]; }

    /// Conditional value at (time index, node).
    double y(int i, int node) const {
        check(i, node, false);
        return y_[static_cast<std::size_t>(i)][static_cast<std::size_t>(node)];
    }

    double z(int i, int node, int component = 0) const {
        check(i, node, true);
        if (component < 0 || component >= model_.dimension())
            throw std::out_of_range("BsdeSolution::z: component out of range");
        const auto& layer = z_[static_cast<std::size_t>(i)];
        return model_.dimension() == 1
                   ? layer[static_cast<std::size_t>(node)]
                   : layer[static_cast<std::size_t>(2 * node + component)];
    }

    /// Smallest z entry over the whole surface (per component), e.g. to
    /// confirm sign-constancy for monotone claims.
    double min_z(int component = 0) const {
        double m = std::numeric_limits<double>::infinity();
        const int d = model_.dimension();
        for (std::size_t i = 0; i < z_.size(); ++i) {
            const auto& layer = z_[i];
            for (std::size_t n = 0; n < layer.size(); n += static_cast<std::size_t>(d))
                m = std::min(m, layer[n + static_cast<std::size_t>(component)]);
        }
        return m;
    }

private:
    void check(int i, int node, bool z_surface) const {
        const int last = model_.grid().steps - (z_surface ? 1 : 0);
        if (i < 0 || i > last) throw std::out_of_range("BsdeSolution: time index out of range");
        if (node < 0 || node >= model_.node_count(i))
            throw std::out_of_range("BsdeSolution: node index out of range");
    }

    LatticeModel model_;
    std::string generator_label_;
    std::string claim_label_;
    std::vector<std::vector<double>> y_;
    std::vector<std::vector<double>> z_;
};

/// Backward induction from an explicit terminal layer (node order). The
/// claim-based entry point below evaluates the claim and forwards here.
inline BsdeSolution solve_bsde_terminal(const LatticeModel& model, const Generator& g,
                                        std::vector<double> terminal, std::string claim_label) {
    if (g.dimension() != model.dimension())
        throw std::invalid_argument("solve_bsde: generator dimension (" +
                                    std::to_string(g.dimension()) + ") != model dimension (" +
                                    std::to_string(model.dimension()) + ")");
    check_solver_guard(model, g);

    const int N = model.grid().steps;
    const double dt = model.grid().dt;
    const double s = model.increment();
    const int d = model.dimension();
    if (static_cast<int>(terminal.size()) != model.node_count(N))
        throw std::invalid_argument("solve_bsde: terminal layer size mismatch");

    std::vector<std::vector<double>> ys(static_cast<std::size_t>(N) + 1);
    std::vector<std::vector<double>> zs(static_cast<std::size_t>(N));
    ys[static_cast<std::size_t>(N)] = std::move(terminal);

    double max_abs_terminal = 0.0;
    for (double v : ys[static_cast<std::size_t>(N)]) max_abs_terminal = std::max(max_abs_terminal, std::abs(v));

    for (int i = N - 1; i >= 0; --i) {
        const double t = model.time(i);
        auto& y_out = ys[static_cast<std::size_t>(i)];
        auto& z_out = zs[static_cast<std::size_t>(i)];
        const auto& next = ys[static_cast<std::size_t>(i) + 1];
        y_out.resize(static_cast<std::size_t>(model.node_count(i)));
        z_out.resize(static_cast<std::size_t>(model.node_count(i)) * static_cast<std::size_t>(d));
        if (d == 1)
            detail::step_layer_1d(g, t, dt, s, next, y_out, z_out);
        else
            detail::step_layer_2d(g, t, dt, s, i + 1, next, y_out, z_out);
    }

    // Crude a-priori bound. With g(t,y,0) == 0 the update stays inside the
    // successor hull under the guard; the exp factor absorbs y-dependence.
    const double bound =
        (max_abs_terminal + g.lipschitz() * model.grid().horizon * (1.0 + max_abs_terminal)) *
            std::exp(g.lipschitz() * model.grid().horizon) +
        1e-9;
    for (const auto& layer : ys)
        for (double v : layer)
            if (std::abs(v) > bound)
                throw std::runtime_error("solve_bsde: a-priori bound violated (scheme bug?)");

    return BsdeSolution(model, g.label(), std::move(claim_label), std::move(ys), std::move(zs));
}

/// Backward induction over the whole lattice. Deterministic and bit-stable
/// for fixed inputs: plain sequential IEEE arithmetic in node order.
inline BsdeSolution solve_bsde(const LatticeModel& model, const Generator& g, const Claim& xi) {
    return solve_bsde_terminal(model, g, terminal_values(model, xi), xi.label());
}

inline double g_expectation(const LatticeModel& model, const Generator& g, const Claim& xi) {
    return solve_bsde(model, g, xi).g_expectation();
}

/// P_g(A) = E_g[I_A]. The monotone scheme pins I_empty and I_omega exactly
/// and keeps the value inside [0,1]; nothing is clipped.
inline double g_probability(const LatticeModel& model, const Generator& g, const Event& event) {
    return g_expectation(model, g, indicator(event));
}

/// E_g[xi + eta] - E_g[xi] - E_g[eta] from three independent solves.
inline double comonotonic_additivity_gap(const LatticeModel& model, const Generator& g,
                                         const Claim& xi, const Claim& eta) {
    const double joint = g_expectation(model, g, add(xi, eta));
    const double first = g_expectation(model, g, xi);
    const double second = g_expectation(model, g, eta);
    return joint - first - second;
}

/// Lattice analogue of the a-priori stability estimate at t = 0, as an
/// empirical ratio. Left side: sup over time of the layer mean of |dy|^2,
/// plus the time integral of the layer mean of |dz|^2. Right side: the mean
/// of |d xi|^2. (The exact path-sup is not a function of the recombining
/// node alone, so the time-sup is taken outside the layer mean.)
struct StabilityReport {
    double sup_mean_square_y = 0.0;
    double z_square_integral = 0.0;
    double terminal_mean_square = 0.0;
    double ratio = 0.0;  // 0 when both sides vanish
};

inline StabilityReport stability_gap(const LatticeModel& model, const Generator& g,
                                     const Claim& xi1, const Claim& xi2) {
    const BsdeSolution a = solve_bsde(model, g, xi1);
    const BsdeSolution b = solve_bsde(model, g, xi2);
    const int N = model.grid().steps;
    const int d = model.dimension();

    StabilityReport rep;
    // node weights per layer come from the per-coordinate binomial rows
    auto layer_row = [](int i) { return coordinate_count_probabilities(i); };

    for (int i = 0; i <= N; ++i) {
        const auto r = layer_row(i);
        double mean_y = 0.0;
        double mean_z = 0.0;
        const int n = model.node_count(i);
        for (int node = 0; node < n; ++node) {
            const auto j = model.up_counts(i, node);
            const double w = d == 1 ? r[static_cast<std::size_t>(j[0])]
                                    : r[static_cast<std::size_t>(j[0])] * r[static_cast<std::size_t>(j[1])];
            const double dy = a.y(i, node) - b.y(i, node);
            mean_y += w * dy * dy;
            if (i < N) {
                double dz2 = 0.0;
                for (int k = 0; k < d; ++k) {
                    const double dz = a.z(i, node, k) - b.z(i, node, k);
                    dz2 += dz * dz;
                }
                mean_z += w * dz2;
            }
        }
        rep.sup_mean_square_y = std::max(rep.sup_mean_square_y, mean_y);
        if (i < N) rep.z_square_integral += mean_z * model.grid().dt;
        if (i == N) rep.terminal_mean_square = mean_y;
    }
    const double lhs = rep.sup_mean_square_y + rep.z_square_integral;
    rep.ratio = rep.terminal_mean_square > 0.0 ? lhs / rep.terminal_mean_square : 0.0;
    return rep;
}

/// Stability ratios along a refinement ladder. The a-priori estimate only
/// promises some finite constant, so the study flags explosion rather than
/// asserting a sharp bound: a refined ratio more than ten times the coarsest
/// one (or ten, if that is larger) trips the flag.
struct StabilityStudy {
    std::vector<double> ratios;
    bool bounded = true;
};

inline StabilityStudy stability_study(int dimension, double horizon, std::span<const int> ladder,
                                      const Generator& g, const Claim& xi1, const Claim& xi2) {
    StabilityStudy study;
    for (int n : ladder)
        study.ratios.push_back(
            stability_gap(build_lattice(dimension, horizon, n), g, xi1, xi2).ratio);
    if (!study.ratios.empty()) {
        const double cap = 10.0 * std::max(study.ratios.front(), 1.0);
        for (double r : study.ratios) study.bounded = study.bounded && r <= cap;
    }
    return study;
}

/// Substitution conformance check. For a claim xi measurable at time index
/// t0 and a bounded f(x, terminal state), compares two routes node by node:
///  - solve the sub-lattice rooted at each time-t0 node with terminal data
///    f(xi(node), .), reading the value at the sub-lattice root;
///  - solve the full lattice with terminal data f(x, .) for the frozen value
///    x = xi(node), reading the (t0, node) entry of the y surface.
/// Both routes run the same step kernel on the same integer node geometry,
/// so the discrepancy is solver rounding, not O(dt).
inline double substitution_check(const LatticeModel& model, const Generator& g,
                                 const std::function<double(double, const LatticeState&)>& f,
                                 int t0_index, const Claim& xi_t0) {
    const int N = model.grid().steps;
    if (t0_index < 0 || t0_index >= N)
        throw std::invalid_argument("substitution_check: t0 index must lie in [0, steps)");
    const int d = model.dimension();
    const double dt = model.grid().dt;
    const double s = model.increment();
    const int M = N - t0_index;
    const int n0 = model.node_count(t0_index);

    // Route 2 first: one full solve per distinct xi value (keyed exactly).
    std::map<double, std::vector<int>> by_value;
    for (int node = 0; node < n0; ++node) {
        const double x = xi_t0(model.state(t0_index, node));
        if (!std::isfinite(x))
            throw std::runtime_error("substitution_check: xi produced a non-finite value");
        by_value[x].push_back(node);
    }

    double max_diff = 0.0;
    for (const auto& [x, nodes] : by_value) {
        Claim frozen("f(" + detail::format_number(x) + ", .)",
                     [x, &f](const LatticeState& st) { return f(x, st); });
        const BsdeSolution full = solve_bsde(model, g, frozen);

        for (int node : nodes) {
            const auto j0 = model.up_counts(t0_index, node);
            // Sub-lattice solve: terminal states are the full-lattice states of
            // the subtree, derived from integer counts so both routes see
            // bit-identical coordinates.
            std::vector<double> layer;
            if (d == 1) {
                layer.resize(static_cast<std::size_t>(M) + 1);
                for (int jo = 0; jo <= M; ++jo)
                    layer[static_cast<std::size_t>(jo)] =
                        f(x, model.state(N, model.node_index(N, j0[0] + jo)));
                std::vector<double> next(layer);
                for (int i = M - 1; i >= 0; --i) {
                    const double t = model.time(t0_index + i);
                    std::vector<double> y(static_cast<std::size_t>(i) + 1);
                    std::vector<double> z(static_cast<std::size_t>(i) + 1);
                    detail::step_layer_1d(g, t, dt, s, next, y, z);
                    next = std::move(y);
                }
                layer = std::move(next);
            } else {
                const int rows = M + 1;
                layer.resize(static_cast<std::size_t>(rows) * rows);
                for (int a1 = 0; a1 <= M; ++a1)
                    for (int a2 = 0; a2 <= M; ++a2)
                        layer[static_cast<std::size_t>(a1 * rows + a2)] =
                            f(x, model.state(N, model.node_index(N, j0[0] + a1, j0[1] + a2)));
                std::vector<double> next(layer);
                for (int i = M - 1; i >= 0; --i) {
                    const double t = model.time(t0_index + i);
                    std::vector<double> y(static_cast<std::size_t>(i + 1) * (i + 1));
                    std::vector<double> z(2 * static_cast<std::size_t>(i + 1) * (i + 1));
                    detail::step_layer_2d(g, t, dt, s, i + 1, next, y, z);
                    next = std::move(y);
                }
                layer = std::move(next);
            }
            max_diff = std::max(max_diff, std::abs(layer[0] - full.y(t0_index, node)));
        }
    }
    return max_diff;
}

}  // namespace gchoquet
