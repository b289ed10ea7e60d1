#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gchoquet {

/// Uniform time grid over [0, horizon] with `steps` equal intervals.
struct TimeGrid {
    double horizon = 1.0;
    int steps = 1;
    double dt = 1.0;
};

inline TimeGrid make_time_grid(double horizon, int steps) {
    if (!std::isfinite(horizon) || horizon <= 0.0)
        throw std::invalid_argument("TimeGrid: horizon must be finite and > 0");
    if (steps < 1)
        throw std::invalid_argument("TimeGrid: steps must be >= 1");
    return TimeGrid{horizon, steps, horizon / steps};
}

/// Brownian coordinates of a lattice node. Only the first `dimension`
/// entries of `w` are meaningful.
struct LatticeState {
    int dimension = 1;
    std::array<double, 2> w{0.0, 0.0};

    double operator[](int k) const { return w[static_cast<std::size_t>(k)]; }
};

/// Recombining binomial lattice carrying a 1-D or 2-D Brownian motion.
///
/// Node identity is integer: at time index i a coordinate is described by its
/// up-move count j in [0, i], and the Brownian value is derived on demand as
/// (2*j - i) * sqrt(dt). That keeps node matching exact; no floating-point
/// comparisons enter the lattice geometry. One-step transition weights are
/// uniform: 1/2 per branch in one dimension, 1/4 per joint branch in two.
///
/// Node indexing at time index i:
///   d=1: node == up-move count j, 0 <= j <= i
///   d=2: node == j1*(i+1) + j2 (row-major over the two up-move counts)
///
/// Branch indexing: branch b in [0, 2^d); for d=2, b = 2*u1 + u2 where
/// u_k = 1 means coordinate k moves up. Immutable after construction.
class LatticeModel {
public:
    LatticeModel(int dimension, TimeGrid grid)
        : grid_(grid), dimension_(dimension), increment_(std::sqrt(grid.dt)) {
        if (dimension != 1 && dimension != 2)
            throw std::invalid_argument("LatticeModel: dimension must be 1 or 2");
    }

    int dimension() const { return dimension_; }
    const TimeGrid& grid() const { return grid_; }
    double increment() const { return increment_; }  // sqrt(dt)
    double time(int i) const { return i * grid_.dt; }

    int branch_count() const { return dimension_ == 1 ? 2 : 4; }
    double branch_weight() const { return dimension_ == 1 ? 0.5 : 0.25; }

    /// +increment or -increment of coordinate k along branch b.
    double branch_move(int b, int k) const {
        const int up = dimension_ == 1 ? b : (k == 0 ? (b >> 1) : (b & 1));
        return up ? increment_ : -increment_;
    }

    int node_count(int i) const {
        check_time_index(i);
        return dimension_ == 1 ? i + 1 : (i + 1) * (i + 1);
    }

    std::array<int, 2> up_counts(int i, int node) const {
        check_node(i, node);
        if (dimension_ == 1) return {node, 0};
        return {node / (i + 1), node % (i + 1)};
    }

    int node_index(int i, int j1, int j2 = 0) const {
        return dimension_ == 1 ? j1 : j1 * (i + 1) + j2;
    }

    /// Successor node index at time i+1 along branch b.
    int successor(int i, int node, int b) const {
        const auto j = up_counts(i, node);
        if (dimension_ == 1) return j[0] + b;
        return (j[0] + (b >> 1)) * (i + 2) + (j[1] + (b & 1));
    }

    /// Brownian value of coordinate with up-move count j at time index i.
    double coordinate_value(int i, int j) const {
        return static_cast<double>(2 * j - i) * increment_;
    }

    LatticeState state(int i, int node) const {
        const auto j = up_counts(i, node);
        LatticeState st;
        st.dimension = dimension_;
        st.w[0] = coordinate_value(i, j[0]);
        st.w[1] = dimension_ == 2 ? coordinate_value(i, j[1]) : 0.0;
        return st;
    }

private:
    void check_time_index(int i) const {
        if (i < 0 || i > grid_.steps)
            throw std::out_of_range("LatticeModel: time index out of range");
    }
    void check_node(int i, int node) const {
        check_time_index(i);
        const int n = dimension_ == 1 ? i + 1 : (i + 1) * (i + 1);
        if (node < 0 || node >= n)
            throw std::out_of_range("LatticeModel: node index out of range");
    }

    TimeGrid grid_;
    int dimension_;
    double increment_;
};

inline LatticeModel build_lattice(int dimension, double horizon, int steps) {
    return LatticeModel(dimension, make_time_grid(horizon, steps));
}

/// Discrete conditional expectation over one step, and the martingale
/// increment estimate z_k = E[value * dW_k] / dt. For d=1 this reduces to
/// z = (y_up - y_down) / (2 sqrt(dt)).
struct OneStepResult {
    double mean = 0.0;
    std::array<double, 2> z{0.0, 0.0};
};

inline OneStepResult one_step_expectation(const LatticeModel& model, int i,
                                          std::span<const double> successor_values) {
    if (i < 0 || i >= model.grid().steps)
        throw std::out_of_range("one_step_expectation: time index out of range");
    if (static_cast<int>(successor_values.size()) != model.branch_count())
        throw std::invalid_argument("one_step_expectation: successor count mismatch");

    const double s = model.increment();
    OneStepResult r;
    if (model.dimension() == 1) {
        const double yd = successor_values[0], yu = successor_values[1];
        r.mean = 0.5 * (yu + yd);
        r.z[0] = (yu - yd) / (2.0 * s);
    } else {
        // b = 2*u1 + u2: [0]=dd, [1]=du, [2]=ud, [3]=uu (letters: coord1, coord2)
        const double dd = successor_values[0], du = successor_values[1];
        const double ud = successor_values[2], uu = successor_values[3];
        const double hi = uu + ud;   // coordinate 1 up
        const double lo = du + dd;   // coordinate 1 down
        r.mean = 0.25 * (hi + lo);
        r.z[0] = (hi - lo) / (4.0 * s);
        r.z[1] = ((uu - ud) + (du - dd)) / (4.0 * s);
    }
    return r;
}

/// Probabilities of the up-move counts 0..steps of one coordinate
/// (symmetric binomial row, computed by the halving recursion).
inline std::vector<double> coordinate_count_probabilities(int steps) {
    std::vector<double> p{1.0};
    for (int i = 0; i < steps; ++i) {
        std::vector<double> q(i + 2, 0.0);
        q[0] = 0.5 * p[0];
        q[i + 1] = 0.5 * p[i];
        for (int j = 1; j <= i; ++j) q[j] = 0.5 * (p[j - 1] + p[j]);
        p = std::move(q);
    }
    return p;
}

/// Weights of the terminal nodes (product form in two dimensions).
inline std::vector<double> terminal_probabilities(const LatticeModel& model) {
    const int N = model.grid().steps;
    const auto row = coordinate_count_probabilities(N);
    if (model.dimension() == 1) return row;
    std::vector<double> p;
    p.reserve(static_cast<std::size_t>(N + 1) * (N + 1));
    for (int j1 = 0; j1 <= N; ++j1)
        for (int j2 = 0; j2 <= N; ++j2) p.push_back(row[j1] * row[j2]);
    return p;
}

}  // namespace gchoquet
