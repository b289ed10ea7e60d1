#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gchoquet/claims.hpp"

namespace gchoquet {

/// Standard normal CDF via erfc; |error| <= ~1e-15 over the real line. This
/// is the precision floor for every closed-form reference value.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// ---------------------------------------------------------------------------
// Piecewise-constant drift
// ---------------------------------------------------------------------------

/// Deterministic piecewise-constant drift b(t) per component over [0, T].
/// Integrals are exact sums over the pieces; no quadrature enters the oracle.
class DriftSpec {
public:
    struct Piece {
        double t_begin;
        double t_end;
        std::array<double, 2> b;
    };

    DriftSpec(int dimension, double horizon, std::vector<Piece> pieces)
        : dimension_(dimension), horizon_(horizon), pieces_(std::move(pieces)) {
        if (dimension != 1 && dimension != 2)
            throw std::invalid_argument("DriftSpec: dimension must be 1 or 2");
        if (pieces_.empty()) throw std::invalid_argument("DriftSpec: no pieces");
        double t = 0.0;
        for (const auto& p : pieces_) {
            if (!(p.t_begin == t) || !(p.t_end > p.t_begin))
                throw std::invalid_argument("DriftSpec: pieces must partition [0, horizon]");
            if (!std::isfinite(p.b[0]) || !std::isfinite(p.b[1]))
                throw std::invalid_argument("DriftSpec: non-finite drift value");
            t = p.t_end;
        }
        if (std::abs(t - horizon) > 1e-12)
            throw std::invalid_argument("DriftSpec: pieces must end at the horizon");
    }

    static DriftSpec constant(double b, double horizon) {
        return DriftSpec(1, horizon, {Piece{0.0, horizon, {b, 0.0}}});
    }
    static DriftSpec constant2(double b1, double b2, double horizon) {
        return DriftSpec(2, horizon, {Piece{0.0, horizon, {b1, b2}}});
    }
    static DriftSpec step(double b_first, double b_second, double t_jump, double horizon) {
        return DriftSpec(1, horizon,
                         {Piece{0.0, t_jump, {b_first, 0.0}}, Piece{t_jump, horizon, {b_second, 0.0}}});
    }

    int dimension() const { return dimension_; }
    double horizon() const { return horizon_; }

    /// Exact integral of component k over [from, to].
    double integral(double from, double to, int k = 0) const {
        if (from > to) throw std::invalid_argument("DriftSpec::integral: from > to");
        double acc = 0.0;
        for (const auto& p : pieces_) {
            const double lo = std::max(from, p.t_begin);
            const double hi = std::min(to, p.t_end);
            if (hi > lo) acc += p.b[static_cast<std::size_t>(k)] * (hi - lo);
        }
        return acc;
    }
    double total(int k = 0) const { return integral(0.0, horizon_, k); }

private:
    int dimension_;
    double horizon_;
    std::vector<Piece> pieces_;
};

// ---------------------------------------------------------------------------
// Linear (Girsanov) oracle
// ---------------------------------------------------------------------------

namespace detail {

/// E[expr(G + mu)] for G ~ N(0, T I): exact for the claim-expression family
/// (constants, coordinates, half-line and band indicators, sums, scalings).
inline double gaussian_expectation(const ClaimExpr& e, const std::array<double, 2>& mu, double T) {
    using K = ClaimExpr::Kind;
    const double sd = std::sqrt(T);
    const double m = mu[static_cast<std::size_t>(e.coordinate)];
    switch (e.kind) {
        case K::Constant: return e.value;
        case K::Coordinate: return m;
        case K::IndicatorGE: return normal_cdf((m - e.lower) / sd);
        case K::IndicatorLE: return normal_cdf((e.upper - m) / sd);
        case K::IndicatorBand:
            return normal_cdf((e.upper - m) / sd) - normal_cdf((e.lower - m) / sd);
        case K::Sum: {
            double acc = 0.0;
            for (const auto& c : e.children) acc += gaussian_expectation(c, mu, T);
            return acc;
        }
        case K::Scale: return e.value * gaussian_expectation(e.children.front(), mu, T);
    }
    return 0.0;
}

/// Gauss-Hermite nodes and weights for the weight exp(-x^2), by Newton
/// iteration on the recurrence (nodes accurate to machine precision).
inline void gauss_hermite(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(static_cast<std::size_t>(n), 0.0);
    w.assign(static_cast<std::size_t>(n), 0.0);
    const double pim4 = 0.7511255444649425;  // pi^{-1/4}
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        else if (i == 1)
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * x[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * x[1];
        else
            z = 2.0 * z - x[static_cast<std::size_t>(i - 2)];
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
                     std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[static_cast<std::size_t>(i)] = z;
        x[static_cast<std::size_t>(n - 1 - i)] = -z;
        w[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
        w[static_cast<std::size_t>(n - 1 - i)] = w[static_cast<std::size_t>(i)];
    }
}

inline double gh_expectation(const std::function<double(const LatticeState&)>& f,
                             const std::array<double, 2>& mu, double T, int dimension, int order) {
    std::vector<double> x, w;
    gauss_hermite(order, x, w);
    const double scale = std::sqrt(2.0 * T);
    const double norm = 1.0 / std::sqrt(std::numbers::pi);
    double acc = 0.0;
    LatticeState st;
    st.dimension = dimension;
    if (dimension == 1) {
        for (int i = 0; i < order; ++i) {
            st.w[0] = scale * x[static_cast<std::size_t>(i)] + mu[0];
            const double v = f(st);
            if (!std::isfinite(v)) throw std::runtime_error("quadrature: non-finite integrand");
            acc += w[static_cast<std::size_t>(i)] * v;
        }
        return norm * acc;
    }
    for (int i = 0; i < order; ++i)
        for (int j = 0; j < order; ++j) {
            st.w[0] = scale * x[static_cast<std::size_t>(i)] + mu[0];
            st.w[1] = scale * x[static_cast<std::size_t>(j)] + mu[1];
            const double v = f(st);
            if (!std::isfinite(v)) throw std::runtime_error("quadrature: non-finite integrand");
            acc += w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)] * v;
        }
    return norm * norm * acc;
}

}  // namespace detail

/// E[f(W_T + int_0^T b dt)] for W_T ~ N(0, T I), exactly, for structured
/// claims (indicators and affine pieces evaluate through the normal CDF).
inline double linear_girsanov_expectation(const DriftSpec& b, const ClaimExpr& f, double T) {
    if (f.max_coordinate() >= b.dimension())
        throw std::invalid_argument("linear_girsanov_expectation: claim coordinate out of range");
    const std::array<double, 2> mu{b.integral(0.0, T, 0),
                                   b.dimension() == 2 ? b.integral(0.0, T, 1) : 0.0};
    return detail::gaussian_expectation(f, mu, T);
}

/// Same expectation for a black-box integrand via adaptive Gauss-Hermite
/// quadrature (orders 32/64/128/256 until successive values agree to tol).
/// Meant for smooth bounded integrands; indicators belong on the exact path.
inline double linear_girsanov_expectation(const DriftSpec& b,
                                          const std::function<double(const LatticeState&)>& f,
                                          double T, double tol = 1e-10) {
    const std::array<double, 2> mu{b.integral(0.0, T, 0),
                                   b.dimension() == 2 ? b.integral(0.0, T, 1) : 0.0};
    double prev = detail::gh_expectation(f, mu, T, b.dimension(), 32);
    for (int order : {64, 128, 256}) {
        const double cur = detail::gh_expectation(f, mu, T, b.dimension(), order);
        if (std::abs(cur - prev) <= tol) return cur;
        prev = cur;
    }
    throw std::runtime_error("linear_girsanov_expectation: quadrature did not converge");
}

// ---------------------------------------------------------------------------
// Drift-shift oracle for monotone terminal data
// ---------------------------------------------------------------------------

enum class Direction { Increasing, Decreasing };

/// Reference value of the solve under g = k|z| for genuinely monotone
/// one-dimensional terminal data: the martingale integrand has constant sign,
/// so the driver acts as the constant drift +k (increasing data) or -k
/// (decreasing data) and the value is a shifted Gaussian expectation.
inline double drift_shift_monotone_expectation(double k, const ClaimExpr& f, Direction direction,
                                               double T) {
    if (!(k >= 0.0)) throw std::invalid_argument("drift_shift_monotone_expectation: k must be >= 0");
    if (f.max_coordinate() != 0)
        throw std::invalid_argument("drift_shift_monotone_expectation: one-dimensional claims only");
    const Monotonicity m = monotonicity(f);
    if (m == Monotonicity::Unknown)
        throw std::invalid_argument(
            "drift_shift_monotone_expectation: claim direction could not be certified");
    if (m != Monotonicity::Constant) {
        const bool inc = m == Monotonicity::Increasing;
        if (inc != (direction == Direction::Increasing))
            throw std::invalid_argument(
                "drift_shift_monotone_expectation: claim is monotone in the other direction");
    }
    const double shift = direction == Direction::Increasing ? k * T : -k * T;
    return detail::gaussian_expectation(f, {shift, 0.0}, T);
}

// ---------------------------------------------------------------------------
// Closed-form z processes for indicator claims under sign-constant drivers
// ---------------------------------------------------------------------------

namespace detail {
inline void require_before_horizon(double t, double T) {
    if (!(t < T)) throw std::invalid_argument("indicator z formula: requires t < T");
}
inline double gaussian_kernel(double numerator, double t, double T) {
    return std::exp(-(numerator * numerator) / (2.0 * (T - t))) /
           std::sqrt(2.0 * std::numbers::pi * (T - t));
}
}  // namespace detail

/// z(t, w) for the claim I[W_T >= -n] when the driver contributes the drift
/// g(s, 1) along increasing data:
///   z = exp(-(n + w + I)^2 / (2(T-t))) / sqrt(2 pi (T-t)),  I = int_t^T g(s,1) ds.
/// Strictly positive for every valid input.
inline double indicator_tail_z(double t, double w, double n, double drift_integral, double T) {
    detail::require_before_horizon(t, T);
    return detail::gaussian_kernel(n + w + drift_integral, t, T);
}

/// z(t, w) for the claim I[W_T <= 0] (decreasing data, drift from g(s,-1)):
///   z = -exp(-(w - I)^2 / (2(T-t))) / sqrt(2 pi (T-t)),  I = int_t^T g(s,-1) ds.
/// Strictly negative.
inline double indicator_lower_z(double t, double w, double drift_integral, double T) {
    detail::require_before_horizon(t, T);
    return -detail::gaussian_kernel(w - drift_integral, t, T);
}

/// (z1, z2)(t, w1) for the two-dimensional claim I[W^1_T >= n]; the second
/// component is exactly zero. I = int_t^T g(s, e1) ds.
inline std::array<double, 2> indicator_tail_z_coord1(double t, double w1, double n,
                                                     double drift_integral, double T) {
    detail::require_before_horizon(t, T);
    return {detail::gaussian_kernel(n - w1 - drift_integral, t, T), 0.0};
}

/// (z1, z2)(t, w2) for the two-dimensional claim I[W^2_T >= 0]; the first
/// component is exactly zero. I = int_t^T g(s, e2) ds.
inline std::array<double, 2> indicator_half_z_coord2(double t, double w2, double drift_integral,
                                                     double T) {
    detail::require_before_horizon(t, T);
    return {0.0, detail::gaussian_kernel(w2 + drift_integral, t, T)};
}

}  // namespace gchoquet
