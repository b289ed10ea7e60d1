#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gchoquet/oracles.hpp"

namespace gchoquet {

/// Deterministic driver g(t, y, z) with declared Lipschitz constant and
/// dimension. Evaluation is pure; instances are immutable value objects.
class Generator {
public:
    using Fn = std::function<double(double, double, std::span<const double>)>;

    Generator() = default;
    Generator(std::string label, int dimension, double lipschitz, Fn fn)
        : label_(std::move(label)), dimension_(dimension), lipschitz_(lipschitz), fn_(std::move(fn)) {
        if (dimension_ != 1 && dimension_ != 2)
            throw std::invalid_argument("Generator: dimension must be 1 or 2");
        if (!(lipschitz_ >= 0.0))
            throw std::invalid_argument("Generator: Lipschitz constant must be >= 0");
    }

    double operator()(double t, double y, std::span<const double> z) const { return fn_(t, y, z); }
    const std::string& label() const { return label_; }
    int dimension() const { return dimension_; }
    double lipschitz() const { return lipschitz_; }

private:
    std::string label_;
    int dimension_ = 1;
    double lipschitz_ = 0.0;
    Fn fn_;
};

// --- built-in drivers --------------------------------------------------------

inline Generator linear_generator(double b) {
    return Generator("linear:" + detail::format_number(b), 1, std::abs(b),
                     [b](double, double, std::span<const double> z) { return b * z[0]; });
}

inline Generator linear2_generator(double b1, double b2) {
    return Generator("linear2:" + detail::format_number(b1) + "," + detail::format_number(b2), 2,
                     std::sqrt(b1 * b1 + b2 * b2),
                     [b1, b2](double, double, std::span<const double> z) {
                         return b1 * z[0] + b2 * z[1];
                     });
}

inline Generator abs_generator(double k) {
    if (!(k >= 0.0)) throw std::invalid_argument("abs_generator: k must be >= 0");
    return Generator("abs:" + detail::format_number(k), 1, k,
                     [k](double, double, std::span<const double> z) { return k * std::abs(z[0]); });
}

inline Generator euclid_generator(double k) {
    if (!(k >= 0.0)) throw std::invalid_argument("euclid_generator: k must be >= 0");
    return Generator("euclid:" + detail::format_number(k), 2, k,
                     [k](double, double, std::span<const double> z) {
                         return k * std::sqrt(z[0] * z[0] + z[1] * z[1]);
                     });
}

/// g(z) = kp*max(z,0) + km*max(-z,0); the one-sided slopes are g(1) = kp and
/// g(-1) = km.
inline Generator kink_generator(double kp, double km) {
    return Generator("kink:" + detail::format_number(kp) + "," + detail::format_number(km), 1,
                     std::max(std::abs(kp), std::abs(km)),
                     [kp, km](double, double, std::span<const double> z) {
                         return kp * std::max(z[0], 0.0) + km * std::max(-z[0], 0.0);
                     });
}

/// Linear driver whose coefficient jumps from b_first to b_second at t_jump.
/// Deliberately discontinuous in t; callers align t_jump with a grid point.
inline Generator step_linear_generator(double b_first, double b_second, double t_jump) {
    return Generator("step-linear:" + detail::format_number(b_first) + "," +
                         detail::format_number(b_second),
                     1, std::max(std::abs(b_first), std::abs(b_second)),
                     [b_first, b_second, t_jump](double t, double, std::span<const double> z) {
                         return (t < t_jump ? b_first : b_second) * z[0];
                     });
}

/// Control driver g = c*y. Violates g(t,y,0) == 0 on purpose; used only to
/// exercise the negative paths of the hypothesis checks.
inline Generator y_control_generator(double c) {
    return Generator("ycontrol:" + detail::format_number(c), 1, std::abs(c),
                     [c](double, double y, std::span<const double>) { return c * y; });
}

// --- hypothesis checks and structural probes ---------------------------------

/// Finite sampling grid the probes run over.
struct ProbeGrid {
    std::vector<double> ts;
    std::vector<double> ys;
    std::vector<std::array<double, 2>> zs;
    std::vector<double> lambdas;
};

inline ProbeGrid default_probe_grid(int dimension, double horizon) {
    ProbeGrid grid;
    grid.ts = {0.0, 0.25 * horizon, 0.5 * horizon, 0.75 * horizon, horizon};
    grid.ys = {-2.0, -1.0, 0.0, 1.0, 3.0};
    const std::vector<double> axis{-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0};
    if (dimension == 1) {
        for (double z : axis) grid.zs.push_back({z, 0.0});
    } else {
        for (double z1 : axis)
            for (double z2 : axis) grid.zs.push_back({z1, z2});
    }
    grid.lambdas = {0.0, 0.5, 1.0, 2.0, 3.0};
    return grid;
}

struct HypothesisReport {
    double h3_max_violation = 0.0;   // max |g(t, y, 0)| over the samples
    double lipschitz_estimate = 0.0; // max observed difference quotient
    double declared_lipschitz = 0.0;
    std::size_t samples = 0;

    bool ok(double tolerance = 1e-9) const {
        return h3_max_violation <= tolerance &&
               lipschitz_estimate <= declared_lipschitz + tolerance;
    }
};

namespace detail {
inline double eval_checked(const Generator& g, double t, double y, std::span<const double> z) {
    const double v = g(t, y, z);
    if (!std::isfinite(v))
        throw std::runtime_error("generator '" + g.label() + "' returned a non-finite value");
    return v;
}
inline double znorm(const std::array<double, 2>& a, const std::array<double, 2>& b, int dim) {
    const double d0 = a[0] - b[0];
    const double d1 = dim == 2 ? a[1] - b[1] : 0.0;
    return std::sqrt(d0 * d0 + d1 * d1);
}
}  // namespace detail

/// Samples g(t,y,0) and the Lipschitz difference quotients over the grid.
/// Refutes, never proves: a clean report certifies the sampled family only.
inline HypothesisReport check_hypotheses(const Generator& g, const ProbeGrid& grid) {
    if (grid.ts.empty() || grid.ys.empty() || grid.zs.empty())
        throw std::invalid_argument("check_hypotheses: empty probe grid");
    const int dim = g.dimension();
    HypothesisReport r;
    r.declared_lipschitz = g.lipschitz();
    const std::array<double, 2> zero{0.0, 0.0};
    for (double t : grid.ts)
        for (double y : grid.ys) {
            r.h3_max_violation = std::max(
                r.h3_max_violation,
                std::abs(detail::eval_checked(g, t, y, std::span<const double>(zero.data(),
                                                                              static_cast<std::size_t>(dim)))));
            ++r.samples;
        }
    for (double t : grid.ts)
        for (double y1 : grid.ys)
            for (double y2 : grid.ys)
                for (const auto& z1 : grid.zs)
                    for (const auto& z2 : grid.zs) {
                        const double denom = std::abs(y1 - y2) + detail::znorm(z1, z2, dim);
                        if (denom == 0.0) continue;
                        const double g1 = detail::eval_checked(
                            g, t, y1, std::span<const double>(z1.data(), static_cast<std::size_t>(dim)));
                        const double g2 = detail::eval_checked(
                            g, t, y2, std::span<const double>(z2.data(), static_cast<std::size_t>(dim)));
                        r.lipschitz_estimate = std::max(r.lipschitz_estimate, std::abs(g1 - g2) / denom);
                        ++r.samples;
                    }
    return r;
}

/// max |g(t, y, lambda z) - lambda g(t, y, z)| over the grid, lambda >= 0.
/// The grid must sample at least lambda in {0, 1/2, 1, 2}.
inline double probe_positive_homogeneity(const Generator& g, const ProbeGrid& grid) {
    for (double needed : {0.0, 0.5, 1.0, 2.0})
        if (std::find(grid.lambdas.begin(), grid.lambdas.end(), needed) == grid.lambdas.end())
            throw std::invalid_argument(
                "probe_positive_homogeneity: grid must include lambda in {0, 1/2, 1, 2}");
    const int dim = g.dimension();
    double dev = 0.0;
    for (double t : grid.ts)
        for (double y : grid.ys)
            for (const auto& z : grid.zs)
                for (double lam : grid.lambdas) {
                    if (lam < 0.0) continue;
                    const std::array<double, 2> lz{lam * z[0], lam * z[1]};
                    const double a = detail::eval_checked(
                        g, t, y, std::span<const double>(lz.data(), static_cast<std::size_t>(dim)));
                    const double b = detail::eval_checked(
                        g, t, y, std::span<const double>(z.data(), static_cast<std::size_t>(dim)));
                    dev = std::max(dev, std::abs(a - lam * b));
                }
    return dev;
}

struct AdditivityReport {
    double max_deviation = 0.0;                  // max |g(z+z') - g(z) - g(z')|
    std::vector<std::pair<double, double>> h;    // (t, g(t,1) + g(t,-1)), d=1 only
};

/// Additivity of g in z over sampled pairs, plus the scalar h(t) combining the
/// two unit slopes in one dimension. Linear drivers report exactly zero.
inline AdditivityReport probe_additivity(const Generator& g, const ProbeGrid& grid) {
    const int dim = g.dimension();
    AdditivityReport r;
    for (double t : grid.ts)
        for (const auto& za : grid.zs)
            for (const auto& zb : grid.zs) {
                const std::array<double, 2> zs{za[0] + zb[0], za[1] + zb[1]};
                const double gs = detail::eval_checked(
                    g, t, 0.0, std::span<const double>(zs.data(), static_cast<std::size_t>(dim)));
                const double ga = detail::eval_checked(
                    g, t, 0.0, std::span<const double>(za.data(), static_cast<std::size_t>(dim)));
                const double gb = detail::eval_checked(
                    g, t, 0.0, std::span<const double>(zb.data(), static_cast<std::size_t>(dim)));
                r.max_deviation = std::max(r.max_deviation, std::abs(gs - ga - gb));
            }
    if (dim == 1) {
        for (double t : grid.ts) {
            const double plus = 1.0, minus = -1.0;
            const double h = detail::eval_checked(g, t, 0.0, std::span<const double>(&plus, 1)) +
                             detail::eval_checked(g, t, 0.0, std::span<const double>(&minus, 1));
            r.h.emplace_back(t, h);
        }
    }
    return r;
}

/// One-dimensional section of g along the unit direction a: the returned
/// driver evaluates (t, y, z) -> g(t, y, a z). Inherits the Lipschitz bound.
inline Generator restrict_to_direction(const Generator& g, std::array<double, 2> a) {
    if (g.dimension() != 2)
        throw std::invalid_argument("restrict_to_direction: base generator must be 2-dimensional");
    const double norm = std::sqrt(a[0] * a[0] + a[1] * a[1]);
    if (std::abs(norm - 1.0) > 1e-12)
        throw std::invalid_argument("restrict_to_direction: direction must be a unit vector");
    Generator base = g;
    return Generator("restrict[" + detail::format_number(a[0]) + "," + detail::format_number(a[1]) +
                         "](" + g.label() + ")",
                     1, g.lipschitz(),
                     [base, a](double t, double y, std::span<const double> z) {
                         const std::array<double, 2> az{a[0] * z[0], a[1] * z[0]};
                         return base(t, y, std::span<const double>(az.data(), 2));
                     });
}

// --- driver description language ---------------------------------------------

struct ParsedGenerator {
    Generator generator;
    /// Set when the driver is linear in z; feeds the Girsanov oracle.
    std::optional<DriftSpec> linear_drift;
};

/// Parses "linear:b", "linear2:b1,b2", "abs:k", "euclid:k", "kink:kp,km",
/// "step-linear:b1,b2" (jump at horizon/2, aligned with any even step grid).
inline ParsedGenerator parse_generator(std::string_view spec, double horizon) {
    const auto colon = spec.find(':');
    const std::string name(spec.substr(0, colon));
    std::vector<double> args;
    if (colon != std::string_view::npos) {
        std::string_view rest = spec.substr(colon + 1);
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const std::string tok(rest.substr(0, comma));
            try {
                std::size_t used = 0;
                args.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw std::invalid_argument("generator '" + std::string(spec) +
                                            "': bad numeric argument '" + tok + "'");
            }
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
    }
    auto want = [&](std::size_t n) {
        if (args.size() != n)
            throw std::invalid_argument("generator '" + std::string(spec) + "': expected " +
                                        std::to_string(n) + " argument(s)");
    };
    if (name == "linear") {
        want(1);
        return {linear_generator(args[0]), DriftSpec::constant(args[0], horizon)};
    }
    if (name == "linear2") {
        want(2);
        return {linear2_generator(args[0], args[1]),
                DriftSpec::constant2(args[0], args[1], horizon)};
    }
    if (name == "abs") {
        want(1);
        return {abs_generator(args[0]), std::nullopt};
    }
    if (name == "euclid") {
        want(1);
        return {euclid_generator(args[0]), std::nullopt};
    }
    if (name == "kink") {
        want(2);
        return {kink_generator(args[0], args[1]), std::nullopt};
    }
    if (name == "step-linear") {
        want(2);
        return {step_linear_generator(args[0], args[1], 0.5 * horizon),
                DriftSpec::step(args[0], args[1], 0.5 * horizon, horizon)};
    }
    throw std::invalid_argument("unknown generator spec '" + std::string(spec) + "'");
}

/// The linear candidate singled out by the dichotomy: b_i(t) = g(t, e_i).
/// Used as the reference driver for the self-calibrated divergence verdicts.
inline Generator basis_linearization(const Generator& g) {
    Generator base = g;
    const int dim = g.dimension();
    return Generator("linearized(" + g.label() + ")", dim, g.lipschitz() * std::sqrt(2.0),
                     [base, dim](double t, double, std::span<const double> z) {
                         double acc = 0.0;
                         for (int k = 0; k < dim; ++k) {
                             std::array<double, 2> e{0.0, 0.0};
                             e[static_cast<std::size_t>(k)] = 1.0;
                             acc += base(t, 0.0, std::span<const double>(e.data(),
                                                                        static_cast<std::size_t>(dim))) *
                                    z[static_cast<std::size_t>(k)];
                         }
                         return acc;
                     });
}

}  // namespace gchoquet
