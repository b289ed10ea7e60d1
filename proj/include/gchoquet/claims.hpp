#pragma once

#include <charconv>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gchoquet/lattice.hpp"

namespace gchoquet {

/// Absolute slack used when comparing a derived Brownian value against an
/// indicator threshold. A node whose exact value equals the threshold must
/// count as >= it even if deriving w from the integer coordinates drifted by
/// an ulp; thresholds are always treated non-strictly.
inline constexpr double kAtomTolerance = 1e-12;

// ---------------------------------------------------------------------------
// Claim expressions
//
// Small AST behind the textual claim description language:
//   const(c)            constant claim
//   coord(k)            value of W^k at the terminal time, k in {1,2}
//   ind(w1>=a)          indicator of a lower-bounded half-line
//   ind(a>=w1)          indicator of an upper-bounded half-line
//   ind(a>=w1>=b)       indicator of a band
//   sum(e1,e2,...)      pointwise sum
//   scale(c,e)          pointwise scaling
// The same AST doubles as the structured form the closed-form oracles accept.
// ---------------------------------------------------------------------------

struct ClaimExpr {
    enum class Kind { Constant, Coordinate, IndicatorGE, IndicatorLE, IndicatorBand, Sum, Scale };

    Kind kind = Kind::Constant;
    double value = 0.0;   // Constant: c; Scale: factor
    double lower = 0.0;   // IndicatorGE / IndicatorBand
    double upper = 0.0;   // IndicatorLE / IndicatorBand
    int coordinate = 0;   // Coordinate / indicators (0-based)
    std::vector<ClaimExpr> children;

    double eval(const LatticeState& st) const {
        switch (kind) {
            case Kind::Constant: return value;
            case Kind::Coordinate: return st[coordinate];
            case Kind::IndicatorGE: return st[coordinate] >= lower - kAtomTolerance ? 1.0 : 0.0;
            case Kind::IndicatorLE: return st[coordinate] <= upper + kAtomTolerance ? 1.0 : 0.0;
            case Kind::IndicatorBand:
                return (st[coordinate] >= lower - kAtomTolerance &&
                        st[coordinate] <= upper + kAtomTolerance)
                           ? 1.0
                           : 0.0;
            case Kind::Sum: {
                double acc = 0.0;
                for (const auto& c : children) acc += c.eval(st);
                return acc;
            }
            case Kind::Scale: return value * children.front().eval(st);
        }
        return 0.0;
    }

    /// Highest coordinate index referenced (0 if none), for dimension checks.
    int max_coordinate() const {
        int m = 0;
        if (kind == Kind::Coordinate || kind == Kind::IndicatorGE || kind == Kind::IndicatorLE ||
            kind == Kind::IndicatorBand)
            m = coordinate;
        for (const auto& c : children) m = std::max(m, c.max_coordinate());
        return m;
    }
};

/// Direction of a one-dimensional claim expression in its single coordinate.
enum class Monotonicity { Constant, Increasing, Decreasing, Unknown };

inline Monotonicity monotonicity(const ClaimExpr& e) {
    auto combine = [](Monotonicity a, Monotonicity b) {
        if (a == Monotonicity::Constant) return b;
        if (b == Monotonicity::Constant) return a;
        return a == b ? a : Monotonicity::Unknown;
    };
    switch (e.kind) {
        case ClaimExpr::Kind::Constant: return Monotonicity::Constant;
        case ClaimExpr::Kind::Coordinate: return Monotonicity::Increasing;
        case ClaimExpr::Kind::IndicatorGE: return Monotonicity::Increasing;
        case ClaimExpr::Kind::IndicatorLE: return Monotonicity::Decreasing;
        case ClaimExpr::Kind::IndicatorBand: return Monotonicity::Unknown;
        case ClaimExpr::Kind::Sum: {
            Monotonicity m = Monotonicity::Constant;
            for (const auto& c : e.children) {
                m = combine(m, monotonicity(c));
                if (m == Monotonicity::Unknown) return m;
            }
            return m;
        }
        case ClaimExpr::Kind::Scale: {
            if (e.value == 0.0) return Monotonicity::Constant;
            Monotonicity m = monotonicity(e.children.front());
            if (e.value > 0.0 || m == Monotonicity::Constant || m == Monotonicity::Unknown)
                return m;
            return m == Monotonicity::Increasing ? Monotonicity::Decreasing
                                                 : Monotonicity::Increasing;
        }
    }
    return Monotonicity::Unknown;
}

namespace detail {

inline std::string format_number(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

inline std::string to_string(const ClaimExpr& e) {
    using K = ClaimExpr::Kind;
    const std::string w = "w" + std::to_string(e.coordinate + 1);
    switch (e.kind) {
        case K::Constant: return "const(" + detail::format_number(e.value) + ")";
        case K::Coordinate: return "coord(" + std::to_string(e.coordinate + 1) + ")";
        case K::IndicatorGE: return "ind(" + w + ">=" + detail::format_number(e.lower) + ")";
        case K::IndicatorLE: return "ind(" + detail::format_number(e.upper) + ">=" + w + ")";
        case K::IndicatorBand:
            return "ind(" + detail::format_number(e.upper) + ">=" + w + ">=" +
                   detail::format_number(e.lower) + ")";
        case K::Sum: {
            std::string out = "sum(";
            for (std::size_t i = 0; i < e.children.size(); ++i) {
                if (i) out += ",";
                out += to_string(e.children[i]);
            }
            return out + ")";
        }
        case K::Scale:
            return "scale(" + detail::format_number(e.value) + "," + to_string(e.children.front()) +
                   ")";
    }
    return {};
}

// --- parser ----------------------------------------------------------------

namespace detail {

struct ClaimParser {
    std::string_view s;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("claim '" + std::string(s) + "': " + what + " at offset " +
                                    std::to_string(pos));
    }
    bool consume(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!consume(c)) fail(std::string("expected '") + c + "'");
    }
    std::string_view ident() {
        skip_ws();
        const std::size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
            ++pos;
        if (pos == start) fail("expected identifier");
        return s.substr(start, pos - start);
    }
    double number() {
        skip_ws();
        const char* begin = s.data() + pos;
        const char* end = s.data() + s.size();
        double v = 0.0;
        const auto res = std::from_chars(begin, end, v);
        if (res.ec != std::errc()) fail("expected number");
        pos += static_cast<std::size_t>(res.ptr - begin);
        return v;
    }

    // w1 / w2, returning the 0-based coordinate
    int coordinate_var() {
        const auto id = ident();
        if (id == "w1") return 0;
        if (id == "w2") return 1;
        fail("expected w1 or w2");
    }

    bool next_is_coordinate() {
        skip_ws();
        return pos + 1 < s.size() && s[pos] == 'w' && (s[pos + 1] == '1' || s[pos + 1] == '2');
    }

    void expect_ge() {
        skip_ws();
        if (pos + 1 < s.size() && s[pos] == '>' && s[pos + 1] == '=') {
            pos += 2;
            return;
        }
        fail("expected '>='");
    }

    ClaimExpr indicator_body() {
        ClaimExpr e;
        if (next_is_coordinate()) {
            // w >= a
            e.kind = ClaimExpr::Kind::IndicatorGE;
            e.coordinate = coordinate_var();
            expect_ge();
            e.lower = number();
            return e;
        }
        // a >= w  or  a >= w >= b
        const double a = number();
        expect_ge();
        e.coordinate = coordinate_var();
        skip_ws();
        if (pos + 1 < s.size() && s[pos] == '>' && s[pos + 1] == '=') {
            pos += 2;
            e.kind = ClaimExpr::Kind::IndicatorBand;
            e.upper = a;
            e.lower = number();
            if (e.lower > e.upper) fail("empty band: lower bound exceeds upper bound");
        } else {
            e.kind = ClaimExpr::Kind::IndicatorLE;
            e.upper = a;
        }
        return e;
    }

    ClaimExpr expr() {
        const auto id = ident();
        ClaimExpr e;
        if (id == "const") {
            expect('(');
            e.kind = ClaimExpr::Kind::Constant;
            e.value = number();
            expect(')');
        } else if (id == "coord") {
            expect('(');
            e.kind = ClaimExpr::Kind::Coordinate;
            const double k = number();
            if (k != 1.0 && k != 2.0) fail("coord() takes 1 or 2");
            e.coordinate = static_cast<int>(k) - 1;
            expect(')');
        } else if (id == "ind") {
            expect('(');
            e = indicator_body();
            expect(')');
        } else if (id == "sum") {
            expect('(');
            e.kind = ClaimExpr::Kind::Sum;
            e.children.push_back(expr());
            while (consume(',')) e.children.push_back(expr());
            expect(')');
        } else if (id == "scale") {
            expect('(');
            e.kind = ClaimExpr::Kind::Scale;
            e.value = number();
            expect(',');
            e.children.push_back(expr());
            expect(')');
        } else {
            fail("unknown form '" + std::string(id) + "'");
        }
        return e;
    }
};

}  // namespace detail

inline ClaimExpr parse_claim(std::string_view spec) {
    detail::ClaimParser p{spec};
    ClaimExpr e = p.expr();
    p.skip_ws();
    if (p.pos != spec.size()) p.fail("trailing input");
    return e;
}

// ---------------------------------------------------------------------------
// Claims and events
// ---------------------------------------------------------------------------

/// Terminal random variable: a deterministic evaluation rule on terminal
/// lattice states, plus a descriptive label.
class Claim {
public:
    using Fn = std::function<double(const LatticeState&)>;

    Claim() = default;
    Claim(std::string label, Fn fn) : label_(std::move(label)), fn_(std::move(fn)) {}

    double operator()(const LatticeState& st) const { return fn_(st); }
    const std::string& label() const { return label_; }
    bool valid() const { return static_cast<bool>(fn_); }

private:
    std::string label_;
    Fn fn_;
};

/// Terminal event: a total predicate on terminal lattice states.
class Event {
public:
    using Fn = std::function<bool(const LatticeState&)>;

    Event() = default;
    Event(std::string label, Fn fn) : label_(std::move(label)), fn_(std::move(fn)) {}

    bool operator()(const LatticeState& st) const { return fn_(st); }
    const std::string& label() const { return label_; }

private:
    std::string label_;
    Fn fn_;
};

inline Event always_event() {
    return Event("omega", [](const LatticeState&) { return true; });
}
inline Event never_event() {
    return Event("empty", [](const LatticeState&) { return false; });
}

/// Event {W^k >= threshold} (threshold on an atom is included).
inline Event threshold_event(int coordinate, double threshold) {
    std::string label = "w" + std::to_string(coordinate + 1) + ">=" + detail::format_number(threshold);
    return Event(std::move(label), [coordinate, threshold](const LatticeState& st) {
        return st[coordinate] >= threshold - kAtomTolerance;
    });
}

/// Event {upper >= W^k >= lower}.
inline Event band_event(int coordinate, double upper, double lower) {
    if (lower > upper) throw std::invalid_argument("band_event: lower exceeds upper");
    std::string label = detail::format_number(upper) + ">=w" + std::to_string(coordinate + 1) +
                        ">=" + detail::format_number(lower);
    return Event(std::move(label), [coordinate, upper, lower](const LatticeState& st) {
        return st[coordinate] >= lower - kAtomTolerance && st[coordinate] <= upper + kAtomTolerance;
    });
}

/// I_A: takes the value 1 exactly on nodes satisfying the event.
inline Claim indicator(const Event& event) {
    Event ev = event;
    return Claim("ind(" + event.label() + ")",
                 [ev](const LatticeState& st) { return ev(st) ? 1.0 : 0.0; });
}

inline Claim constant_claim(double c) {
    return Claim("const(" + detail::format_number(c) + ")", [c](const LatticeState&) { return c; });
}

inline Claim coordinate_claim(int coordinate) {
    return Claim("coord(" + std::to_string(coordinate + 1) + ")",
                 [coordinate](const LatticeState& st) { return st[coordinate]; });
}

/// Pointwise linear combination sum_i coefficients[i] * claims[i].
inline Claim combine(std::span<const Claim> claims, std::span<const double> coefficients) {
    if (claims.size() != coefficients.size())
        throw std::invalid_argument("combine: claims/coefficients length mismatch");
    std::vector<Claim> cs(claims.begin(), claims.end());
    std::vector<double> as(coefficients.begin(), coefficients.end());
    std::string label;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (i) label += " + ";
        label += detail::format_number(as[i]) + "*[" + cs[i].label() + "]";
    }
    return Claim(std::move(label), [cs, as](const LatticeState& st) {
        double acc = 0.0;
        for (std::size_t i = 0; i < cs.size(); ++i) acc += as[i] * cs[i](st);
        return acc;
    });
}

inline Claim add(const Claim& a, const Claim& b) {
    const Claim cs[] = {a, b};
    const double ones[] = {1.0, 1.0};
    return combine(cs, ones);
}

/// Claim evaluating a parsed expression; label is the canonical spelling.
inline Claim claim_from_expr(const ClaimExpr& e) {
    return Claim(to_string(e), [e](const LatticeState& st) { return e.eval(st); });
}

inline Claim claim_from_spec(std::string_view spec) { return claim_from_expr(parse_claim(spec)); }

/// One-dimensional claim expression read along the projection a . W of a
/// two-dimensional terminal state. Used by the direction-reduction checks.
inline Claim projected_claim(const ClaimExpr& e, std::array<double, 2> a) {
    if (e.max_coordinate() != 0)
        throw std::invalid_argument("projected_claim: expression must only use w1");
    return Claim("proj[" + detail::format_number(a[0]) + "," + detail::format_number(a[1]) + "](" +
                     to_string(e) + ")",
                 [e, a](const LatticeState& st) {
                     LatticeState p;
                     p.dimension = 1;
                     p.w[0] = a[0] * st.w[0] + a[1] * st.w[1];
                     return e.eval(p);
                 });
}

/// Values of a claim over the terminal layer, in node order.
inline std::vector<double> terminal_values(const LatticeModel& model, const Claim& xi) {
    const int N = model.grid().steps;
    const int n = model.node_count(N);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int node = 0; node < n; ++node) {
        v[static_cast<std::size_t>(node)] = xi(model.state(N, node));
        if (!std::isfinite(v[static_cast<std::size_t>(node)]))
            throw std::runtime_error("claim '" + xi.label() + "' produced a non-finite value");
    }
    return v;
}

/// Exact comonotonicity over the terminal sample space: true iff
/// (xi(n) - xi(n'))(eta(n) - eta(n')) >= 0 for every pair of terminal nodes.
/// O(n^2) with early exit.
inline bool is_comonotonic(const LatticeModel& model, const Claim& xi, const Claim& eta) {
    const auto a = terminal_values(model, xi);
    const auto b = terminal_values(model, eta);
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = i + 1; k < n; ++k)
            if ((a[i] - a[k]) * (b[i] - b[k]) < 0.0) return false;
    return true;
}

}  // namespace gchoquet
