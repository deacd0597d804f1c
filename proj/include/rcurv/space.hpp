#pragma once

// Weighted Riemannian charts: a coordinate box with per-axis periodicity,
// metric components g_ij and a positive weight w, so that
// dm = w * sqrt(det g) dx.

#include "rcurv/error.hpp"
#include "rcurv/expr.hpp"

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace rcurv {

/// How random fields are drawn on a space (see suite.hpp).
enum class FieldFamily {
    Trig,    ///< trigonometric polynomials, all axes periodic
    Bump,    ///< polynomial times a radial bump, bounded axes
    Ambient, ///< polynomials in the ambient coordinates of the unit sphere
};

struct ChartSpace {
    std::string name;
    int dim = 2;
    Vec lo{};
    Vec hi{};
    std::array<bool, kMaxDim> periodic{};
    std::array<std::array<Expr, kMaxDim>, kMaxDim> metric; // symmetric, all d*d entries set
    Expr weight;
    std::map<std::string, int> coord_names;

    // Curated-backend metadata.
    std::optional<double> curvature; ///< known constant sectional curvature
    FieldFamily family = FieldFamily::Trig;
    Vec bump_center{};
    double bump_radius = 0.0;

    bool all_periodic() const
    {
        for (int i = 0; i < dim; ++i)
            if (!periodic[i]) return false;
        return true;
    }

    bool any_periodic() const
    {
        for (int i = 0; i < dim; ++i)
            if (periodic[i]) return true;
        return false;
    }

    ParseOptions parse_options() const
    {
        ParseOptions o;
        o.dim = dim;
        o.coords = coord_names;
        return o;
    }

    Expr parse(std::string_view text) const { return parse_expr(text, parse_options()); }
};

namespace detail {

inline ChartSpace flat_space(std::string name, double lo, double hi, bool periodic)
{
    ChartSpace s;
    s.name = std::move(name);
    s.dim = 2;
    for (int i = 0; i < 2; ++i) {
        s.lo[i] = lo;
        s.hi[i] = hi;
        s.periodic[i] = periodic;
        for (int j = 0; j < 2; ++j) s.metric[i][j] = Expr::constant(i == j ? 1.0 : 0.0, 2);
    }
    s.weight = Expr::constant(1.0, 2);
    s.curvature = 0.0;
    s.family = periodic ? FieldFamily::Trig : FieldFamily::Bump;
    return s;
}

// Samples of a face of the box: axis `axis` pinned to `value`, the other axes
// on an 8-point midpoint lattice.
inline std::vector<std::array<double, kMaxDim>> face_points(const ChartSpace& s, int axis,
                                                            double value)
{
    constexpr int kSamples = 8;
    std::vector<std::array<double, kMaxDim>> pts;
    std::array<int, kMaxDim> idx{};
    for (;;) {
        std::array<double, kMaxDim> p{};
        for (int i = 0; i < s.dim; ++i)
            p[i] = i == axis ? value : s.lo[i] + (idx[i] + 0.5) * (s.hi[i] - s.lo[i]) / kSamples;
        pts.push_back(p);
        int i = 0;
        for (; i < s.dim; ++i) {
            if (i == axis) continue;
            if (++idx[i] < kSamples) break;
            idx[i] = 0;
        }
        if (i == s.dim) break;
    }
    return pts;
}

inline double measure_density_value(const ChartSpace& s, std::span<const double> p)
{
    Mat g{};
    for (int i = 0; i < s.dim; ++i)
        for (int j = 0; j < s.dim; ++j) g[i][j] = s.metric[i][j].eval(p);
    double det = 0.0;
    if (s.dim == 1)
        det = g[0][0];
    else if (s.dim == 2)
        det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    else
        det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
              - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
              + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    return s.weight.eval(p) * std::sqrt(std::max(det, 0.0));
}

// A non-periodic face where the measure density vanishes (a pole of a polar
// chart) carries no flux and imposes nothing on the fields.
inline bool face_collapsed(const ChartSpace& s, int axis, double value, double tol)
{
    try {
        for (const auto& p : face_points(s, axis, value))
            if (std::abs(measure_density_value(s, std::span<const double>(p.data(), s.dim)))
                > tol)
                return false;
    } catch (const DomainError&) {
        return false;
    }
    return true;
}

inline bool jets_match(const Jet& a, const Jet& b, double tol)
{
    const auto close = [tol](double x, double y) {
        return std::abs(x - y) <= tol * (1.0 + std::max(std::abs(x), std::abs(y)));
    };
    if (!close(a.v, b.v)) return false;
    for (int i = 0; i < a.dim; ++i) {
        if (!close(a.d1[i], b.d1[i])) return false;
        for (int j = 0; j < a.dim; ++j) {
            if (!close(a.d2[i][j], b.d2[i][j])) return false;
            for (int k = 0; k < a.dim; ++k)
                if (!close(a.d3[i][j][k], b.d3[i][j][k])) return false;
        }
    }
    return true;
}

} // namespace detail

/// True iff `e` and its jets agree across every pair of identified faces.
inline bool periodic_match(const Expr& e, const ChartSpace& s, double tol)
{
    try {
        for (int a = 0; a < s.dim; ++a) {
            if (!s.periodic[a]) continue;
            const auto lo = detail::face_points(s, a, s.lo[a]);
            const auto hi = detail::face_points(s, a, s.hi[a]);
            for (std::size_t n = 0; n < lo.size(); ++n) {
                const Jet jl = e.eval_jet(std::span<const double>(lo[n].data(), s.dim), 3);
                const Jet jh = e.eval_jet(std::span<const double>(hi[n].data(), s.dim), 3);
                if (!detail::jets_match(jl, jh, tol)) return false;
            }
        }
    } catch (const DomainError&) {
        return false;
    }
    return true;
}

/// True iff `e` vanishes with all its jets on every non-periodic face that
/// is not collapsed.
inline bool vanishes_on_boundary(const Expr& e, const ChartSpace& s, double tol)
{
    try {
        for (int a = 0; a < s.dim; ++a) {
            if (s.periodic[a]) continue;
            for (double face : {s.lo[a], s.hi[a]}) {
                if (detail::face_collapsed(s, a, face, tol)) continue;
                for (const auto& p : detail::face_points(s, a, face))
                    if (e.eval_jet(std::span<const double>(p.data(), s.dim), 3).max_abs() > tol)
                        return false;
            }
        }
    } catch (const DomainError&) {
        return false;
    }
    return true;
}

/// Boundary admissibility: periodic across identified faces and compactly
/// supported away from the remaining (non-collapsed) faces.
inline bool periodicity_check(const Expr& e, const ChartSpace& s, double tol)
{
    return periodic_match(e, s, tol) && vanishes_on_boundary(e, s, tol);
}

/// Throws GeometryError if the metric or weight break periodicity.
inline void validate_space(const ChartSpace& s)
{
    if (s.dim < 1 || s.dim > kMaxDim)
        throw GeometryError("space '" + s.name + "': dimension must be 1..3");
    for (int i = 0; i < s.dim; ++i) {
        if (!(s.hi[i] > s.lo[i]))
            throw GeometryError("space '" + s.name + "': empty domain on axis "
                                + std::to_string(i));
        for (int j = 0; j < s.dim; ++j) {
            if (s.metric[i][j].empty())
                throw GeometryError("space '" + s.name + "': metric entry missing");
            if (s.metric[i][j].to_string() != s.metric[j][i].to_string())
                throw GeometryError("space '" + s.name + "': metric is not symmetric");
            if (!periodic_match(s.metric[i][j], s, 1e-9))
                throw GeometryError("space '" + s.name + "': metric breaks periodicity");
        }
    }
    if (s.weight.empty()) throw GeometryError("space '" + s.name + "': weight missing");
    if (!periodic_match(s.weight, s, 1e-9))
        throw GeometryError("space '" + s.name + "': weight breaks periodicity");
}

inline const std::vector<std::string>& backend_names()
{
    static const std::vector<std::string> names{
        "euclidean", "torus", "weighted-torus", "sphere", "hyperbolic-disk",
        "gauss-weighted-plane"};
    return names;
}

/// Expands a built-in backend name to its chart space.
inline ChartSpace make_backend(const std::string& name)
{
    constexpr double two_pi = 2 * std::numbers::pi;
    if (name == "euclidean") {
        auto s = detail::flat_space(name, -1.0, 1.0, false);
        s.bump_radius = 0.9;
        return s;
    }
    if (name == "torus") return detail::flat_space(name, 0.0, two_pi, true);
    if (name == "weighted-torus") {
        auto s = detail::flat_space(name, 0.0, two_pi, true);
        s.weight = s.parse("exp(sin(x0))");
        return s;
    }
    if (name == "gauss-weighted-plane") {
        auto s = detail::flat_space(name, -6.0, 6.0, false);
        s.weight = s.parse("exp(-(x0*x0+x1*x1)/2)");
        s.bump_radius = 5.8;
        return s;
    }
    if (name == "hyperbolic-disk") {
        // Square inscribed in the disk of radius 0.9, so the whole chart stays
        // clear of the conformal singularity at r = 1.
        auto s = detail::flat_space(name, -0.63, 0.63, false);
        const Expr conf = s.parse("4/(1-x0*x0-x1*x1)^2");
        s.metric[0][0] = conf;
        s.metric[1][1] = conf;
        s.curvature = -1.0;
        s.bump_radius = 0.6;
        return s;
    }
    if (name == "sphere") {
        ChartSpace s;
        s.name = name;
        s.dim = 2;
        s.lo = {0.0, 0.0, 0.0};
        s.hi = {std::numbers::pi, two_pi, 0.0};
        s.periodic = {false, true, false};
        s.coord_names = {{"theta", 0}, {"phi", 1}};
        s.metric[0][0] = Expr::constant(1.0, 2);
        s.metric[0][1] = Expr::constant(0.0, 2);
        s.metric[1][0] = s.metric[0][1];
        s.metric[1][1] = s.parse("sin(theta)^2");
        s.weight = Expr::constant(1.0, 2);
        s.curvature = 1.0;
        s.family = FieldFamily::Ambient;
        return s;
    }
    throw Error("unknown backend '" + name + "'");
}

} // namespace rcurv
