#pragma once

// Distributional covariant derivative, Lie bracket and curvature, realised
// as lazy quadrature evaluators on test objects. Every pairing re-walks the
// grid; only the operand fields are sampled up front.

#include "rcurv/error.hpp"
#include "rcurv/field.hpp"
#include "rcurv/geom.hpp"
#include "rcurv/quadrature.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace rcurv {

namespace detail {

inline void require_same_grid(const GridPtr& a, const GridPtr& b)
{
    if (a.get() != b.get()) throw Error("operands sampled on different grids");
}

struct TermSum {
    double value = 0.0;
    double majorant = 0.0;
    void add(double t)
    {
        value += t;
        majorant += std::abs(t);
    }
    operator Term() const { return {value, majorant}; }
};

} // namespace detail

/// Element of TestV(M)': a linear functional on test vector fields.
class CovectorDistribution {
public:
    using Kernel = std::function<Term(std::size_t node, const VectorSample& W)>;

    CovectorDistribution(GridPtr grid, std::string provenance, Kernel kernel)
        : grid_(std::move(grid)), provenance_(std::move(provenance)), kernel_(std::move(kernel))
    {
    }

    static CovectorDistribution zero(GridPtr grid)
    {
        return CovectorDistribution(std::move(grid), "zero",
                                    [](std::size_t, const VectorSample&) { return Term{}; });
    }

    const GridPtr& grid() const noexcept { return grid_; }
    const std::string& provenance() const noexcept { return provenance_; }

    /// Pairing with a sampled field; also returns the L1 majorant.
    Integral pair(const SampledField& W) const
    {
        detail::require_same_grid(grid_, W.grid);
        if (!W.at.empty() && W.at.front().order < 1)
            throw Error("pairing needs the first derivatives of the test field");
        return integrate_terms(*grid_, [&](std::size_t n) { return kernel_(n, W.at[n]); });
    }

    Integral pair(const TestVector& W) const { return pair(*sample(W, grid_)); }

    double operator()(const TestVector& W) const { return pair(W).value; }
    double operator()(const SampledField& W) const { return pair(W).value; }

    Term kernel(std::size_t n, const VectorSample& W) const { return kernel_(n, W); }

    /// (f T)(W) := T(f W), with f W formed pointwise.
    CovectorDistribution times(const TestFunction& f) const
    {
        return times(sample(f, grid_, 2));
    }

    CovectorDistribution times(ScalarPtr f) const
    {
        detail::require_same_grid(grid_, f->grid);
        auto k = kernel_;
        return CovectorDistribution(grid_, "(" + provenance_ + ")*f",
                                    [k, f](std::size_t n, const VectorSample& W) {
                                        return k(n, scale_sample(f->at[n], W));
                                    });
    }

    friend CovectorDistribution operator+(const CovectorDistribution& a,
                                          const CovectorDistribution& b)
    {
        detail::require_same_grid(a.grid_, b.grid_);
        auto ka = a.kernel_, kb = b.kernel_;
        return CovectorDistribution(a.grid_, a.provenance_ + " + " + b.provenance_,
                                    [ka, kb](std::size_t n, const VectorSample& W) {
                                        const Term x = ka(n, W), y = kb(n, W);
                                        return Term{x.value + y.value, x.majorant + y.majorant};
                                    });
    }

private:
    GridPtr grid_;
    std::string provenance_;
    Kernel kernel_;
};

/// Element of Test(M)': a linear functional on test functions.
class ScalarDistribution {
public:
    using Kernel = std::function<Term(std::size_t node, const Jet& f)>;

    ScalarDistribution(GridPtr grid, std::string provenance, Kernel kernel)
        : grid_(std::move(grid)), provenance_(std::move(provenance)), kernel_(std::move(kernel))
    {
    }

    const GridPtr& grid() const noexcept { return grid_; }
    const std::string& provenance() const noexcept { return provenance_; }

    Integral pair(const SampledScalar& f) const
    {
        detail::require_same_grid(grid_, f.grid);
        return integrate_terms(*grid_, [&](std::size_t n) { return kernel_(n, f.at[n]); });
    }

    Integral pair(const TestFunction& f) const { return pair(*sample(f, grid_, 2)); }

    double operator()(const TestFunction& f) const { return pair(f).value; }

    /// (f S)(g) := S(f g).
    ScalarDistribution times(const TestFunction& f) const
    {
        auto fs = sample(f, grid_, 2);
        auto k = kernel_;
        return ScalarDistribution(grid_, "(" + provenance_ + ")*f",
                                  [k, fs](std::size_t n, const Jet& g) { return k(n, fs->at[n] * g); });
    }

private:
    GridPtr grid_;
    std::string provenance_;
    Kernel kernel_;
};

inline double evaluate(const CovectorDistribution& T, const TestVector& W) { return T(W); }
inline double evaluate_scalar(const ScalarDistribution& S, const TestFunction& f) { return S(f); }

/// nabla_X Y as the functional
///   W -> int -<nabla_X W, Y> - <Y, W> div_m X dm.
/// X needs one derivative (for div_m X); Y only values.
inline CovectorDistribution distr_cov_deriv(FieldPtr X, FieldPtr Y)
{
    detail::require_same_grid(X->grid, Y->grid);
    GridPtr grid = X->grid;
    const QuadratureGrid* g = grid.get();
    return CovectorDistribution(grid, "cov_deriv", [X, Y, g](std::size_t n, const VectorSample& W) {
        const MetricAtPoint& m = g->metric(n);
        const VectorSample& x = X->at[n];
        const VectorSample& y = Y->at[n];
        detail::TermSum t;
        t.add(-m.inner(cov_deriv_pointwise(x, W, m), y.comp));
        t.add(-m.inner(y.comp, W.comp) * divergence_m(x, m));
        return Term(t);
    });
}

inline CovectorDistribution distr_cov_deriv(const TestVector& X, const TestVector& Y,
                                            const GridPtr& grid)
{
    return distr_cov_deriv(sample(X, grid), sample(Y, grid));
}

namespace detail {

// <nabla_A W, B> + <B, W> div_m A, with its L1 majorant.
inline Term cov_deriv_part(const VectorSample& a, const VectorSample& b, const VectorSample& W,
                           const MetricAtPoint& m)
{
    const double t1 = m.inner(cov_deriv_pointwise(a, W, m), b.comp);
    const double t2 = m.inner(b.comp, W.comp) * divergence_m(a, m);
    return {t1 + t2, std::abs(t1) + std::abs(t2)};
}

} // namespace detail

/// [X,Y] := nabla_X Y - nabla_Y X, assembled as a single integrand. The two
/// halves are formed separately, so swapping X and Y negates it exactly.
inline CovectorDistribution distr_lie(FieldPtr X, FieldPtr Y)
{
    detail::require_same_grid(X->grid, Y->grid);
    GridPtr grid = X->grid;
    const QuadratureGrid* g = grid.get();
    return CovectorDistribution(grid, "lie", [X, Y, g](std::size_t n, const VectorSample& W) {
        const MetricAtPoint& m = g->metric(n);
        const Term a = detail::cov_deriv_part(X->at[n], Y->at[n], W, m);
        const Term b = detail::cov_deriv_part(Y->at[n], X->at[n], W, m);
        return Term{b.value - a.value, a.majorant + b.majorant};
    });
}

inline CovectorDistribution distr_lie(const TestVector& X, const TestVector& Y, const GridPtr& grid)
{
    return distr_lie(sample(X, grid), sample(Y, grid));
}

/// Right-hand side of the bracket pairing against g grad f:
///   int -X(g)Y(f) - g Y(f) div X + Y(g) X(f) + g X(f) div Y dm.
inline Integral lief_formula(const SampledField& X, const SampledField& Y, const SampledScalar& f,
                             const SampledScalar& g)
{
    detail::require_same_grid(X.grid, Y.grid);
    detail::require_same_grid(X.grid, f.grid);
    detail::require_same_grid(X.grid, g.grid);
    const QuadratureGrid& grid = *X.grid;
    return integrate_terms(grid, [&](std::size_t n) {
        const MetricAtPoint& m = grid.metric(n);
        const VectorSample& x = X.at[n];
        const VectorSample& y = Y.at[n];
        const Jet& fj = f.at[n];
        const Jet& gj = g.at[n];
        const double xf = directional(x, fj), yf = directional(y, fj);
        const double xg = directional(x, gj), yg = directional(y, gj);
        detail::TermSum t;
        t.add(-xg * yf);
        t.add(-gj.v * yf * divergence_m(x, m));
        t.add(yg * xf);
        t.add(gj.v * xf * divergence_m(y, m));
        return Term(t);
    });
}

inline Integral lief_formula(const TestVector& X, const TestVector& Y, const TestFunction& f,
                             const TestFunction& g, const GridPtr& grid)
{
    return lief_formula(*sample(X, grid), *sample(Y, grid), *sample(f, grid, 1), *sample(g, grid, 1));
}

/// Both sides of div(h[X,Y]) = div(X div(hY) - Y div(hX)) at every node.
struct BracketDivergence {
    std::vector<double> lhs; ///< direct: differentiate the bracket components
    std::vector<double> rhs; ///< via divergences of h X and h Y
    double max_discrepancy = 0.0;
    double scale = 1.0; ///< 1 + max over nodes of the summed term magnitudes
};

inline BracketDivergence bracket_divergence(const SampledScalar& h, const SampledField& X,
                                            const SampledField& Y)
{
    detail::require_same_grid(X.grid, Y.grid);
    detail::require_same_grid(X.grid, h.grid);
    const QuadratureGrid& grid = *X.grid;
    const int d = grid.dim();
    BracketDivergence out;
    out.lhs.resize(grid.size());
    out.rhs.resize(grid.size());
    double maj = 0.0;
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const MetricAtPoint& m = grid.metric(n);
        const VectorSample& x = X.at[n];
        const VectorSample& y = Y.at[n];
        const Jet& hj = h.at[n];

        // div(h B) = h div B + B(h)
        const VectorSample b = lie_bracket_pointwise(x, y, m);
        detail::TermSum lhs;
        lhs.add(hj.v * divergence_m(b, m));
        lhs.add(directional(b, hj));

        // a = div(h Y) = h div Y + Y(h), and its gradient; likewise c for X.
        const auto div_h = [&](const VectorSample& v, double& value, Vec& grad) {
            const double dv = divergence_m(v, m);
            const Vec ddv = d_divergence_m(v, m);
            value = hj.v * dv + directional(v, hj);
            for (int i = 0; i < d; ++i) {
                double s = hj.d1[i] * dv + hj.v * ddv[i];
                for (int j = 0; j < d; ++j) s += v.dcomp[j][i] * hj.d1[j] + v.comp[j] * hj.d2[j][i];
                grad[i] = s;
            }
        };
        double a = 0.0, c = 0.0;
        Vec da{}, dc{};
        div_h(y, a, da);
        div_h(x, c, dc);
        // div(X a - Y c) = a div X + X(a) - c div Y - Y(c)
        detail::TermSum rhs;
        rhs.add(a * divergence_m(x, m));
        double xa = 0.0, yc = 0.0;
        for (int i = 0; i < d; ++i) {
            xa += x.comp[i] * da[i];
            yc += y.comp[i] * dc[i];
        }
        rhs.add(xa);
        rhs.add(-c * divergence_m(y, m));
        rhs.add(-yc);

        out.lhs[n] = lhs.value;
        out.rhs[n] = rhs.value;
        out.max_discrepancy = std::max(out.max_discrepancy, std::abs(lhs.value - rhs.value));
        maj = std::max(maj, lhs.majorant + rhs.majorant);
    }
    out.scale = 1.0 + maj;
    return out;
}

namespace detail {

struct CurvatureNode {
    Vec nyz{}; ///< nabla_Y Z
    Vec nxz{}; ///< nabla_X Z
    VectorSample bracket;
    double div_x = 0.0;
    double div_y = 0.0;
    double div_b = 0.0;
};

} // namespace detail

/// R(X,Y)Z := nabla_X(nabla_Y Z) - nabla_Y(nabla_X Z) - nabla_[X,Y] Z, with
/// the inner derivatives classical and the outer ones distributional.
inline CovectorDistribution curvature_op(FieldPtr X, FieldPtr Y, FieldPtr Z)
{
    detail::require_same_grid(X->grid, Y->grid);
    detail::require_same_grid(X->grid, Z->grid);
    GridPtr grid = X->grid;
    auto nodes = std::make_shared<std::vector<detail::CurvatureNode>>(grid->size());
    for (std::size_t n = 0; n < grid->size(); ++n) {
        const MetricAtPoint& m = grid->metric(n);
        auto& c = (*nodes)[n];
        c.nyz = cov_deriv_pointwise(Y->at[n], Z->at[n], m);
        c.nxz = cov_deriv_pointwise(X->at[n], Z->at[n], m);
        c.bracket = lie_bracket_pointwise(X->at[n], Y->at[n], m);
        c.div_x = divergence_m(X->at[n], m);
        c.div_y = divergence_m(Y->at[n], m);
        c.div_b = divergence_m(c.bracket, m);
    }
    const QuadratureGrid* g = grid.get();
    return CovectorDistribution(grid, "curvature", [X, Y, Z, nodes, g](std::size_t n, const VectorSample& W) {
        const MetricAtPoint& m = g->metric(n);
        const auto& c = (*nodes)[n];
        const VectorSample& x = X->at[n];
        const VectorSample& y = Y->at[n];
        const VectorSample& z = Z->at[n];
        const double p1 = m.inner(cov_deriv_pointwise(x, W, m), c.nyz);
        const double p2 = m.inner(c.nyz, W.comp) * c.div_x;
        const double q1 = m.inner(cov_deriv_pointwise(y, W, m), c.nxz);
        const double q2 = m.inner(c.nxz, W.comp) * c.div_y;
        const double b1 = m.inner(cov_deriv_pointwise(c.bracket, W, m), z.comp);
        const double b2 = m.inner(z.comp, W.comp) * c.div_b;
        // (Q - P) + B: exchanging X and Y swaps P, Q and negates B exactly.
        return Term{((q1 + q2) - (p1 + p2)) + (b1 + b2),
                    std::abs(p1) + std::abs(p2) + std::abs(q1) + std::abs(q2) + std::abs(b1)
                        + std::abs(b2)};
    });
}

inline CovectorDistribution curvature_op(const TestVector& X, const TestVector& Y,
                                         const TestVector& Z, const GridPtr& grid)
{
    return curvature_op(sample(X, grid), sample(Y, grid), sample(Z, grid));
}

/// R(X,Y,Z,W)(f) := (R(X,Y)Z)(f W).
inline ScalarDistribution curvature_scalar(FieldPtr X, FieldPtr Y, FieldPtr Z, FieldPtr W)
{
    detail::require_same_grid(X->grid, W->grid);
    auto R = std::make_shared<CovectorDistribution>(curvature_op(X, Y, Z));
    return ScalarDistribution(X->grid, "curvature_scalar", [R, W](std::size_t n, const Jet& f) {
        return R->kernel(n, scale_sample(f, W->at[n]));
    });
}

inline ScalarDistribution curvature_scalar(const TestVector& X, const TestVector& Y,
                                           const TestVector& Z, const TestVector& W,
                                           const GridPtr& grid)
{
    return curvature_scalar(sample(X, grid), sample(Y, grid), sample(Z, grid), sample(W, grid));
}

/// Classical pairing int <nabla_X Y, W> dm.
inline Integral classical_cov_pairing(const SampledField& X, const SampledField& Y,
                                      const SampledField& W)
{
    const QuadratureGrid& grid = *X.grid;
    return integrate_terms(grid, [&](std::size_t n) {
        const MetricAtPoint& m = grid.metric(n);
        const double v = m.inner(cov_deriv_pointwise(X.at[n], Y.at[n], m), W.at[n].comp);
        return Term{v, std::abs(v)};
    });
}

/// Classical pairing int <[X,Y], W> dm.
inline Integral classical_bracket_pairing(const SampledField& X, const SampledField& Y,
                                          const SampledField& W)
{
    const QuadratureGrid& grid = *X.grid;
    return integrate_terms(grid, [&](std::size_t n) {
        const MetricAtPoint& m = grid.metric(n);
        const double v = m.inner(lie_bracket_pointwise(X.at[n], Y.at[n], m).comp, W.at[n].comp);
        return Term{v, std::abs(v)};
    });
}

/// int f R_cl(X,Y,Z,W) dm with the Christoffel-based Riemann tensor.
inline Integral classical_curvature_pairing(const SampledField& X, const SampledField& Y,
                                            const SampledField& Z, const SampledField& W,
                                            const SampledScalar& f)
{
    const QuadratureGrid& grid = *X.grid;
    const int d = grid.dim();
    return integrate_terms(grid, [&](std::size_t n) {
        const Ten4 R = riemann_oracle(grid.metric(n));
        const double v = f.at[n].v
                         * riemann_contract(R, X.at[n].comp, Y.at[n].comp, Z.at[n].comp,
                                            W.at[n].comp, d);
        return Term{v, std::abs(v)};
    });
}

/// int f |X ^ Y|^2 dm.
inline Integral wedge_integral(const SampledField& X, const SampledField& Y, const SampledScalar& f)
{
    const QuadratureGrid& grid = *X.grid;
    return integrate_terms(grid, [&](std::size_t n) {
        const double v = f.at[n].v * wedge_norm_sq(X.at[n].comp, Y.at[n].comp, grid.metric(n));
        return Term{v, std::abs(v)};
    });
}

struct MarginResult {
    double margin = 0.0;         ///< R(X,Y,Y,X)(f) - k int f |X^Y|^2 dm
    double curvature = 0.0;      ///< R(X,Y,Y,X)(f)
    double wedge = 0.0;          ///< int f |X^Y|^2 dm
    double scale = 1.0;          ///< 1 + L1 majorants of both parts
};

/// Margin of the lower sectional bound k for one probe (X, Y, f >= 0).
inline MarginResult sectional_margin(FieldPtr X, FieldPtr Y, ScalarPtr f, double k)
{
    for (std::size_t n = 0; n < f->at.size(); ++n)
        if (f->at[n].v < 0.0)
            throw DomainError("sectional_margin: f is negative at node " + std::to_string(n));
    const Integral curv = curvature_scalar(X, Y, Y, X).pair(*f);
    const Integral wedge = wedge_integral(*X, *Y, *f);
    MarginResult r;
    r.curvature = curv.value;
    r.wedge = wedge.value;
    r.margin = curv.value - k * wedge.value;
    r.scale = 1.0 + curv.majorant + std::abs(k) * wedge.majorant;
    return r;
}

inline MarginResult sectional_margin(const TestVector& X, const TestVector& Y, const TestFunction& f,
                                     double k, const GridPtr& grid)
{
    return sectional_margin(sample(X, grid), sample(Y, grid), sample(f, grid, 2), k);
}

} // namespace rcurv
