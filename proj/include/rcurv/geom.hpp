#pragma once

// Pointwise Riemannian geometry on a weighted chart: metric data and
// Christoffel symbols, gradients, Hessians, samples of test vector fields with
// two derivative orders, covariant derivatives, the divergence with respect to
// m = w vol, Lie brackets and the classical Riemann tensor.
//
// Index conventions (all chart components):
//   dg[k][i][j]          = d_k g_ij
//   Gamma[k][i][j]       = Gamma^k_ij
//   dGamma[l][k][i][j]   = d_l Gamma^k_ij
//   VectorSample::dcomp[i][j]     = d_j X^i
//   VectorSample::d2comp[i][j][k] = d_j d_k X^i

#include "rcurv/error.hpp"
#include "rcurv/expr.hpp"
#include "rcurv/space.hpp"

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace rcurv {

using Ten4 = std::array<Ten3, kMaxDim>;

struct MetricAtPoint {
    int dim = 2;
    Mat g{};
    Mat ginv{};
    double det = 1.0;
    double sqrt_det = 1.0;
    Ten3 dg{};
    Ten4 d2g{};
    Ten3 dginv{};  ///< dginv[k][i][j] = d_k g^ij
    Ten4 d2ginv{}; ///< d2ginv[k][l][i][j] = d_k d_l g^ij
    Ten3 Gamma{};
    Ten4 dGamma{};
    Jet w_jet;
    Vec drho{}; ///< d_i log(w sqrt det g)
    Mat d2rho{};

    /// Order-2 jet of g^ij.
    Jet ginv_jet(int i, int j) const
    {
        Jet r(dim, 2, ginv[i][j]);
        for (int k = 0; k < dim; ++k) {
            r.d1[k] = dginv[k][i][j];
            for (int l = 0; l < dim; ++l) r.d2[k][l] = d2ginv[k][l][i][j];
        }
        return r;
    }

    double inner(const Vec& u, const Vec& v) const
    {
        double s = 0.0;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) s += g[i][j] * u[i] * v[j];
        return s;
    }

    /// Measure density w * sqrt(det g).
    double density() const { return w_jet.v * sqrt_det; }
};

namespace detail {

inline Jet det_jet(const std::array<std::array<Jet, kMaxDim>, kMaxDim>& G, int d)
{
    if (d == 1) return G[0][0];
    if (d == 2) return G[0][0] * G[1][1] - G[0][1] * G[1][0];
    return G[0][0] * (G[1][1] * G[2][2] - G[1][2] * G[2][1])
           - G[0][1] * (G[1][0] * G[2][2] - G[1][2] * G[2][0])
           + G[0][2] * (G[1][0] * G[2][1] - G[1][1] * G[2][0]);
}

// Cofactor C_ij; for symmetric G, ginv = C / det.
inline Jet cofactor_jet(const std::array<std::array<Jet, kMaxDim>, kMaxDim>& G, int d, int i,
                        int j)
{
    if (d == 1) return Jet::constant(G[0][0].dim, G[0][0].order, 1.0);
    if (d == 2) {
        const int oi = 1 - i, oj = 1 - j;
        return (i + j) % 2 == 0 ? G[oi][oj] : -G[oi][oj];
    }
    int r[2], c[2];
    for (int a = 0, n = 0; a < 3; ++a)
        if (a != i) r[n++] = a;
    for (int a = 0, n = 0; a < 3; ++a)
        if (a != j) c[n++] = a;
    Jet m = G[r[0]][c[0]] * G[r[1]][c[1]] - G[r[0]][c[1]] * G[r[1]][c[0]];
    return (i + j) % 2 == 0 ? m : -m;
}

inline std::string point_string(std::span<const double> p)
{
    std::string s = "(";
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) s += ", ";
        s += format_number(p[i]);
    }
    return s + ")";
}

} // namespace detail

/// Metric, inverse, Christoffel symbols and measure data at `p`.
inline MetricAtPoint metric_at(const ChartSpace& space, std::span<const double> p)
{
    const int d = space.dim;
    if (d < 1 || d > kMaxDim) throw GeometryError("dimension must be 1..3");
    MetricAtPoint m;
    m.dim = d;

    std::array<std::array<Jet, kMaxDim>, kMaxDim> G;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            G[i][j] = space.metric[i][j].eval_jet(p, 2);
            G[j][i] = G[i][j];
        }

    // Leading principal minors decide positive definiteness.
    const double m1 = G[0][0].v;
    const double m2 = d >= 2 ? G[0][0].v * G[1][1].v - G[0][1].v * G[1][0].v : 1.0;
    const Jet det = detail::det_jet(G, d);
    if (det.v == 0.0)
        throw GeometryError("singular metric at " + detail::point_string(p));
    if (!(m1 > 0.0 && m2 > 0.0 && det.v > 0.0))
        throw GeometryError("metric not positive definite at " + detail::point_string(p));

    m.w_jet = space.weight.eval_jet(p, 2);
    if (!(m.w_jet.v > 0.0)) throw GeometryError("non-positive weight at " + detail::point_string(p));

    const double r = 1.0 / det.v;
    const Jet inv_det = compose(det, r, -r * r, 2 * r * r * r, -6 * r * r * r * r);
    std::array<std::array<Jet, kMaxDim>, kMaxDim> Ginv;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            Ginv[i][j] = detail::cofactor_jet(G, d, j, i) * inv_det;
            Ginv[j][i] = Ginv[i][j];
        }

    m.det = det.v;
    m.sqrt_det = std::sqrt(det.v);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            m.g[i][j] = G[i][j].v;
            m.ginv[i][j] = Ginv[i][j].v;
            for (int k = 0; k < d; ++k) {
                m.dg[k][i][j] = G[i][j].d1[k];
                m.dginv[k][i][j] = Ginv[i][j].d1[k];
                for (int l = 0; l < d; ++l) {
                    m.d2g[k][l][i][j] = G[i][j].d2[k][l];
                    m.d2ginv[k][l][i][j] = Ginv[i][j].d2[k][l];
                }
            }
        }

    const double wi = 1.0 / m.w_jet.v;
    const Jet log_w = compose(m.w_jet, std::log(m.w_jet.v), wi, -wi * wi, 2 * wi * wi * wi);
    const Jet log_det = compose(det, std::log(det.v), r, -r * r, 2 * r * r * r);
    const Jet rho = log_w + 0.5 * log_det;
    for (int i = 0; i < d; ++i) {
        m.drho[i] = rho.d1[i];
        for (int j = 0; j < d; ++j) m.d2rho[i][j] = rho.d2[i][j];
    }

    // Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij), carried as
    // order-1 jets so that the same pass yields d Gamma.
    for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                Jet acc(d, 1, 0.0);
                for (int l = 0; l < d; ++l) {
                    const Jet lower = partial(G[j][l], i) + partial(G[i][l], j) - partial(G[i][j], l);
                    acc = acc + Ginv[k][l].truncated(1) * lower;
                }
                acc = 0.5 * acc;
                m.Gamma[k][i][j] = m.Gamma[k][j][i] = acc.v;
                for (int l = 0; l < d; ++l) m.dGamma[l][k][i][j] = m.dGamma[l][k][j][i] = acc.d1[l];
            }
    return m;
}

/// (grad f)^i = g^ij d_j f.
inline Vec grad_vec(const Jet& f, const MetricAtPoint& m)
{
    Vec r{};
    for (int i = 0; i < m.dim; ++i)
        for (int j = 0; j < m.dim; ++j) r[i] += m.ginv[i][j] * f.d1[j];
    return r;
}

inline Vec grad_vec(const Expr& f, std::span<const double> p, const MetricAtPoint& m)
{
    return grad_vec(f.eval_jet(p, 1), m);
}

/// (Hf)_ij = d_i d_j f - Gamma^k_ij d_k f.
inline Mat hessian_bilinear(const Jet& f, const MetricAtPoint& m)
{
    Mat h{};
    for (int i = 0; i < m.dim; ++i)
        for (int j = 0; j < m.dim; ++j) {
            double s = f.d2[i][j];
            for (int k = 0; k < m.dim; ++k) s -= m.Gamma[k][i][j] * f.d1[k];
            h[i][j] = s;
        }
    return h;
}

inline Mat hessian_bilinear(const Expr& f, std::span<const double> p, const MetricAtPoint& m)
{
    return hessian_bilinear(f.eval_jet(p, 2), m);
}

/// Chart components of a vector field with up to two derivatives.
struct VectorSample {
    int dim = 2;
    int order = 2; ///< number of valid derivative orders
    Vec comp{};
    Mat dcomp{};
    Ten3 d2comp{};
};

/// Jets of one atom f * grad g at a point; `f` needs order 2, `g` order 3.
struct AtomJets {
    Jet f;
    Jet g;
};

/// Sample of sum_a f_a grad g_a from the atoms' jets.
inline VectorSample field_sample(std::span<const AtomJets> atoms, const MetricAtPoint& m)
{
    const int d = m.dim;
    std::array<Jet, kMaxDim * kMaxDim> ginv_ij;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) ginv_ij[i * kMaxDim + j] = m.ginv_jet(i, j);

    std::array<Jet, kMaxDim> comp;
    for (int i = 0; i < d; ++i) comp[i] = Jet(d, 2, 0.0);
    for (const auto& a : atoms) {
        std::array<Jet, kMaxDim> dg;
        for (int j = 0; j < d; ++j) dg[j] = partial(a.g, j);
        for (int i = 0; i < d; ++i) {
            Jet grad_i(d, 2, 0.0);
            for (int j = 0; j < d; ++j) grad_i = grad_i + ginv_ij[i * kMaxDim + j] * dg[j];
            comp[i] = comp[i] + a.f * grad_i;
        }
    }

    VectorSample s;
    s.dim = d;
    s.order = 2;
    for (int i = 0; i < d; ++i) {
        s.comp[i] = comp[i].v;
        for (int j = 0; j < d; ++j) {
            s.dcomp[i][j] = comp[i].d1[j];
            for (int k = 0; k < d; ++k) s.d2comp[i][j][k] = comp[i].d2[j][k];
        }
    }
    return s;
}

/// (nabla_X Y)^k = X^j d_j Y^k + Gamma^k_ij X^i Y^j.
inline Vec cov_deriv_pointwise(const VectorSample& X, const VectorSample& Y, const MetricAtPoint& m)
{
    Vec r{};
    const int d = m.dim;
    for (int k = 0; k < d; ++k) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += X.comp[j] * Y.dcomp[k][j];
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) s += m.Gamma[k][i][j] * X.comp[i] * Y.comp[j];
        r[k] = s;
    }
    return r;
}

/// Divergence with respect to m: d_i X^i + X^i d_i log(w sqrt det g).
inline double divergence_m(const VectorSample& X, const MetricAtPoint& m)
{
    double s = 0.0;
    for (int i = 0; i < m.dim; ++i) s += X.dcomp[i][i] + X.comp[i] * m.drho[i];
    return s;
}

/// Coordinate gradient of divergence_m; needs X.d2comp.
inline Vec d_divergence_m(const VectorSample& X, const MetricAtPoint& m)
{
    Vec r{};
    const int d = m.dim;
    for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int i = 0; i < d; ++i)
            s += X.d2comp[i][i][j] + X.dcomp[i][j] * m.drho[i] + X.comp[i] * m.d2rho[i][j];
        r[j] = s;
    }
    return r;
}

/// [X,Y] with one derivative; the Christoffel terms cancel.
inline VectorSample lie_bracket_pointwise(const VectorSample& X, const VectorSample& Y,
                                          const MetricAtPoint& m)
{
    const int d = m.dim;
    VectorSample b;
    b.dim = d;
    b.order = 1;
    // Each entry is (X-part) - (Y-part) with mirrored summation order, so
    // swapping X and Y negates the result exactly.
    for (int k = 0; k < d; ++k) {
        double cx = 0.0, cy = 0.0;
        for (int j = 0; j < d; ++j) {
            cx += X.comp[j] * Y.dcomp[k][j];
            cy += Y.comp[j] * X.dcomp[k][j];
        }
        b.comp[k] = cx - cy;
        for (int l = 0; l < d; ++l) {
            double sx = 0.0, sy = 0.0;
            for (int j = 0; j < d; ++j) {
                sx += X.dcomp[j][l] * Y.dcomp[k][j] + X.comp[j] * Y.d2comp[k][j][l];
                sy += Y.dcomp[j][l] * X.dcomp[k][j] + Y.comp[j] * X.d2comp[k][j][l];
            }
            b.dcomp[k][l] = sx - sy;
        }
    }
    return b;
}

/// Directional derivative X(f) = X^i d_i f.
inline double directional(const VectorSample& X, const Jet& f)
{
    double s = 0.0;
    for (int i = 0; i < X.dim; ++i) s += X.comp[i] * f.d1[i];
    return s;
}

/// |X|^2 |Y|^2 - <X,Y>^2, tiny negatives from rounding clamped to zero.
inline double wedge_norm_sq(const Vec& X, const Vec& Y, const MetricAtPoint& m)
{
    const double xx = m.inner(X, X), yy = m.inner(Y, Y), xy = m.inner(X, Y);
    const double w = xx * yy - xy * xy;
    return w < 0.0 ? 0.0 : w;
}

/// Lowered Riemann tensor R[a][b][c][d] = g_ae R^e_bcd, where
/// R^e_bcd = d_c Gamma^e_db - d_d Gamma^e_cb + Gamma^e_cm Gamma^m_db
///           - Gamma^e_dm Gamma^m_cb
/// is the component of R(d_c, d_d) d_b. Hence
/// R(X,Y,Z,W) = <R(X,Y)Z, W> = R[a][b][c][d] W^a Z^b X^c Y^d.
inline Ten4 riemann_oracle(const MetricAtPoint& m)
{
    const int n = m.dim;
    Ten4 up{};
    for (int e = 0; e < n; ++e)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < n; ++d) {
                    double s = m.dGamma[c][e][d][b] - m.dGamma[d][e][c][b];
                    for (int k = 0; k < n; ++k)
                        s += m.Gamma[e][c][k] * m.Gamma[k][d][b] - m.Gamma[e][d][k] * m.Gamma[k][c][b];
                    up[e][b][c][d] = s;
                }
    Ten4 low{};
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < n; ++d) {
                    double s = 0.0;
                    for (int e = 0; e < n; ++e) s += m.g[a][e] * up[e][b][c][d];
                    low[a][b][c][d] = s;
                }
    return low;
}

inline Ten4 riemann_oracle(const ChartSpace& space, std::span<const double> p)
{
    return riemann_oracle(metric_at(space, p));
}

/// R(X,Y,Z,W) = <R(X,Y)Z, W> from the lowered array.
inline double riemann_contract(const Ten4& R, const Vec& X, const Vec& Y, const Vec& Z, const Vec& W,
                               int dim)
{
    double s = 0.0;
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
            for (int c = 0; c < dim; ++c)
                for (int d = 0; d < dim; ++d) s += R[a][b][c][d] * W[a] * Z[b] * X[c] * Y[d];
    return s;
}

} // namespace rcurv
