#include "rcurv/field.hpp"
#include "rcurv/geom.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace rcurv;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> pt(double a, double b) { return {a, b}; }

VectorSample sample_at(const TestVector& X, const ChartSpace& s, const std::vector<double>& p)
{
    return field_sample(X, p, metric_at(s, p));
}

TestVector atom(const ChartSpace& s, const char* f, const char* g)
{
    return TestVector::gradient_atom(TestFunction(s, f), TestFunction(s, g));
}

// Random interior point of a backend, away from singular faces.
std::vector<double> random_point(const ChartSpace& s, std::mt19937_64& rng)
{
    std::vector<double> p(s.dim);
    for (int i = 0; i < s.dim; ++i) {
        const double pad = 0.1 * (s.hi[i] - s.lo[i]);
        std::uniform_real_distribution<double> u(s.lo[i] + pad, s.hi[i] - pad);
        p[i] = u(rng);
    }
    return p;
}

// Christoffel symbols from central differences of metric values only.
Ten3 christoffel_fd(const ChartSpace& s, const std::vector<double>& p, double h)
{
    const int d = s.dim;
    const auto g_at = [&](const std::vector<double>& q, int i, int j) { return s.metric[i][j].eval(q); };
    Ten3 dg{};
    for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                dg[k][i][j] = oracle::central_diff([&](const std::vector<double>& q) { return g_at(q, i, j); },
                                                   p, k, h);
    const MetricAtPoint m = metric_at(s, p);
    Ten3 G{};
    for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double acc = 0.0;
                for (int l = 0; l < d; ++l) acc += m.ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                G[k][i][j] = 0.5 * acc;
            }
    return G;
}

} // namespace

TEST(Metric, FlatIsTrivial)
{
    const auto s = make_backend("euclidean");
    const auto m = metric_at(s, pt(0.3, -0.2));
    EXPECT_EQ(m.sqrt_det, 1.0);
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) EXPECT_EQ(m.Gamma[k][i][j], 0.0);
}

TEST(Metric, SphereChristoffelAtEquator)
{
    const auto s = make_backend("sphere");
    const auto m = metric_at(s, pt(kPi / 2, 1.0));
    EXPECT_NEAR(m.Gamma[0][1][1], 0.0, 1e-15);
    EXPECT_NEAR(m.Gamma[1][0][1], 0.0, 1e-15);

    const double th = 0.8;
    const auto m2 = metric_at(s, pt(th, 2.0));
    EXPECT_NEAR(m2.Gamma[0][1][1], -std::sin(th) * std::cos(th), 1e-14);
    EXPECT_NEAR(m2.Gamma[1][0][1], std::cos(th) / std::sin(th), 1e-14);
    EXPECT_NEAR(m2.Gamma[1][1][0], std::cos(th) / std::sin(th), 1e-14);
    EXPECT_NEAR(m2.Gamma[0][0][0], 0.0, 1e-15);
}

TEST(Metric, PoincareDiskAtOrigin)
{
    const auto s = make_backend("hyperbolic-disk");
    const auto m = metric_at(s, pt(0.0, 0.0));
    EXPECT_DOUBLE_EQ(m.sqrt_det, 4.0);
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) EXPECT_NEAR(m.Gamma[k][i][j], 0.0, 1e-15);
}

TEST(Metric, InverseAndSymmetry)
{
    std::mt19937_64 rng(3);
    for (const auto& name : backend_names()) {
        const auto s = make_backend(name);
        for (int t = 0; t < 20; ++t) {
            const auto m = metric_at(s, random_point(s, rng));
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    double id = 0.0;
                    for (int k = 0; k < 2; ++k) id += m.g[i][k] * m.ginv[k][j];
                    EXPECT_NEAR(id, i == j ? 1.0 : 0.0, 1e-12);
                    for (int k = 0; k < 2; ++k) EXPECT_EQ(m.Gamma[k][i][j], m.Gamma[k][j][i]);
                }
        }
    }
}

TEST(Metric, ChristoffelAndDerivativeMatchFiniteDifferences)
{
    std::mt19937_64 rng(11);
    const double h = 1e-4;
    for (const auto& name : backend_names()) {
        const auto s = make_backend(name);
        for (int t = 0; t < 100; ++t) {
            const auto p = random_point(s, rng);
            const auto m = metric_at(s, p);
            const Ten3 G = christoffel_fd(s, p, 1e-5);
            for (int k = 0; k < 2; ++k)
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        EXPECT_NEAR(G[k][i][j], m.Gamma[k][i][j], 1e-6 * std::max(1.0, std::abs(m.Gamma[k][i][j])))
                            << name;
            for (int l = 0; l < 2; ++l) {
                auto pp = p, pm = p;
                pp[l] += h;
                pm[l] -= h;
                const auto mp = metric_at(s, pp), mm = metric_at(s, pm);
                for (int k = 0; k < 2; ++k)
                    for (int i = 0; i < 2; ++i)
                        for (int j = 0; j < 2; ++j) {
                            const double fd = (mp.Gamma[k][i][j] - mm.Gamma[k][i][j]) / (2 * h);
                            const double ex = m.dGamma[l][k][i][j];
                            EXPECT_LE(std::abs(fd - ex), 1e-5 * std::max(1.0, std::abs(ex))) << name;
                        }
            }
        }
    }
}

TEST(Metric, RejectsIndefiniteAndSingular)
{
    auto s = make_backend("euclidean");
    s.metric[1][1] = s.parse("-1");
    EXPECT_THROW(metric_at(s, pt(0.0, 0.0)), GeometryError);
    s.metric[1][1] = s.parse("x0");
    EXPECT_THROW(metric_at(s, pt(0.0, 0.0)), GeometryError);
    auto w = make_backend("euclidean");
    w.weight = w.parse("x0");
    EXPECT_THROW(metric_at(w, pt(-0.5, 0.0)), GeometryError);
}

TEST(Gradient, Examples)
{
    const auto flat = make_backend("euclidean");
    const auto p = pt(0.2, 0.4);
    const Vec g = grad_vec(flat.parse("x0"), p, metric_at(flat, p));
    EXPECT_EQ(g[0], 1.0);
    EXPECT_EQ(g[1], 0.0);

    const auto sphere = make_backend("sphere");
    const auto q = pt(kPi / 3, 0.5);
    const Vec gs = grad_vec(sphere.parse("phi"), q, metric_at(sphere, q));
    EXPECT_NEAR(gs[0], 0.0, 1e-15);
    EXPECT_NEAR(gs[1], 4.0 / 3.0, 1e-14);
}

TEST(Gradient, ScalesInverselyWithMetric)
{
    auto s = make_backend("euclidean");
    auto c = s;
    c.metric[0][0] = c.parse("2.5");
    c.metric[1][1] = c.parse("2.5");
    const Expr f = s.parse("sin(x0)*x1+x1^2");
    const auto p = pt(0.3, -0.6);
    const Vec a = grad_vec(f, p, metric_at(s, p));
    const Vec b = grad_vec(f, p, metric_at(c, p));
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(b[i], a[i] / 2.5, 1e-15);
}

TEST(Hessian, Examples)
{
    const auto flat = make_backend("euclidean");
    const auto p = pt(0.2, 0.4);
    const Mat h = hessian_bilinear(flat.parse("x0*x1"), p, metric_at(flat, p));
    EXPECT_EQ(h[0][0], 0.0);
    EXPECT_EQ(h[0][1], 1.0);
    EXPECT_EQ(h[1][0], 1.0);
    EXPECT_EQ(h[1][1], 0.0);

    const auto q = pt(kPi / 2, 0.0);
    const Mat hs = hessian_bilinear(flat.parse("sin(x0)"), q, metric_at(flat, q));
    EXPECT_DOUBLE_EQ(hs[0][0], -1.0);
    EXPECT_EQ(hs[0][1], 0.0);
    EXPECT_EQ(hs[1][1], 0.0);
}

TEST(Hessian, CosThetaOnSphereIsMinusCosThetaTimesMetric)
{
    const auto s = make_backend("sphere");
    for (double th : {0.3, 1.1, 2.5}) {
        const auto p = pt(th, 1.7);
        const auto m = metric_at(s, p);
        const Mat h = hessian_bilinear(s.parse("cos(theta)"), p, m);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) EXPECT_NEAR(h[i][j], -std::cos(th) * m.g[i][j], 1e-14);
    }
}

TEST(Hessian, DirectionalDerivativeOfGradientNorm)
{
    std::mt19937_64 rng(5);
    for (const auto& name : backend_names()) {
        const auto s = make_backend(name);
        for (int t = 0; t < 20; ++t) {
            const auto p = random_point(s, rng);
            const auto m = metric_at(s, p);
            const Expr g = s.parse("sin(x0+0.3)*cos(x1)+0.2*x0*x1");
            const Jet gj = g.eval_jet(p, 3);
            const Vec grad = grad_vec(gj, m);
            const Mat H = hessian_bilinear(gj, m);
            // d_k |grad g|^2 = d_k (g^ij d_i g d_j g)
            Vec dnorm{};
            for (int k = 0; k < 2; ++k)
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        dnorm[k] += m.dginv[k][i][j] * gj.d1[i] * gj.d1[j]
                                    + 2 * m.ginv[i][j] * gj.d2[k][i] * gj.d1[j];
            const Vec X{0.7, -1.3, 0.0};
            double lhs = 0.0, rhs = 0.0;
            for (int k = 0; k < 2; ++k) lhs += X[k] * dnorm[k];
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) rhs += 2 * H[i][j] * X[i] * grad[j];
            EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs))) << name;
        }
    }
}

TEST(FieldSample, FlatExamples)
{
    const auto s = make_backend("euclidean");
    const auto p = pt(0.3, 0.1);
    const auto a = sample_at(atom(s, "1", "x0"), s, p);
    EXPECT_EQ(a.comp[0], 1.0);
    EXPECT_EQ(a.comp[1], 0.0);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            EXPECT_EQ(a.dcomp[i][j], 0.0);
            for (int k = 0; k < 2; ++k) EXPECT_EQ(a.d2comp[i][j][k], 0.0);
        }
    const auto b = sample_at(atom(s, "x0", "x0"), s, p);
    EXPECT_DOUBLE_EQ(b.comp[0], 0.3);
    EXPECT_EQ(b.dcomp[0][0], 1.0);
    EXPECT_EQ(b.dcomp[0][1], 0.0);
}

TEST(FieldSample, TorusMatchesClosedFormComponents)
{
    const auto s = make_backend("torus");
    const auto X = atom(s, "sin(x0)", "sin(x1)");
    const Expr c1 = s.parse("sin(x0)*cos(x1)");
    std::mt19937_64 rng(9);
    for (int t = 0; t < 20; ++t) {
        const auto p = random_point(s, rng);
        const auto v = sample_at(X, s, p);
        const Jet j = c1.eval_jet(p, 2);
        EXPECT_EQ(v.comp[0], 0.0);
        EXPECT_NEAR(v.comp[1], j.v, 1e-12);
        for (int a = 0; a < 2; ++a) {
            EXPECT_NEAR(v.dcomp[1][a], j.d1[a], 1e-12);
            for (int b = 0; b < 2; ++b) {
                EXPECT_NEAR(v.d2comp[1][a][b], j.d2[a][b], 1e-12);
                EXPECT_EQ(v.d2comp[1][a][b], v.d2comp[1][b][a]);
            }
        }
    }
}

TEST(FieldSample, SphereDerivativesMatchFiniteDifferences)
{
    const auto s = make_backend("sphere");
    const auto X = TestVector({{TestFunction(s, "sin(theta)^2*cos(phi)"), TestFunction(s, "sin(theta)*sin(phi)")},
                               {TestFunction(s, "sin(theta)^2"), TestFunction(s, "cos(theta)^2")}});
    const auto p = pt(1.1, 0.4);
    const auto v = sample_at(X, s, p);
    const double h = 1e-5;
    for (int a = 0; a < 2; ++a) {
        auto pp = p, pm = p;
        pp[a] += h;
        pm[a] -= h;
        const auto vp = sample_at(X, s, pp), vm = sample_at(X, s, pm);
        for (int i = 0; i < 2; ++i) {
            EXPECT_NEAR((vp.comp[i] - vm.comp[i]) / (2 * h), v.dcomp[i][a], 1e-8);
            for (int b = 0; b < 2; ++b)
                EXPECT_NEAR((vp.dcomp[i][b] - vm.dcomp[i][b]) / (2 * h), v.d2comp[i][b][a], 1e-8);
        }
    }
}

TEST(CovDeriv, Examples)
{
    const auto flat = make_backend("torus");
    const auto p = pt(0.4, 1.3);
    const auto m = metric_at(flat, p);
    VectorSample x, y;
    x.comp = {1, 0, 0};
    y.comp = {0, 1, 0};
    const Vec z = cov_deriv_pointwise(x, y, m);
    EXPECT_EQ(z[0], 0.0);
    EXPECT_EQ(z[1], 0.0);

    const auto X = sample_at(atom(flat, "1", "sin(x0)"), flat, p);
    const auto Y = sample_at(atom(flat, "1", "sin(x1)"), flat, p);
    const Vec xy = cov_deriv_pointwise(X, Y, m);
    EXPECT_EQ(xy[0], 0.0);
    EXPECT_EQ(xy[1], 0.0);

    const auto sphere = make_backend("sphere");
    const auto q = pt(kPi / 4, 0.9);
    VectorSample dphi;
    dphi.comp = {0, 1, 0};
    const Vec r = cov_deriv_pointwise(dphi, dphi, metric_at(sphere, q));
    EXPECT_NEAR(r[0], -0.5, 1e-15);
    EXPECT_NEAR(r[1], 0.0, 1e-15);
}

TEST(Divergence, Examples)
{
    const auto p = pt(0.7, 2.0);
    VectorSample x;
    x.comp = {std::cos(0.7), 0, 0};
    x.dcomp[0][0] = -std::sin(0.7);
    const auto flat = make_backend("torus");
    EXPECT_DOUBLE_EQ(divergence_m(x, metric_at(flat, p)), -std::sin(0.7));
    const auto weighted = make_backend("weighted-torus");
    EXPECT_NEAR(divergence_m(x, metric_at(weighted, p)), -std::sin(0.7) + std::cos(0.7) * std::cos(0.7),
                1e-15);
    VectorSample zero;
    EXPECT_EQ(divergence_m(zero, metric_at(make_backend("sphere"), pt(1.0, 1.0))), 0.0);
}

TEST(Divergence, DerivativeMatchesFiniteDifferences)
{
    std::mt19937_64 rng(21);
    for (const auto& name : {"sphere", "hyperbolic-disk", "gauss-weighted-plane", "weighted-torus"}) {
        const auto s = make_backend(name);
        const auto X = atom(s, "1+0.3*sin(x0)*x1", "cos(x0)*sin(x1)+x1^2");
        const auto div_at = [&](const std::vector<double>& q) {
            return divergence_m(sample_at(X, s, q), metric_at(s, q));
        };
        for (int t = 0; t < 10; ++t) {
            const auto p = random_point(s, rng);
            const Vec dd = d_divergence_m(sample_at(X, s, p), metric_at(s, p));
            for (int a = 0; a < 2; ++a) {
                const double fd = oracle::central_diff(div_at, p, a, 1e-5);
                EXPECT_NEAR(fd, dd[a], 1e-6 * std::max(1.0, std::abs(dd[a]))) << name;
            }
        }
    }
}

TEST(Divergence, WeightedDivergenceIsTheCoordinateFormula)
{
    // div_m X = (1/rho) d_i (rho X^i) with rho = w sqrt(det g), from finite differences.
    const auto s = make_backend("hyperbolic-disk");
    const auto X = atom(s, "1+x0", "x0*x1+x1^3");
    const auto p = pt(0.2, -0.35);
    const auto flux = [&](int i) {
        return [&, i](const std::vector<double>& q) {
            const auto m = metric_at(s, q);
            return m.density() * sample_at(X, s, q).comp[i];
        };
    };
    const double rho = metric_at(s, p).density();
    const double fd = (oracle::central_diff(flux(0), p, 0, 1e-5) + oracle::central_diff(flux(1), p, 1, 1e-5)) / rho;
    EXPECT_NEAR(divergence_m(sample_at(X, s, p), metric_at(s, p)), fd, 1e-7);
}

TEST(Bracket, Examples)
{
    const auto s = make_backend("torus");
    const auto p = pt(0.4, 1.3);
    const auto m = metric_at(s, p);
    VectorSample e0, e1;
    e0.comp = {1, 0, 0};
    e1.comp = {0, 1, 0};
    const auto b = lie_bracket_pointwise(e0, e1, m);
    EXPECT_EQ(b.comp[0], 0.0);
    EXPECT_EQ(b.comp[1], 0.0);

    // X = sin x1 grad sin x0 = (sin x1 cos x0, 0), Y = sin x0 grad sin x1 = (0, sin x0 cos x1)
    // [X,Y] = (-sin x0 cos x1 cos x1 cos x0, sin x1 cos x0 cos x0 cos x1)
    const auto X = sample_at(atom(s, "sin(x1)", "sin(x0)"), s, p);
    const auto Y = sample_at(atom(s, "sin(x0)", "sin(x1)"), s, p);
    const auto br = lie_bracket_pointwise(X, Y, m);
    const Expr c0 = s.parse("-sin(x0)*cos(x1)^2*cos(x0)");
    const Expr c1 = s.parse("sin(x1)*cos(x0)^2*cos(x1)");
    const Jet j0 = c0.eval_jet(p, 1), j1 = c1.eval_jet(p, 1);
    EXPECT_NEAR(br.comp[0], j0.v, 1e-12);
    EXPECT_NEAR(br.comp[1], j1.v, 1e-12);
    for (int a = 0; a < 2; ++a) {
        EXPECT_NEAR(br.dcomp[0][a], j0.d1[a], 1e-12);
        EXPECT_NEAR(br.dcomp[1][a], j1.d1[a], 1e-12);
    }

    const auto xx = lie_bracket_pointwise(X, X, m);
    for (int i = 0; i < 2; ++i) {
        EXPECT_EQ(xx.comp[i], 0.0);
        for (int a = 0; a < 2; ++a) EXPECT_NEAR(xx.dcomp[i][a], 0.0, 1e-15);
    }
}

TEST(Bracket, IsTorsionFreeDifferenceOfCovariantDerivatives)
{
    const auto s = make_backend("sphere");
    const auto X = atom(s, "sin(theta)^2", "sin(theta)*cos(phi)");
    const auto Y = atom(s, "sin(theta)^2*cos(theta)", "sin(theta)*sin(phi)");
    const auto p = pt(0.9, 2.2);
    const auto m = metric_at(s, p);
    const auto x = sample_at(X, s, p), y = sample_at(Y, s, p);
    const auto b = lie_bracket_pointwise(x, y, m);
    const Vec a = cov_deriv_pointwise(x, y, m), c = cov_deriv_pointwise(y, x, m);
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(b.comp[i], a[i] - c[i], 1e-13);
}

TEST(Wedge, Examples)
{
    const auto flat = make_backend("torus");
    const auto m = metric_at(flat, pt(1.0, 1.0));
    EXPECT_EQ(wedge_norm_sq({1, 0, 0}, {0, 1, 0}, m), 1.0);
    EXPECT_EQ(wedge_norm_sq({0.3, 0.7, 0}, {0.9, 2.1, 0}, m), 0.0);
    const auto sphere = make_backend("sphere");
    EXPECT_NEAR(wedge_norm_sq({1, 0, 0}, {0, 1, 0}, metric_at(sphere, pt(kPi / 3, 0.0))), 0.75, 1e-15);
}

TEST(Riemann, FlatIsZeroWithAnyWeight)
{
    for (const auto& name : {"torus", "weighted-torus", "gauss-weighted-plane", "euclidean"}) {
        const auto R = riemann_oracle(make_backend(name), pt(0.3, 0.5));
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c)
                    for (int d = 0; d < 2; ++d) EXPECT_EQ(R[a][b][c][d], 0.0) << name;
    }
}

TEST(Riemann, SphereComponent)
{
    const auto s = make_backend("sphere");
    for (double th : {0.4, 1.2, 2.6}) {
        const auto R = riemann_oracle(s, pt(th, 0.1));
        const double s2 = std::sin(th) * std::sin(th);
        EXPECT_NEAR(R[0][1][0][1], s2, 1e-13);
        EXPECT_NEAR(R[1][0][1][0], s2, 1e-13);
        EXPECT_NEAR(R[0][1][1][0], -s2, 1e-13);
        // R(X,Y,Y,X) = |X ^ Y|^2 for curvature +1.
        const auto m = metric_at(s, pt(th, 0.1));
        const Vec X{0.4, -1.1, 0}, Y{1.3, 0.2, 0};
        EXPECT_NEAR(riemann_contract(R, X, Y, Y, X, 2), wedge_norm_sq(X, Y, m), 1e-13);
    }
}

TEST(Riemann, DiskHasCurvatureMinusOne)
{
    const auto s = make_backend("hyperbolic-disk");
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int t = 0; t < 50; ++t) {
        const auto p = random_point(s, rng);
        const auto m = metric_at(s, p);
        const auto R = riemann_oracle(m);
        const Vec X{u(rng), u(rng), 0}, Y{u(rng), u(rng), 0};
        const double w = m.inner(X, X) * m.inner(Y, Y) - m.inner(X, Y) * m.inner(X, Y);
        EXPECT_NEAR(riemann_contract(R, X, Y, Y, X, 2), -w, 1e-10 * std::max(1.0, w));
    }
}

TEST(Riemann, ArraySymmetriesAndBianchi)
{
    std::mt19937_64 rng(23);
    for (const auto& name : {"sphere", "hyperbolic-disk"}) {
        const auto s = make_backend(name);
        for (int t = 0; t < 20; ++t) {
            const auto R = riemann_oracle(s, random_point(s, rng));
            double norm = 0.0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    for (int c = 0; c < 2; ++c)
                        for (int d = 0; d < 2; ++d) norm = std::max(norm, std::abs(R[a][b][c][d]));
            const double tol = 1e-12 * std::max(1.0, norm);
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    for (int c = 0; c < 2; ++c)
                        for (int d = 0; d < 2; ++d) {
                            EXPECT_NEAR(R[a][b][c][d], -R[b][a][c][d], tol);
                            EXPECT_NEAR(R[a][b][c][d], -R[a][b][d][c], tol);
                            EXPECT_NEAR(R[a][b][c][d], R[c][d][a][b], tol);
                            EXPECT_NEAR(R[a][b][c][d] + R[a][c][d][b] + R[a][d][b][c], 0.0, tol);
                        }
        }
    }
}

TEST(IntegrationByParts, GradientIsMinusDivergenceAdjoint)
{
    struct Case {
        const char* backend;
        const char* f;
        const char* X_f;
        const char* X_g;
        int n;
        double tol;
    };
    const std::vector<Case> cases{
        {"torus", "sin(x0)*cos(2*x1)+0.3", "cos(x1)+2", "sin(x0+x1)", 32, 1e-12},
        {"weighted-torus", "cos(x0)*sin(x1)", "1+0.5*sin(x1)", "cos(x0)*cos(x1)", 32, 1e-12},
        {"sphere", "cos(theta)+sin(theta)*cos(phi)", "sin(theta)^2", "sin(theta)*sin(phi)*cos(theta)", 48, 1e-10},
        {"gauss-weighted-plane", "x0*x1+1", "bump((x0*x0+x1*x1)/25)", "x0^2+x1", 96, 1e-8},
        {"hyperbolic-disk", "x0+x1^2", "bump((x0*x0+x1*x1)/0.36)", "x0*x1", 96, 1e-6},
    };
    for (const auto& c : cases) {
        const auto s = make_backend(c.backend);
        const auto grid = build_grid(s, {c.n, c.n});
        const Expr f = s.parse(c.f);
        const auto X = sample(atom(s, c.X_f, c.X_g), grid);
        double maj = 0.0;
        const double v = integrate(*grid, [&](std::size_t n) {
            const auto& m = grid->metric(n);
            const Jet fj = f.eval_jet(grid->point(n), 1);
            const double a = m.inner(grad_vec(fj, m), X->at[n].comp);
            const double b = fj.v * divergence_m(X->at[n], m);
            maj += std::abs(grid->weight(n)) * (std::abs(a) + std::abs(b));
            return a + b;
        });
        EXPECT_LE(std::abs(v), c.tol * (1 + maj)) << c.backend << " residual " << v;
    }
}
