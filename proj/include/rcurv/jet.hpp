#pragma once

// Third-order jets: a value together with all coordinate partials up to
// order three, carried through forward-mode arithmetic.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace rcurv {

inline constexpr int kMaxDim = 3;

using Vec = std::array<double, kMaxDim>;
using Mat = std::array<Vec, kMaxDim>;
using Ten3 = std::array<Mat, kMaxDim>;

/// Value and partial derivatives up to `order` (0..3) in `dim` coordinates.
/// Derivative arrays are stored in full and kept symmetric; entries above
/// `order` are zero and carry no meaning.
struct Jet {
    int dim = 1;
    int order = 3;
    double v = 0.0;
    Vec d1{};
    Mat d2{};
    Ten3 d3{};

    Jet() = default;
    Jet(int dim_, int order_, double value = 0.0) : dim(dim_), order(order_), v(value) {}

    static Jet constant(int dim, int order, double c) { return Jet(dim, order, c); }

    static Jet variable(int dim, int order, int index, double value)
    {
        Jet j(dim, order, value);
        if (order >= 1) j.d1[index] = 1.0;
        return j;
    }

    /// Drops everything above `new_order`.
    Jet truncated(int new_order) const
    {
        Jet r = *this;
        if (new_order >= order) return r;
        r.order = new_order;
        if (new_order < 3) r.d3 = {};
        if (new_order < 2) r.d2 = {};
        if (new_order < 1) r.d1 = {};
        return r;
    }

    bool finite() const
    {
        if (!std::isfinite(v)) return false;
        for (int i = 0; i < dim; ++i) {
            if (order >= 1 && !std::isfinite(d1[i])) return false;
            for (int j = 0; j < dim; ++j) {
                if (order >= 2 && !std::isfinite(d2[i][j])) return false;
                for (int k = 0; k < dim; ++k)
                    if (order >= 3 && !std::isfinite(d3[i][j][k])) return false;
            }
        }
        return true;
    }

    /// Largest absolute entry over all stored orders.
    double max_abs() const
    {
        double m = std::abs(v);
        for (int i = 0; i < dim; ++i) {
            if (order >= 1) m = std::max(m, std::abs(d1[i]));
            for (int j = 0; j < dim; ++j) {
                if (order >= 2) m = std::max(m, std::abs(d2[i][j]));
                for (int k = 0; k < dim; ++k)
                    if (order >= 3) m = std::max(m, std::abs(d3[i][j][k]));
            }
        }
        return m;
    }
};

namespace detail {

inline void fill_sym2(Mat& m, int dim)
{
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < i; ++j) m[i][j] = m[j][i];
}

inline void fill_sym3(Ten3& t, int dim)
{
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j)
            for (int k = j; k < dim; ++k) {
                const double x = t[i][j][k];
                t[i][k][j] = x;
                t[j][i][k] = x;
                t[j][k][i] = x;
                t[k][i][j] = x;
                t[k][j][i] = x;
            }
}

} // namespace detail

inline Jet operator+(const Jet& a, const Jet& b)
{
    Jet r(a.dim, std::min(a.order, b.order), a.v + b.v);
    const int d = r.dim;
    if (r.order >= 1)
        for (int i = 0; i < d; ++i) r.d1[i] = a.d1[i] + b.d1[i];
    if (r.order >= 2)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) r.d2[i][j] = a.d2[i][j] + b.d2[i][j];
    if (r.order >= 3)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k) r.d3[i][j][k] = a.d3[i][j][k] + b.d3[i][j][k];
    return r;
}

inline Jet operator*(double c, const Jet& a)
{
    Jet r = a;
    r.v *= c;
    const int d = a.dim;
    for (int i = 0; i < d; ++i) {
        r.d1[i] *= c;
        for (int j = 0; j < d; ++j) {
            r.d2[i][j] *= c;
            for (int k = 0; k < d; ++k) r.d3[i][j][k] *= c;
        }
    }
    return r;
}

inline Jet operator*(const Jet& a, double c) { return c * a; }
inline Jet operator-(const Jet& a) { return -1.0 * a; }
inline Jet operator-(const Jet& a, const Jet& b) { return a + (-b); }

inline Jet operator+(const Jet& a, double c)
{
    Jet r = a;
    r.v += c;
    return r;
}

inline Jet operator*(const Jet& a, const Jet& b)
{
    Jet r(a.dim, std::min(a.order, b.order), a.v * b.v);
    const int d = r.dim;
    if (r.order >= 1)
        for (int i = 0; i < d; ++i) r.d1[i] = a.d1[i] * b.v + a.v * b.d1[i];
    if (r.order >= 2) {
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j)
                r.d2[i][j] = a.d2[i][j] * b.v + a.d1[i] * b.d1[j] + a.d1[j] * b.d1[i]
                             + a.v * b.d2[i][j];
        detail::fill_sym2(r.d2, d);
    }
    if (r.order >= 3) {
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j)
                for (int k = j; k < d; ++k)
                    r.d3[i][j][k] = a.d3[i][j][k] * b.v
                                    + a.d2[i][j] * b.d1[k] + a.d2[i][k] * b.d1[j]
                                    + a.d2[j][k] * b.d1[i]
                                    + a.d1[i] * b.d2[j][k] + a.d1[j] * b.d2[i][k]
                                    + a.d1[k] * b.d2[i][j]
                                    + a.v * b.d3[i][j][k];
        detail::fill_sym3(r.d3, d);
    }
    return r;
}

/// Composes a scalar function with `u`, given phi^(n)(u.v) for n = 0..3.
inline Jet compose(const Jet& u, double f0, double f1, double f2, double f3)
{
    Jet r(u.dim, u.order, f0);
    const int d = u.dim;
    if (r.order >= 1)
        for (int i = 0; i < d; ++i) r.d1[i] = f1 * u.d1[i];
    if (r.order >= 2) {
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j)
                r.d2[i][j] = f2 * u.d1[i] * u.d1[j] + f1 * u.d2[i][j];
        detail::fill_sym2(r.d2, d);
    }
    if (r.order >= 3) {
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j)
                for (int k = j; k < d; ++k)
                    r.d3[i][j][k] = f3 * u.d1[i] * u.d1[j] * u.d1[k]
                                    + f2 * (u.d2[i][j] * u.d1[k] + u.d2[i][k] * u.d1[j]
                                            + u.d2[j][k] * u.d1[i])
                                    + f1 * u.d3[i][j][k];
        detail::fill_sym3(r.d3, d);
    }
    return r;
}

/// Partial derivative along `axis`; the result is one order lower.
inline Jet partial(const Jet& a, int axis)
{
    Jet r(a.dim, a.order - 1, 0.0);
    if (a.order < 1) {
        r.order = 0;
        return r;
    }
    const int d = a.dim;
    r.v = a.d1[axis];
    if (r.order >= 1)
        for (int i = 0; i < d; ++i) r.d1[i] = a.d2[axis][i];
    if (r.order >= 2)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) r.d2[i][j] = a.d3[axis][i][j];
    return r;
}

} // namespace rcurv
