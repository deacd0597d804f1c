#pragma once

// Tensor-product quadrature over the measure m of a chart space: periodic
// trapezoid on periodic axes, Gauss-Legendre on bounded axes. Sums use a
// fixed pairwise tree, so results do not depend on how the per-node values
// were produced.

#include "rcurv/error.hpp"
#include "rcurv/geom.hpp"
#include "rcurv/space.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace rcurv {

/// Pairwise (tree) summation: halves recursively, sums blocks of <= 8 in order.
inline double pairwise_sum(std::span<const double> x)
{
    if (x.size() <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

enum class AxisRule { Auto, Equispaced, GaussLegendre };

inline std::string to_string(AxisRule r)
{
    switch (r) {
    case AxisRule::Equispaced: return "equispaced";
    case AxisRule::GaussLegendre: return "gauss-legendre";
    default: return "auto";
    }
}

struct Nodes1D {
    std::vector<double> x;
    std::vector<double> w;
};

/// n-point Gauss-Legendre rule on [a, b] (Newton on P_n from Chebyshev guesses).
inline Nodes1D gauss_legendre(int n, double a, double b)
{
    Nodes1D r;
    r.x.resize(n);
    r.w.resize(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // Recompute the derivative at the converged root for the weight.
        double p0 = 1.0, p1 = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        const double wt = 2.0 / ((1.0 - z * z) * dp * dp);
        r.x[i] = mid - half * z;
        r.x[n - 1 - i] = mid + half * z;
        r.w[i] = r.w[n - 1 - i] = half * wt;
    }
    return r;
}

/// n-point periodic trapezoid on [a, b).
inline Nodes1D equispaced(int n, double a, double b)
{
    Nodes1D r;
    const double h = (b - a) / n;
    for (int i = 0; i < n; ++i) {
        r.x.push_back(a + i * h);
        r.w.push_back(h);
    }
    return r;
}

/// Immutable tensor-product grid with the metric data cached at every node.
class QuadratureGrid {
public:
    QuadratureGrid(const ChartSpace& space, std::vector<int> resolution,
                   std::vector<AxisRule> rules = {})
        : space_(space), resolution_(std::move(resolution))
    {
        static std::atomic<std::uint64_t> next_id{1};
        id_ = next_id++;
        const int d = space_.dim;
        if (static_cast<int>(resolution_.size()) != d)
            throw GeometryError("grid resolution has " + std::to_string(resolution_.size())
                                + " entries for a " + std::to_string(d) + "-dimensional space");
        rules.resize(d, AxisRule::Auto);
        std::vector<Nodes1D> axes;
        for (int i = 0; i < d; ++i) {
            if (resolution_[i] < 8)
                throw GeometryError("grid.resolution[" + std::to_string(i) + "] < 8");
            AxisRule r = rules[i];
            if (r == AxisRule::Auto)
                r = space_.periodic[i] ? AxisRule::Equispaced : AxisRule::GaussLegendre;
            if (r == AxisRule::Equispaced && !space_.periodic[i])
                throw GeometryError("equispaced rule requires a periodic axis (axis "
                                    + std::to_string(i) + ")");
            rules_.push_back(r);
            axes.push_back(r == AxisRule::Equispaced
                               ? equispaced(resolution_[i], space_.lo[i], space_.hi[i])
                               : gauss_legendre(resolution_[i], space_.lo[i], space_.hi[i]));
        }

        std::size_t total = 1;
        for (int n : resolution_) total *= static_cast<std::size_t>(n);
        points_.reserve(total);
        coord_weights_.reserve(total);
        std::vector<int> idx(d, 0);
        for (std::size_t n = 0; n < total; ++n) {
            Vec p{};
            double w = 1.0;
            for (int i = 0; i < d; ++i) {
                p[i] = axes[i].x[idx[i]];
                w *= axes[i].w[idx[i]];
            }
            points_.push_back(p);
            coord_weights_.push_back(w);
            for (int i = d - 1; i >= 0; --i) {
                if (++idx[i] < resolution_[i]) break;
                idx[i] = 0;
            }
        }

        metric_.reserve(total);
        weights_.reserve(total);
        for (std::size_t n = 0; n < total; ++n) {
            metric_.push_back(metric_at(space_, point(n)));
            weights_.push_back(coord_weights_[n] * metric_.back().density());
        }
    }

    const ChartSpace& space() const noexcept { return space_; }
    int dim() const noexcept { return space_.dim; }
    std::size_t size() const noexcept { return points_.size(); }
    const std::vector<int>& resolution() const noexcept { return resolution_; }
    const std::vector<AxisRule>& rules() const noexcept { return rules_; }
    std::uint64_t id() const noexcept { return id_; }

    std::span<const double> point(std::size_t n) const
    {
        return std::span<const double>(points_[n].data(), space_.dim);
    }
    const MetricAtPoint& metric(std::size_t n) const { return metric_[n]; }
    /// Quadrature weight times w sqrt(det g).
    double weight(std::size_t n) const { return weights_[n]; }

    bool all_periodic_rules() const
    {
        for (auto r : rules_)
            if (r != AxisRule::Equispaced) return false;
        return true;
    }

    std::string resolution_string() const
    {
        std::string s;
        for (std::size_t i = 0; i < resolution_.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(resolution_[i]);
        }
        return s;
    }

private:
    ChartSpace space_;
    std::vector<int> resolution_;
    std::vector<AxisRule> rules_;
    std::vector<Vec> points_;
    std::vector<double> coord_weights_;
    std::vector<MetricAtPoint> metric_;
    std::vector<double> weights_;
    std::uint64_t id_ = 0;
};

using GridPtr = std::shared_ptr<const QuadratureGrid>;

inline GridPtr build_grid(const ChartSpace& space, std::vector<int> resolution,
                          std::vector<AxisRule> rules = {})
{
    return std::make_shared<const QuadratureGrid>(space, std::move(resolution), std::move(rules));
}

/// Integrand value at a node together with the sum of the absolute values of
/// its constituent terms (an L1 majorant used to normalise residuals).
struct Term {
    double value = 0.0;
    double majorant = 0.0;
};

struct Integral {
    double value = 0.0;
    double majorant = 0.0;
};

/// Sum over nodes of weight * integrand(node); throws on a non-finite value.
template <class F>
double integrate(const QuadratureGrid& grid, F&& integrand)
{
    std::vector<double> vals(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const double v = integrand(n);
        if (!std::isfinite(v))
            throw DomainError("non-finite integrand at node " + std::to_string(n));
        vals[n] = grid.weight(n) * v;
    }
    return pairwise_sum(vals);
}

/// Like integrate, for integrands returning a Term.
template <class F>
Integral integrate_terms(const QuadratureGrid& grid, F&& integrand)
{
    std::vector<double> vals(grid.size()), maj(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const Term t = integrand(n);
        if (!std::isfinite(t.value) || !std::isfinite(t.majorant))
            throw DomainError("non-finite integrand at node " + std::to_string(n));
        vals[n] = grid.weight(n) * t.value;
        maj[n] = std::abs(grid.weight(n)) * t.majorant;
    }
    return {pairwise_sum(vals), pairwise_sum(maj)};
}

} // namespace rcurv
