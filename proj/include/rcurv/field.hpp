#pragma once

// Test functions and test vector fields X = sum_i f_i grad g_i, and their
// samples on a quadrature grid.

#include "rcurv/error.hpp"
#include "rcurv/expr.hpp"
#include "rcurv/geom.hpp"
#include "rcurv/quadrature.hpp"
#include "rcurv/space.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace rcurv {

inline constexpr double kAdmissibilityTol = 1e-8;

class TestFunction {
public:
    TestFunction() = default;
    explicit TestFunction(Expr e) : expr_(std::move(e)) {}
    TestFunction(const ChartSpace& space, std::string_view text) : expr_(space.parse(text)) {}

    static TestFunction one(int dim) { return TestFunction(Expr::constant(1.0, dim)); }

    const Expr& expr() const noexcept { return expr_; }
    std::string to_string() const { return expr_.to_string(); }

    friend TestFunction operator*(const TestFunction& a, const TestFunction& b)
    {
        return TestFunction(a.expr_ * b.expr_);
    }

private:
    Expr expr_;
};

struct Atom {
    TestFunction f; ///< multiplier
    TestFunction g; ///< potential
};

/// Finite sum of atoms f_i grad g_i.
class TestVector {
public:
    static constexpr std::size_t kDefaultMaxAtoms = 8;

    TestVector() = default;
    explicit TestVector(std::vector<Atom> atoms, std::size_t max_atoms = kDefaultMaxAtoms)
        : atoms_(std::move(atoms))
    {
        if (atoms_.empty()) throw Error("a test vector needs at least one atom");
        if (atoms_.size() > max_atoms)
            throw Error("test vector has " + std::to_string(atoms_.size())
                        + " atoms, limit is " + std::to_string(max_atoms));
    }

    /// f grad g as a single-atom field.
    static TestVector gradient_atom(TestFunction f, TestFunction g)
    {
        return TestVector({Atom{std::move(f), std::move(g)}});
    }

    const std::vector<Atom>& atoms() const noexcept { return atoms_; }
    int dim() const { return atoms_.front().f.expr().dim(); }

    /// Module action over test functions: f X = sum (f f_i) grad g_i.
    TestVector scaled(const TestFunction& f) const
    {
        std::vector<Atom> out;
        out.reserve(atoms_.size());
        for (const auto& a : atoms_) out.push_back({f * a.f, a.g});
        return TestVector(std::move(out), atoms_.size());
    }

    std::string to_string() const
    {
        std::string s;
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            if (i) s += " + ";
            s += atoms_[i].f.to_string() + " grad " + atoms_[i].g.to_string();
        }
        return s;
    }

private:
    std::vector<Atom> atoms_;
};

/// Throws AdmissibilityError unless `f` passes periodicity_check on `space`.
inline void check_admissible(const TestFunction& f, const ChartSpace& space)
{
    if (!periodicity_check(f.expr(), space, kAdmissibilityTol))
        throw AdmissibilityError("test function '" + f.to_string()
                                 + "' is not periodic / compactly supported on '" + space.name
                                 + "'");
}

/// Atoms f grad g: f must pass the full boundary check; g only has to be
/// periodic, since f already kills the field at the remaining faces.
inline void check_admissible(const TestVector& X, const ChartSpace& space)
{
    for (const auto& a : X.atoms()) {
        check_admissible(a.f, space);
        if (!periodic_match(a.g.expr(), space, kAdmissibilityTol))
            throw AdmissibilityError("potential '" + a.g.to_string() + "' is not periodic on '"
                                     + space.name + "'");
    }
}

/// Vector field sampled at every node of a grid.
struct SampledField {
    GridPtr grid;
    std::vector<VectorSample> at;
};

using FieldPtr = std::shared_ptr<const SampledField>;

/// Scalar jets at every node of a grid.
struct SampledScalar {
    GridPtr grid;
    std::vector<Jet> at;
};

using ScalarPtr = std::shared_ptr<const SampledScalar>;

/// Sample of X at a single point.
inline VectorSample field_sample(const TestVector& X, std::span<const double> p,
                                 const MetricAtPoint& m)
{
    std::vector<AtomJets> jets;
    jets.reserve(X.atoms().size());
    for (const auto& a : X.atoms()) jets.push_back({a.f.expr().eval_jet(p, 2), a.g.expr().eval_jet(p, 3)});
    return field_sample(jets, m);
}

inline FieldPtr sample(const TestVector& X, const GridPtr& grid)
{
    check_admissible(X, grid->space());
    auto out = std::make_shared<SampledField>();
    out->grid = grid;
    out->at.reserve(grid->size());
    std::vector<AtomJets> jets(X.atoms().size());
    for (std::size_t n = 0; n < grid->size(); ++n) {
        const auto p = grid->point(n);
        for (std::size_t a = 0; a < X.atoms().size(); ++a) {
            jets[a].f = X.atoms()[a].f.expr().eval_jet(p, 2);
            jets[a].g = X.atoms()[a].g.expr().eval_jet(p, 3);
        }
        out->at.push_back(field_sample(jets, grid->metric(n)));
    }
    return out;
}

/// Scalar probes only ever multiply admissible fields, so periodic matching
/// is all they need; use check_admissible for the full boundary check.
inline ScalarPtr sample(const TestFunction& f, const GridPtr& grid, int order = 2)
{
    if (!periodic_match(f.expr(), grid->space(), kAdmissibilityTol))
        throw AdmissibilityError("test function '" + f.to_string() + "' is not periodic on '"
                                 + grid->space().name + "'");
    auto out = std::make_shared<SampledScalar>();
    out->grid = grid;
    out->at.reserve(grid->size());
    for (std::size_t n = 0; n < grid->size(); ++n) out->at.push_back(f.expr().eval_jet(grid->point(n), order));
    return out;
}

/// Pointwise module action: the sample of f W from samples of f and W.
inline VectorSample scale_sample(const Jet& f, const VectorSample& W)
{
    VectorSample r;
    r.dim = W.dim;
    r.order = std::min(W.order, f.order);
    const int d = W.dim;
    for (int i = 0; i < d; ++i) {
        r.comp[i] = f.v * W.comp[i];
        if (r.order >= 1)
            for (int j = 0; j < d; ++j) r.dcomp[i][j] = f.d1[j] * W.comp[i] + f.v * W.dcomp[i][j];
        if (r.order >= 2)
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k)
                    r.d2comp[i][j][k] = f.d2[j][k] * W.comp[i] + f.d1[j] * W.dcomp[i][k]
                                        + f.d1[k] * W.dcomp[i][j] + f.v * W.d2comp[i][j][k];
    }
    return r;
}

/// [X, Y] on the grid, with one derivative.
inline FieldPtr bracket_field(const SampledField& X, const SampledField& Y)
{
    auto out = std::make_shared<SampledField>();
    out->grid = X.grid;
    out->at.reserve(X.at.size());
    for (std::size_t n = 0; n < X.at.size(); ++n)
        out->at.push_back(lie_bracket_pointwise(X.at[n], Y.at[n], X.grid->metric(n)));
    return out;
}

/// nabla_X Y on the grid, values only.
inline FieldPtr cov_deriv_field(const SampledField& X, const SampledField& Y)
{
    auto out = std::make_shared<SampledField>();
    out->grid = X.grid;
    out->at.reserve(X.at.size());
    for (std::size_t n = 0; n < X.at.size(); ++n) {
        VectorSample s;
        s.dim = X.grid->dim();
        s.order = 0;
        s.comp = cov_deriv_pointwise(X.at[n], Y.at[n], X.grid->metric(n));
        out->at.push_back(s);
    }
    return out;
}

} // namespace rcurv
