#pragma once

// Randomised identity battery: field generation, the identity checks,
// classical-oracle comparison, refinement studies and the sectional-bound
// probe. Every check draws its fields from a generator seeded only by
// (seed, check id, draw), so results do not depend on scheduling.

#include "rcurv/distr.hpp"
#include "rcurv/error.hpp"
#include "rcurv/field.hpp"
#include "rcurv/report.hpp"
#include "rcurv/space.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace rcurv {

inline const std::vector<std::string>& identity_check_ids()
{
    static const std::vector<std::string> ids{"conscov", "divle", "lief",    "jacobi",    "r1a",
                                              "zw",      "r1b",   "bianchi", "tensorial", "module"};
    return ids;
}

inline const std::vector<std::string>& all_check_ids()
{
    static const std::vector<std::string> ids = [] {
        auto v = identity_check_ids();
        v.insert(v.end(), {"oracle", "convergence", "conjecture"});
        return v;
    }();
    return ids;
}

inline bool is_identity_check(const std::string& id)
{
    const auto& v = identity_check_ids();
    return std::find(v.begin(), v.end(), id) != v.end();
}

inline bool is_known_check(const std::string& id)
{
    const auto& v = all_check_ids();
    return std::find(v.begin(), v.end(), id) != v.end();
}

struct FieldBudget {
    int atoms = 2;      ///< atoms per test vector, 1..4
    int degree = 2;     ///< trig frequency / polynomial degree, 1..3
    double range = 2.0; ///< coefficients drawn from [-range, range]
    std::uint64_t seed = 1;
    int draws = 20;

    void validate() const
    {
        if (atoms < 1 || atoms > 4) throw Error("budget.atoms must be in 1..4");
        if (degree < 1 || degree > 3) throw Error("budget.degree must be in 1..3");
        if (!(range > 0.0)) throw Error("budget.range must be positive");
        if (draws < 1) throw Error("budget.draws must be at least 1");
    }
};

/// Default tolerance for a grid: spectral rules reach rounding level, bounded
/// rules on bump fields are held to 1e-6.
inline double default_tolerance(const QuadratureGrid& grid)
{
    return grid.all_periodic_rules() ? 1e-9 : 1e-6;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string("(") + buf + ")";
}

} // namespace detail

inline std::uint64_t draw_seed(std::uint64_t seed, const std::string& id, int draw)
{
    return detail::splitmix64(detail::splitmix64(seed ^ detail::fnv1a(id)) + static_cast<std::uint64_t>(draw));
}

/// Deterministic generator of admissible random test objects on a backend.
/// Coefficients are rounded to three decimals so that the expression text is
/// an exact record of the field.
class FieldGenerator {
public:
    FieldGenerator(const ChartSpace& space, const FieldBudget& budget, std::uint64_t seed)
        : space_(space), budget_(budget), rng_(seed)
    {
        budget_.validate();
        switch (space_.family) {
        case FieldFamily::Trig:
            if (!space_.all_periodic())
                throw Error("trigonometric fields need an all-periodic space ('" + space_.name + "')");
            break;
        case FieldFamily::Bump:
            if (space_.any_periodic() || !(space_.bump_radius > 0.0))
                throw Error("bump fields need a bounded space with a support radius ('" + space_.name
                            + "')");
            break;
        case FieldFamily::Ambient:
            if (space_.dim != 2 || space_.coord_names.count("theta") == 0)
                throw Error("ambient fields need the sphere chart");
            break;
        }
    }

    /// Compactly supported (or periodic) multiplier for an atom.
    TestFunction multiplier() { return make(multiplier_text()); }
    /// Potential g of an atom f grad g.
    TestFunction potential() { return make(potential_text()); }
    /// Scalar probe, not necessarily compactly supported.
    TestFunction probe() { return make(probe_text()); }
    /// Strictly positive scalar probe.
    TestFunction positive_probe()
    {
        const std::string base = space_.family == FieldFamily::Trig ? trig_text() : poly_text(true);
        return make("((" + base + ")^2+0.1)");
    }

    TestVector vector()
    {
        std::vector<Atom> atoms;
        for (int i = 0; i < budget_.atoms; ++i) {
            TestFunction f = multiplier();
            TestFunction g = potential();
            atoms.push_back({std::move(f), std::move(g)});
        }
        return TestVector(std::move(atoms));
    }

private:
    double uniform(double a, double b)
    {
        const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        return a + (b - a) * u;
    }
    int integer(int a, int b) { return a + static_cast<int>(rng_() % static_cast<std::uint64_t>(b - a + 1)); }
    double coef() { return uniform(-budget_.range, budget_.range); }

    TestFunction make(const std::string& text) const { return TestFunction(space_, text); }

    std::string var(int i) const
    {
        if (space_.family == FieldFamily::Ambient) {
            static const char* amb[3] = {"(sin(theta)*cos(phi))", "(sin(theta)*sin(phi))", "cos(theta)"};
            return amb[i];
        }
        // Scaled coordinate (x_i - c_i) / radius.
        return "((x" + std::to_string(i) + "-" + detail::num(space_.bump_center[i]) + ")/"
               + detail::num(space_.bump_radius) + ")";
    }

    int nvars() const { return space_.family == FieldFamily::Ambient ? 3 : space_.dim; }

    // Random polynomial of total degree <= budget.degree in the family's
    // variables; `constant` keeps the degree-0 term.
    std::string poly_text(bool constant)
    {
        const int n = nvars(), deg = budget_.degree;
        std::string s;
        std::array<int, 3> e{};
        const auto emit = [&] {
            int total = 0;
            for (int i = 0; i < n; ++i) total += e[i];
            if (total == 0 && !constant) return;
            if (!s.empty()) s += "+";
            s += detail::num(coef());
            for (int i = 0; i < n; ++i)
                if (e[i] > 0) s += "*" + var(i) + (e[i] > 1 ? "^" + std::to_string(e[i]) : "");
        };
        for (e[0] = 0; e[0] <= deg; ++e[0])
            for (e[1] = 0; e[1] <= deg - e[0]; ++e[1]) {
                if (n == 3)
                    for (e[2] = 0; e[2] <= deg - e[0] - e[1]; ++e[2]) emit();
                else
                    emit();
            }
        return s;
    }

    // Sum of two c*sin(k.x + phase) terms with integer wave vectors.
    std::string trig_text()
    {
        std::string s;
        for (int t = 0; t < 2; ++t) {
            std::string arg;
            for (int i = 0; i < space_.dim; ++i) {
                const int k = integer(-budget_.degree, budget_.degree);
                if (k != 0) arg += "+" + std::to_string(k) + "*x" + std::to_string(i);
            }
            const double c = coef();
            const double phase = uniform(0.0, 2 * std::numbers::pi);
            if (!s.empty()) s += "+";
            s += detail::num(c) + "*sin(" + detail::num(phase) + arg + ")";
        }
        return s;
    }

    std::string bump_factor() const
    {
        std::string r;
        for (int i = 0; i < space_.dim; ++i) {
            if (i) r += "+";
            r += var(i) + "^2";
        }
        return "bump(" + r + ")";
    }

    std::string multiplier_text()
    {
        switch (space_.family) {
        case FieldFamily::Trig: return detail::num(coef()) + "+" + trig_text();
        case FieldFamily::Bump: return bump_factor() + "*(" + poly_text(true) + ")";
        case FieldFamily::Ambient: return "sin(theta)^2*(" + poly_text(true) + ")";
        }
        return {};
    }

    std::string potential_text()
    {
        return space_.family == FieldFamily::Trig ? trig_text() : poly_text(false);
    }

    std::string probe_text()
    {
        return space_.family == FieldFamily::Trig ? detail::num(coef()) + "+" + trig_text() : poly_text(true);
    }

    ChartSpace space_;
    FieldBudget budget_;
    std::mt19937_64 rng_;
};

/// Named test objects that replace the random ones in draw 0. Vector slots:
/// X, Y, Z, W; scalar slots: f, g, h.
struct NamedFields {
    std::map<std::string, TestVector> vectors;
    std::map<std::string, TestFunction> functions;
    bool empty() const { return vectors.empty() && functions.empty(); }
};

/// Random fields for several draws, e.g. for inspection or external use.
inline std::vector<TestVector> random_fields(const ChartSpace& space, const FieldBudget& budget, int count)
{
    FieldGenerator gen(space, budget, budget.seed);
    std::vector<TestVector> out;
    for (int i = 0; i < count; ++i) out.push_back(gen.vector());
    return out;
}

inline std::vector<TestFunction> random_functions(const ChartSpace& space, const FieldBudget& budget,
                                                  int count)
{
    FieldGenerator gen(space, budget, detail::splitmix64(budget.seed));
    std::vector<TestFunction> out;
    for (int i = 0; i < count; ++i) out.push_back(gen.probe());
    return out;
}

/// Per-check options (mirrors a scenario's check entry).
struct CheckOptions {
    std::optional<double> tol;
    std::optional<double> k;                ///< conjecture: lower sectional bound
    std::optional<int> draws;               ///< overrides budget.draws
    std::string target = "jacobi";          ///< convergence: check to refine
    std::vector<int> resolutions;           ///< convergence: nodes per axis
    double min_order = 2.0;                 ///< convergence: required fitted order
    std::vector<AxisRule> rules;            ///< convergence: per-axis rules of every rung
    std::optional<bool> expect_violation;   ///< conjecture: defaults to k above the curvature
};

namespace detail {

/// One draw's outcome for an identity: absolute residual and its scale.
struct Sample {
    double residual = 0.0;
    double scale = 1.0;
    std::string note;
    std::string hard_failure; ///< set when a rounding-level sub-identity breaks
};

/// Bound for sub-identities that share their integrand and differ only by
/// rounding.
inline constexpr double kExactTol = 1e-12;

inline Sample sample_of(double a, double b, double majorant)
{
    return {std::abs(a - b), 1.0 + majorant, {}, {}};
}

/// Lazily drawn fields of one draw; named fields win in draw 0.
class Draw {
public:
    Draw(const ChartSpace& space, const FieldBudget& budget, std::uint64_t seed, const GridPtr& grid,
         const NamedFields* named)
        : gen_(space, budget, seed), grid_(grid), named_(named)
    {
        // Fix the text of every slot up front so that a slot's value does not
        // depend on which other slots a check happens to use.
        for (const char* v : {"X", "Y", "Z", "W"}) vec_[v] = gen_.vector();
        for (const char* s : {"f", "g", "h"}) fun_[s] = gen_.probe();
        fun_["g_mult"] = gen_.multiplier();
        fun_["f_pos"] = gen_.positive_probe();
        if (named_) {
            for (const auto& [k, v] : named_->vectors) vec_[k] = v;
            for (const auto& [k, v] : named_->functions) fun_[k] = v;
        }
    }

    const TestVector& vec(const std::string& name) const { return vec_.at(name); }
    const TestFunction& fun(const std::string& name) const { return fun_.at(name); }

    FieldPtr field(const std::string& name)
    {
        auto it = sampled_.find(name);
        if (it != sampled_.end()) return it->second;
        return sampled_[name] = sample(vec(name), grid_);
    }

    ScalarPtr scalar(const std::string& name)
    {
        auto it = scalars_.find(name);
        if (it != scalars_.end()) return it->second;
        return scalars_[name] = sample(fun(name), grid_, 2);
    }

    const GridPtr& grid() const { return grid_; }

private:
    FieldGenerator gen_;
    GridPtr grid_;
    const NamedFields* named_;
    std::map<std::string, TestVector> vec_;
    std::map<std::string, TestFunction> fun_;
    std::map<std::string, FieldPtr> sampled_;
    std::map<std::string, ScalarPtr> scalars_;
};

inline Integral add(const Integral& a, const Integral& b)
{
    return {a.value + b.value, a.majorant + b.majorant};
}

inline Sample run_identity(const std::string& id, Draw& d)
{
    const GridPtr& grid = d.grid();
    if (id == "conscov") {
        const auto X = d.field("X"), Y = d.field("Y"), W = d.field("W");
        const auto a = distr_cov_deriv(X, Y).pair(*W);
        const auto b = classical_cov_pairing(*X, *Y, *W);
        return sample_of(a.value, b.value, a.majorant + b.majorant);
    }
    if (id == "divle") {
        const auto r = bracket_divergence(*d.scalar("h"), *d.field("X"), *d.field("Y"));
        return {r.max_discrepancy, r.scale, {}, {}};
    }
    if (id == "lief") {
        // Pairing against g grad f, with g compactly supported.
        const auto X = d.field("X"), Y = d.field("Y");
        const TestFunction& g = d.fun("g_mult");
        const TestFunction& f = d.fun("f");
        const auto W = sample(TestVector::gradient_atom(g, f), grid);
        const auto a = lief_formula(*X, *Y, *sample(f, grid, 1), *sample(g, grid, 1));
        const auto b = distr_lie(X, Y).pair(*W);
        return sample_of(a.value, b.value, a.majorant + b.majorant);
    }
    if (id == "jacobi") {
        // Cyclic sum of [[X,Y],Z] with the inner bracket classical and the
        // outer one distributional, paired against g grad f.
        const auto X = d.field("X"), Y = d.field("Y"), Z = d.field("Z");
        const auto W = sample(TestVector::gradient_atom(d.fun("g_mult"), d.fun("f")), grid);
        const auto term = [&](const FieldPtr& a, const FieldPtr& b, const FieldPtr& c) {
            return distr_lie(bracket_field(*a, *b), c).pair(*W);
        };
        const auto s = add(add(term(X, Y, Z), term(Y, Z, X)), term(Z, X, Y));
        return sample_of(s.value, 0.0, s.majorant);
    }
    if (id == "r1a") {
        const auto X = d.field("X"), Y = d.field("Y"), Z = d.field("Z"), W = d.field("W");
        const auto a = curvature_op(X, Y, Z).pair(*W);
        const auto b = curvature_op(Y, X, Z).pair(*W);
        return sample_of(a.value, -b.value, a.majorant + b.majorant);
    }
    if (id == "zw") {
        const auto X = d.field("X"), Y = d.field("Y"), Z = d.field("Z"), W = d.field("W");
        const auto f = d.scalar("f");
        const auto a = curvature_scalar(X, Y, Z, W).pair(*f);
        const auto b = curvature_scalar(X, Y, W, Z).pair(*f);
        return sample_of(a.value, -b.value, a.majorant + b.majorant);
    }
    if (id == "r1b") {
        const auto X = d.field("X"), Y = d.field("Y"), Z = d.field("Z"), W = d.field("W");
        const auto f = d.scalar("f");
        const auto a = curvature_scalar(X, Y, Z, W).pair(*f);
        const auto b = curvature_scalar(Z, W, X, Y).pair(*f);
        return sample_of(a.value, b.value, a.majorant + b.majorant);
    }
    if (id == "bianchi") {
        const auto X = d.field("X"), Y = d.field("Y"), Z = d.field("Z"), W = d.field("W");
        const auto s = add(add(curvature_op(X, Y, Z).pair(*W), curvature_op(Y, Z, X).pair(*W)),
                           curvature_op(Z, X, Y).pair(*W));
        return sample_of(s.value, 0.0, s.majorant);
    }
    if (id == "tensorial") {
        // Inserting f in the X, Y or Z slot equals (f S)(g) = S(f g) up to
        // quadrature; the W slot and the module action itself agree to
        // rounding.
        const TestFunction& f = d.fun("f");
        const TestFunction& g = d.fun("g");
        const auto sc = [&](const TestVector& a, const TestVector& b, const TestVector& c,
                            const TestVector& w) {
            return curvature_scalar(sample(a, grid), sample(b, grid), sample(c, grid), sample(w, grid));
        };
        const TestVector &X = d.vec("X"), &Y = d.vec("Y"), &Z = d.vec("Z"), &W = d.vec("W");
        const auto g_s = d.scalar("g");
        const auto S = sc(X, Y, Z, W);
        const auto ref = S.times(f).pair(*g_s);
        Sample worst{0.0, 1.0, {}, {}};
        const auto consider = [&](const Integral& v, const char* slot) {
            const Sample s = sample_of(v.value, ref.value, v.majorant + ref.majorant);
            if (s.residual / s.scale >= worst.residual / worst.scale) worst = {s.residual, s.scale, slot, {}};
        };
        consider(sc(X.scaled(f), Y, Z, W).pair(*g_s), "X");
        consider(sc(X, Y.scaled(f), Z, W).pair(*g_s), "Y");
        consider(sc(X, Y, Z.scaled(f), W).pair(*g_s), "Z");
        const auto strict = [&](const Integral& v, const char* what) {
            const Sample s = sample_of(v.value, ref.value, v.majorant + ref.majorant);
            if (s.residual > kExactTol * s.scale && worst.hard_failure.empty())
                worst.hard_failure = std::string(what) + " differs by " + short_double(s.residual / s.scale);
        };
        strict(sc(X, Y, Z, W.scaled(f)).pair(*g_s), "W-slot insertion");
        strict(S.pair(*sample(f * g, grid, 2)), "S(f g)");
        return worst;
    }
    if (id == "module") {
        const TestFunction& f = d.fun("f");
        const TestFunction& g = d.fun("g");
        const auto T = distr_cov_deriv(d.field("X"), d.field("Y"));
        const auto W = d.field("W");
        const auto a = T.times(g).times(f).pair(*W);
        const auto b = T.times(f * g).pair(*W);
        const auto c = T.pair(*sample(d.vec("W").scaled(f), grid));
        const auto e = T.times(f).pair(*W);
        const Sample s1 = sample_of(a.value, b.value, a.majorant + b.majorant);
        const Sample s2 = sample_of(c.value, e.value, c.majorant + e.majorant);
        return s1.residual / s1.scale >= s2.residual / s2.scale ? s1 : s2;
    }
    if (id == "oracle") {
        const auto X = d.field("X"), Y = d.field("Y"), Z = d.field("Z"), W = d.field("W");
        const auto f = d.scalar("f");
        const auto a = curvature_scalar(X, Y, Z, W).pair(*f);
        const auto b = classical_curvature_pairing(*X, *Y, *Z, *W, *f);
        return sample_of(a.value, b.value, a.majorant + b.majorant);
    }
    throw Error("unknown check id '" + id + "'");
}

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace detail

/// Worst draw (by normalised residual) of an identity or oracle check.
inline CheckReport run_draws(const std::string& id, const GridPtr& grid, const FieldBudget& budget,
                             const CheckOptions& opt = {}, const NamedFields* named = nullptr)
{
    const auto t0 = std::chrono::steady_clock::now();
    CheckReport r;
    r.id = id;
    r.backend = grid->space().name;
    r.grid = grid->resolution_string();
    r.seed = budget.seed;
    r.tolerance = opt.tol.value_or(default_tolerance(*grid));
    r.draws = opt.draws.value_or(budget.draws);
    double worst = -1.0;
    std::string hard;
    for (int k = 0; k < r.draws; ++k) {
        detail::Draw d(grid->space(), budget, draw_seed(budget.seed, id, k), grid,
                       k == 0 ? named : nullptr);
        const detail::Sample s = detail::run_identity(id, d);
        if (!s.hard_failure.empty() && hard.empty())
            hard = "draw " + std::to_string(k) + ": " + s.hard_failure;
        const double rel = s.residual / s.scale;
        if (rel > worst) {
            worst = rel;
            r.residual = s.residual;
            r.scale = s.scale;
            r.detail = "worst draw " + std::to_string(k) + (s.note.empty() ? "" : " (slot " + s.note + ")");
        }
    }
    r.pass = r.residual <= r.tolerance * r.scale && hard.empty();
    if (!hard.empty()) r.detail += "; " + hard;
    r.wall_time = detail::seconds_since(t0);
    return r;
}

/// Runs the identity checks listed in `which` (all ten when empty).
inline std::vector<CheckReport> run_identity_checks(const GridPtr& grid, const FieldBudget& budget,
                                                    const std::vector<std::string>& which = {},
                                                    std::optional<double> tol = {})
{
    const auto& ids = which.empty() ? identity_check_ids() : which;
    for (const auto& id : ids)
        if (!is_identity_check(id)) throw Error("unknown identity check id '" + id + "'");
    std::vector<CheckReport> out;
    for (const auto& id : ids) {
        CheckOptions o;
        o.tol = tol;
        out.push_back(run_draws(id, grid, budget, o));
    }
    return out;
}

/// |S(f) - int f R_cl dm| over `count` draws.
inline CheckReport oracle_compare(const GridPtr& grid, const FieldBudget& budget, int count,
                                  std::optional<double> tol = {})
{
    CheckOptions o;
    o.tol = tol;
    o.draws = count;
    return run_draws("oracle", grid, budget, o);
}

/// Least-squares slope of log(residual) against log(1/n).
inline double fit_order(const std::vector<LadderRung>& rungs)
{
    const std::size_t m = rungs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : rungs) {
        const double x = std::log(1.0 / r.resolution), y = std::log(r.residual);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

/// Rungs below this normalised residual count as converged to rounding.
inline constexpr double kSaturationFloor = 1e-13;
/// On all-periodic grids every rung must reach this level.
inline constexpr double kPeriodicRungBound = 1e-10;

/// Refinement study of one identity or oracle check over square grids.
inline CheckReport convergence_study(const ChartSpace& space, const std::string& target,
                                     const std::vector<int>& resolutions, const FieldBudget& budget,
                                     const CheckOptions& opt = {}, const NamedFields* named = nullptr)
{
    if (resolutions.size() < 3) throw Error("convergence study needs at least 3 resolutions");
    for (std::size_t i = 1; i < resolutions.size(); ++i)
        if (resolutions[i] <= resolutions[i - 1])
            throw Error("convergence resolutions must be strictly increasing");
    if (!is_identity_check(target) && target != "oracle")
        throw Error("convergence target '" + target + "' is not an identity or oracle check");

    const auto t0 = std::chrono::steady_clock::now();
    CheckReport r;
    r.id = "convergence:" + target;
    r.backend = space.name;
    r.seed = budget.seed;
    r.draws = opt.draws.value_or(budget.draws);
    bool periodic = true;
    std::string errors;
    for (int n : resolutions) {
        const auto grid = build_grid(space, std::vector<int>(space.dim, n), opt.rules);
        periodic = periodic && grid->all_periodic_rules();
        CheckOptions o = opt;
        o.tol.reset();
        // Draw seeds depend on the target id, not on "convergence", so a
        // rung reproduces the plain check at that resolution.
        const CheckReport c = run_draws(target, grid, budget, o, named);
        r.ladder.push_back({n, c.normalized()});
        r.grid = c.grid;
        r.residual = c.residual;
        r.scale = c.scale;
    }
    r.tolerance = opt.tol.value_or(periodic ? kPeriodicRungBound : 1e-6);

    if (periodic) {
        r.pass = std::all_of(r.ladder.begin(), r.ladder.end(),
                             [&](const LadderRung& l) { return l.residual <= r.tolerance; });
        r.detail = r.pass ? "all rungs at or below " + detail::short_double(r.tolerance)
                          : "a rung exceeds " + detail::short_double(r.tolerance);
    } else {
        std::vector<LadderRung> fit;
        for (const auto& l : r.ladder)
            if (l.residual > kSaturationFloor) fit.push_back(l);
        if (fit.size() < 2) {
            r.pass = true;
            r.detail = "saturated: residuals at rounding level on every rung";
        } else {
            r.order = fit_order(fit);
            const bool monotone = r.ladder.back().residual <= r.ladder.front().residual;
            r.pass = *r.order >= opt.min_order && monotone;
            r.detail = "fitted order " + detail::short_double(*r.order) + " over "
                       + std::to_string(fit.size()) + " rungs, required "
                       + detail::short_double(opt.min_order) + (monotone ? "" : "; not monotone");
        }
    }
    r.wall_time = detail::seconds_since(t0);
    return r;
}

/// Searches for probes (X, Y, f >= 0) with R(X,Y,Y,X)(f) < k int f |X^Y|^2 dm.
/// For k at or below the space's constant curvature no draw may violate the
/// bound; above it, some draw with a non-degenerate wedge must. An explicit
/// expectation in `opt` replaces the comparison with the curvature.
inline CheckReport conjecture_probe(const GridPtr& grid, const FieldBudget& budget, double k,
                                    const CheckOptions& opt = {}, const NamedFields* named = nullptr)
{
    const ChartSpace& space = grid->space();
    if (!space.curvature && !opt.expect_violation)
        throw Error("conjecture probe needs a backend with known constant curvature ('" + space.name
                    + "') or an explicit expectation");
    const auto t0 = std::chrono::steady_clock::now();
    CheckReport r;
    r.id = "conjecture";
    r.backend = space.name;
    r.grid = grid->resolution_string();
    r.seed = budget.seed;
    r.tolerance = opt.tol.value_or(default_tolerance(*grid));
    r.draws = opt.draws.value_or(budget.draws);
    const bool expect_violation = opt.expect_violation.value_or(k > space.curvature.value_or(0.0));
    double min_rel = std::numeric_limits<double>::infinity();
    std::optional<std::string> witness;
    for (int i = 0; i < r.draws; ++i) {
        detail::Draw d(space, budget, draw_seed(budget.seed, "conjecture", i), grid,
                       i == 0 ? named : nullptr);
        const MarginResult m = sectional_margin(d.field("X"), d.field("Y"), d.scalar("f_pos"), k);
        const double rel = m.margin / m.scale;
        if (rel < min_rel) {
            min_rel = rel;
            r.residual = -m.margin;
            r.scale = m.scale;
        }
        if (expect_violation && !witness && m.margin < -r.tolerance * m.scale && m.wedge >= 1e-6) {
            witness = "violation witness: draw " + std::to_string(i) + ", margin "
                      + format_double(m.margin) + ", wedge integral " + format_double(m.wedge)
                      + ", margin/wedge " + format_double(m.margin / m.wedge);
        }
    }
    if (expect_violation) {
        r.pass = witness.has_value();
        r.detail = witness.value_or("no violation found for k = " + format_double(k));
    } else {
        r.pass = r.residual <= r.tolerance * r.scale;
        r.detail = std::string(r.pass ? "consistent with" : "violates") + " the lower bound k = "
                   + format_double(k) + " on all probes";
    }
    r.wall_time = detail::seconds_since(t0);
    return r;
}

} // namespace rcurv
