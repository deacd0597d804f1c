#pragma once

// Declarative scenarios: JSON loading and validation, flag overrides, and
// ordered parallel execution of the requested checks.

#include "rcurv/error.hpp"
#include "rcurv/report.hpp"
#include "rcurv/suite.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace rcurv {

struct ScenarioCheck {
    std::string id;
    CheckOptions opt;
};

struct Scenario {
    ChartSpace space;
    NamedFields fields;
    std::vector<ScenarioCheck> checks;
    std::vector<int> resolution;
    std::vector<AxisRule> rules;
    FieldBudget budget;
    std::optional<std::string> output_path;
    ReportFormat format = ReportFormat::Text;
};

/// Command-line overrides applied on top of a scenario file.
struct ScenarioOverrides {
    std::optional<std::vector<int>> grid;
    std::optional<std::uint64_t> seed;
    std::optional<int> refine; ///< rungs per convergence study
    std::optional<std::string> out;
    std::optional<ReportFormat> format;
};

/// Vector slots and scalar slots that named fields may fill.
inline const std::vector<std::string>& vector_slots()
{
    static const std::vector<std::string> v{"X", "Y", "Z", "W"};
    return v;
}

inline const std::vector<std::string>& scalar_slots()
{
    static const std::vector<std::string> v{"f", "g", "h", "g_mult", "f_pos"};
    return v;
}

namespace detail {

using nlohmann::json;

[[noreturn]] inline void fail(const std::string& key, const std::string& msg)
{
    throw ScenarioError(key + ": " + msg);
}

inline void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed)
{
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) fail(where.empty() ? k : where + "." + k, "unknown key");
    }
}

inline const json& require(const json& j, const std::string& where, const char* key)
{
    if (!j.contains(key)) fail(where.empty() ? key : where + "." + key, "missing");
    return j.at(key);
}

inline double get_number(const json& j, const std::string& key)
{
    if (!j.is_number()) fail(key, "expected a number");
    return j.get<double>();
}

inline long long get_integer(const json& j, const std::string& key)
{
    if (!j.is_number_integer()) fail(key, "expected an integer");
    return j.get<long long>();
}

inline std::string get_string(const json& j, const std::string& key)
{
    if (!j.is_string()) fail(key, "expected a string");
    return j.get<std::string>();
}

/// Expression text from a string or a number.
inline std::string get_expr_text(const json& j, const std::string& key)
{
    if (j.is_number()) return format_double(j.get<double>());
    return get_string(j, key);
}

inline Expr parse_in(const ChartSpace& s, const std::string& text, const std::string& key)
{
    try {
        return s.parse(text);
    } catch (const ParseError& e) {
        fail(key, e.what());
    }
}

inline AxisRule parse_rule(const json& j, const std::string& key)
{
    const std::string r = get_string(j, key);
    if (r == "auto") return AxisRule::Auto;
    if (r == "equispaced") return AxisRule::Equispaced;
    if (r == "gauss-legendre") return AxisRule::GaussLegendre;
    fail(key, "unknown rule '" + r + "' (expected auto, equispaced or gauss-legendre)");
}

inline ChartSpace parse_inline_space(const json& j)
{
    only_keys(j, "space",
              {"name", "dim", "domain", "periodic", "metric", "weight", "coords", "curvature",
               "bump_radius", "bump_center"});
    ChartSpace s;
    s.name = j.contains("name") ? get_string(j.at("name"), "space.name") : "custom";
    const long long dim = get_integer(require(j, "space", "dim"), "space.dim");
    if (dim < 1 || dim > kMaxDim) fail("space.dim", "must be in 1.." + std::to_string(kMaxDim));
    s.dim = static_cast<int>(dim);

    const json& dom = require(j, "space", "domain");
    if (!dom.is_array() || dom.size() != static_cast<std::size_t>(s.dim)) fail("space.domain", "expected " + std::to_string(s.dim) + " [lo, hi] pairs");
    for (int i = 0; i < s.dim; ++i) {
        const std::string key = "space.domain[" + std::to_string(i) + "]";
        if (!dom[i].is_array() || dom[i].size() != 2) fail(key, "expected [lo, hi]");
        s.lo[i] = get_number(dom[i][0], key + "[0]");
        s.hi[i] = get_number(dom[i][1], key + "[1]");
        if (!(s.hi[i] > s.lo[i])) fail(key, "empty interval");
    }

    if (j.contains("periodic")) {
        const json& p = j.at("periodic");
        if (!p.is_array() || p.size() != static_cast<std::size_t>(s.dim)) fail("space.periodic", "expected " + std::to_string(s.dim) + " booleans");
        for (int i = 0; i < s.dim; ++i) {
            if (!p[i].is_boolean()) fail("space.periodic[" + std::to_string(i) + "]", "expected a boolean");
            s.periodic[i] = p[i].get<bool>();
        }
    }

    if (j.contains("coords")) {
        const json& c = j.at("coords");
        if (!c.is_object()) fail("space.coords", "expected an object of name: axis");
        for (const auto& [name, axis] : c.items()) {
            const long long a = get_integer(axis, "space.coords." + name);
            if (a < 0 || a >= s.dim) fail("space.coords." + name, "axis out of range");
            s.coord_names[name] = static_cast<int>(a);
        }
    }

    const json& m = require(j, "space", "metric");
    if (!m.is_array() || m.size() != static_cast<std::size_t>(s.dim)) fail("space.metric", "expected a " + std::to_string(s.dim) + "x" + std::to_string(s.dim) + " array");
    for (int a = 0; a < s.dim; ++a) {
        if (!m[a].is_array() || m[a].size() != static_cast<std::size_t>(s.dim)) fail("space.metric[" + std::to_string(a) + "]", "expected " + std::to_string(s.dim) + " entries");
        for (int b = 0; b < s.dim; ++b) {
            const std::string key = "space.metric[" + std::to_string(a) + "][" + std::to_string(b) + "]";
            s.metric[a][b] = parse_in(s, get_expr_text(m[a][b], key), key);
        }
    }
    s.weight = j.contains("weight") ? parse_in(s, get_expr_text(j.at("weight"), "space.weight"), "space.weight")
                                    : Expr::constant(1.0, s.dim);
    if (j.contains("curvature")) s.curvature = get_number(j.at("curvature"), "space.curvature");

    if (s.all_periodic()) {
        s.family = FieldFamily::Trig;
    } else {
        if (s.any_periodic() || !j.contains("bump_radius"))
            fail("space.bump_radius",
                 "random fields need either all axes periodic or a bump support on a bounded domain");
        s.family = FieldFamily::Bump;
        s.bump_radius = get_number(j.at("bump_radius"), "space.bump_radius");
        if (!(s.bump_radius > 0.0)) fail("space.bump_radius", "must be positive");
        for (int i = 0; i < s.dim; ++i) s.bump_center[i] = 0.5 * (s.lo[i] + s.hi[i]);
        if (j.contains("bump_center")) {
            const json& c = j.at("bump_center");
            if (!c.is_array() || c.size() != static_cast<std::size_t>(s.dim)) fail("space.bump_center", "expected " + std::to_string(s.dim) + " numbers");
            for (int i = 0; i < s.dim; ++i) s.bump_center[i] = get_number(c[i], "space.bump_center[" + std::to_string(i) + "]");
        }
        for (int i = 0; i < s.dim; ++i)
            if (s.bump_center[i] - s.bump_radius <= s.lo[i] || s.bump_center[i] + s.bump_radius >= s.hi[i])
                fail("space.bump_radius", "support ball leaves the domain on axis " + std::to_string(i));
    }
    try {
        validate_space(s);
    } catch (const GeometryError& e) {
        fail("space", e.what());
    }
    return s;
}

inline ChartSpace parse_space(const json& j)
{
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        try {
            return make_backend(name);
        } catch (const Error&) {
            fail("space", "unknown backend '" + name + "'");
        }
    }
    if (j.is_object()) {
        if (j.size() == 1 && j.contains("name")) return parse_space(j.at("name"));
        return parse_inline_space(j);
    }
    fail("space", "expected a backend name or an inline space object");
}

inline TestFunction parse_function(const ChartSpace& s, const json& j, const std::string& key)
{
    return TestFunction(parse_in(s, get_expr_text(j, key), key));
}

inline NamedFields parse_fields(const ChartSpace& s, const json& j)
{
    NamedFields out;
    if (!j.is_object()) fail("fields", "expected an object");
    for (const auto& [name, v] : j.items()) {
        const std::string key = "fields." + name;
        const bool is_vec = std::find(vector_slots().begin(), vector_slots().end(), name) != vector_slots().end();
        const bool is_fun = std::find(scalar_slots().begin(), scalar_slots().end(), name) != scalar_slots().end();
        if (is_vec) {
            if (!v.is_array() || v.empty()) fail(key, "expected a non-empty list of [f, g] atoms");
            std::vector<Atom> atoms;
            for (std::size_t a = 0; a < v.size(); ++a) {
                const std::string ak = key + "[" + std::to_string(a) + "]";
                if (!v[a].is_array() || v[a].size() != 2) fail(ak, "expected [f, g]");
                atoms.push_back({parse_function(s, v[a][0], ak + "[0]"), parse_function(s, v[a][1], ak + "[1]")});
            }
            try {
                TestVector X(std::move(atoms));
                check_admissible(X, s);
                out.vectors[name] = std::move(X);
            } catch (const Error& e) {
                fail(key, e.what());
            }
        } else if (is_fun) {
            TestFunction f = parse_function(s, v, key);
            try {
                if (!periodic_match(f.expr(), s, kAdmissibilityTol)) fail(key, "not periodic on '" + s.name + "'");
                if (name == "g_mult") check_admissible(f, s);
            } catch (const ScenarioError&) {
                throw;
            } catch (const Error& e) {
                fail(key, e.what());
            }
            out.functions[name] = std::move(f);
        } else {
            fail(key, "unknown slot (vectors: X, Y, Z, W; functions: f, g, h, g_mult, f_pos)");
        }
    }
    return out;
}

inline void validate_resolution(const std::vector<int>& res, int dim, const std::string& key)
{
    if (static_cast<int>(res.size()) != dim)
        fail(key, "expected " + std::to_string(dim) + " entries, got " + std::to_string(res.size()));
    for (std::size_t i = 0; i < res.size(); ++i)
        if (res[i] < 8) throw ScenarioError(key + "[" + std::to_string(i) + "] < 8");
}

inline std::vector<int> parse_int_list(const json& j, const std::string& key)
{
    if (!j.is_array()) fail(key, "expected an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const long long v = get_integer(j[i], key + "[" + std::to_string(i) + "]");
        if (v < 0 || v > 1 << 16) fail(key + "[" + std::to_string(i) + "]", "out of range");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

inline ScenarioCheck parse_check(const json& j, std::size_t index, const ChartSpace& space)
{
    const std::string where = "checks[" + std::to_string(index) + "]";
    if (j.is_string()) return parse_check(json{{"id", j}}, index, space);
    if (!j.is_object()) fail(where, "expected an object or a check id");
    only_keys(j, where, {"id", "tol", "k", "target", "resolutions", "draws", "expect", "min_order"});
    ScenarioCheck c;
    c.id = get_string(require(j, where, "id"), where + ".id");
    if (!is_known_check(c.id)) fail(where + ".id", "unknown check id '" + c.id + "'");
    if (j.contains("tol")) {
        c.opt.tol = get_number(j.at("tol"), where + ".tol");
        if (!(*c.opt.tol > 0.0)) fail(where + ".tol", "must be positive");
    }
    if (j.contains("draws")) {
        const long long d = get_integer(j.at("draws"), where + ".draws");
        if (d < 1) fail(where + ".draws", "must be at least 1");
        c.opt.draws = static_cast<int>(d);
    }
    if (j.contains("k")) c.opt.k = get_number(j.at("k"), where + ".k");
    if (c.id == "conjecture") {
        if (!c.opt.k) fail(where + ".k", "missing (required by conjecture)");
        if (j.contains("expect")) {
            const std::string e = get_string(j.at("expect"), where + ".expect");
            if (e == "violation")
                c.opt.expect_violation = true;
            else if (e == "consistent")
                c.opt.expect_violation = false;
            else
                fail(where + ".expect", "expected 'violation' or 'consistent'");
        }
        if (!space.curvature && !c.opt.expect_violation)
            fail(where + ".expect", "required on a space without known constant curvature");
        if (c.opt.expect_violation && space.curvature && *c.opt.expect_violation != (*c.opt.k > *space.curvature))
            fail(where + ".expect", "contradicts k against the curvature of '" + space.name + "'");
    } else {
        for (const char* key : {"k", "expect"})
            if (j.contains(key)) fail(where + "." + key, "only valid for conjecture");
    }
    if (c.id == "convergence") {
        if (j.contains("target")) c.opt.target = get_string(j.at("target"), where + ".target");
        if (!is_identity_check(c.opt.target) && c.opt.target != "oracle")
            fail(where + ".target", "'" + c.opt.target + "' is not an identity or oracle check");
        c.opt.resolutions = parse_int_list(require(j, where, "resolutions"), where + ".resolutions");
        if (c.opt.resolutions.size() < 3) fail(where + ".resolutions", "needs at least 3 entries");
        for (std::size_t i = 0; i < c.opt.resolutions.size(); ++i) {
            if (c.opt.resolutions[i] < 8)
                throw ScenarioError(where + ".resolutions[" + std::to_string(i) + "] < 8");
            if (i > 0 && c.opt.resolutions[i] <= c.opt.resolutions[i - 1])
                fail(where + ".resolutions", "must be strictly increasing");
        }
        if (j.contains("min_order")) c.opt.min_order = get_number(j.at("min_order"), where + ".min_order");
    } else {
        for (const char* key : {"target", "resolutions", "min_order"})
            if (j.contains(key)) fail(where + "." + key, "only valid for convergence");
    }
    return c;
}

inline FieldBudget parse_budget(const json& j)
{
    if (!j.is_object()) fail("budget", "expected an object");
    only_keys(j, "budget", {"atoms", "degree", "range", "seed", "draws"});
    FieldBudget b;
    if (j.contains("atoms")) b.atoms = static_cast<int>(get_integer(j.at("atoms"), "budget.atoms"));
    if (j.contains("degree")) b.degree = static_cast<int>(get_integer(j.at("degree"), "budget.degree"));
    if (j.contains("range")) b.range = get_number(j.at("range"), "budget.range");
    if (j.contains("draws")) b.draws = static_cast<int>(get_integer(j.at("draws"), "budget.draws"));
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) fail("budget.seed", "expected a non-negative integer");
        b.seed = j.at("seed").get<std::uint64_t>();
    }
    try {
        b.validate();
    } catch (const Error& e) {
        throw ScenarioError(e.what());
    }
    return b;
}

} // namespace detail

/// Parses and fully validates a scenario; throws ScenarioError naming the
/// offending key.
inline Scenario parse_scenario(const std::string& text, const ScenarioOverrides& ov = {})
{
    using detail::fail;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ScenarioError("scenario must be a JSON object");
    detail::only_keys(j, "", {"space", "fields", "checks", "grid", "budget", "seed", "output", "description"});

    Scenario sc;
    sc.space = detail::parse_space(detail::require(j, "", "space"));
    if (j.contains("fields")) sc.fields = detail::parse_fields(sc.space, j.at("fields"));

    const auto& checks = detail::require(j, "", "checks");
    if (!checks.is_array() || checks.empty()) fail("checks", "expected a non-empty array");
    for (std::size_t i = 0; i < checks.size(); ++i)
        sc.checks.push_back(detail::parse_check(checks[i], i, sc.space));

    const auto& grid = detail::require(j, "", "grid");
    if (!grid.is_object()) fail("grid", "expected an object");
    detail::only_keys(grid, "grid", {"resolution", "rule"});
    sc.resolution = detail::parse_int_list(detail::require(grid, "grid", "resolution"), "grid.resolution");
    if (ov.grid) sc.resolution = *ov.grid;
    detail::validate_resolution(sc.resolution, sc.space.dim, "grid.resolution");
    if (grid.contains("rule")) {
        const auto& r = grid.at("rule");
        if (r.is_array()) {
            if (r.size() != static_cast<std::size_t>(sc.space.dim)) fail("grid.rule", "expected " + std::to_string(sc.space.dim) + " rules");
            for (std::size_t i = 0; i < r.size(); ++i)
                sc.rules.push_back(detail::parse_rule(r[i], "grid.rule[" + std::to_string(i) + "]"));
        } else {
            sc.rules.assign(sc.space.dim, detail::parse_rule(r, "grid.rule"));
        }
    }

    if (j.contains("budget")) sc.budget = detail::parse_budget(j.at("budget"));
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) fail("seed", "expected a non-negative integer");
        sc.budget.seed = j.at("seed").get<std::uint64_t>();
    }
    if (ov.seed) sc.budget.seed = *ov.seed;

    if (j.contains("output")) {
        const auto& o = j.at("output");
        if (!o.is_object()) fail("output", "expected an object");
        detail::only_keys(o, "output", {"path", "format"});
        if (o.contains("path")) sc.output_path = detail::get_string(o.at("path"), "output.path");
        if (o.contains("format")) {
            try {
                sc.format = parse_format(detail::get_string(o.at("format"), "output.format"));
            } catch (const ScenarioError&) {
                throw;
            } catch (const Error& e) {
                fail("output.format", e.what());
            }
        }
    }
    if (ov.out) sc.output_path = *ov.out;
    if (ov.format) sc.format = *ov.format;
    if (sc.output_path && *sc.output_path != "-") {
        const auto parent = std::filesystem::absolute(*sc.output_path).parent_path();
        if (!std::filesystem::is_directory(parent))
            fail("output.path", "directory '" + parent.string() + "' does not exist");
    }

    if (ov.refine) {
        if (*ov.refine < 3) fail("--refine", "needs at least 3 rungs");
        for (int r : sc.resolution)
            if (r != sc.resolution.front()) fail("--refine", "needs a square grid.resolution");
        for (auto& c : sc.checks) {
            if (c.id == "conjecture") continue;
            std::vector<int> ladder;
            for (int i = 0, n = sc.resolution.front(); i < *ov.refine; ++i, n *= 2) ladder.push_back(n);
            if (c.id != "convergence") {
                c.opt.target = c.id;
                c.id = "convergence";
            }
            c.opt.resolutions = std::move(ladder);
        }
    }
    for (auto& c : sc.checks)
        if (c.id == "convergence") c.opt.rules = sc.rules;

    // Build the grid once here so that rule and metric problems surface as
    // validation errors rather than as failed checks.
    try {
        build_grid(sc.space, sc.resolution, sc.rules);
    } catch (const GeometryError& e) {
        fail("grid", e.what());
    }
    return sc;
}

inline Scenario load_scenario(const std::string& path, const ScenarioOverrides& ov = {})
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError("cannot read scenario file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), ov);
}

/// Runs one check of a scenario; errors become failing reports.
inline CheckReport run_check(const Scenario& sc, const ScenarioCheck& c, const GridPtr& grid)
{
    const NamedFields* named = sc.fields.empty() ? nullptr : &sc.fields;
    try {
        if (c.id == "convergence")
            return convergence_study(sc.space, c.opt.target, c.opt.resolutions, sc.budget, c.opt, named);
        if (c.id == "conjecture") return conjecture_probe(grid, sc.budget, *c.opt.k, c.opt, named);
        return run_draws(c.id, grid, sc.budget, c.opt, named);
    } catch (const std::exception& e) {
        CheckReport r;
        r.id = c.id == "convergence" ? "convergence:" + c.opt.target : c.id;
        r.backend = sc.space.name;
        r.grid = grid->resolution_string();
        r.seed = sc.budget.seed;
        r.draws = c.opt.draws.value_or(sc.budget.draws);
        r.tolerance = c.opt.tol.value_or(default_tolerance(*grid));
        r.residual = std::numeric_limits<double>::max();
        r.pass = false;
        r.detail = std::string("error: ") + e.what();
        return r;
    }
}

/// Runs every check on a pool of `jobs` workers; reports keep the declared
/// order and do not depend on the pool size.
inline std::vector<CheckReport> run_checks(const Scenario& sc, int jobs = 1)
{
    const GridPtr grid = build_grid(sc.space, sc.resolution, sc.rules);
    std::vector<CheckReport> out(sc.checks.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < sc.checks.size();) out[i] = run_check(sc, sc.checks[i], grid);
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(sc.checks.size())));
    std::vector<std::jthread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    pool.clear();
    return out;
}

inline bool all_pass(const std::vector<CheckReport>& reports)
{
    return std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.pass; });
}

} // namespace rcurv
