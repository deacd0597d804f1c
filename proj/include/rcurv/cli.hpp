#pragma once

// Command-line front end: `rcurv run <scenario.json> [flags]`.

#include "rcurv/report.hpp"
#include "rcurv/scenario.hpp"
#include "rcurv/space.hpp"
#include "rcurv/suite.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace rcurv {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitInvalid = 2;

/// Parses "64x64" (or a single "64") into per-axis resolutions.
inline std::vector<int> parse_grid_flag(const std::string& s)
{
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t x = s.find('x', pos);
        const std::string part = s.substr(pos, x == std::string::npos ? std::string::npos : x - pos);
        if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos || part.size() > 6)
            throw ScenarioError("--grid: expected RxR with positive integers, got '" + s + "'");
        out.push_back(std::stoi(part));
        if (x == std::string::npos) break;
        pos = x + 1;
    }
    return out;
}

/// Runs the command line; returns the process exit code.
inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Distributional curvature identity checker"};
    app.set_version_flag("--version", "rcurv 1.0.0");
    bool list_checks = false, list_backends = false;
    app.add_flag("--list-checks", list_checks, "List the known check ids");
    app.add_flag("--list-backends", list_backends, "List the built-in backends");

    auto* run = app.add_subcommand("run", "Run a scenario file");
    std::string file, grid, out_path, format;
    std::uint64_t seed = 0;
    int refine = 0, jobs = 1;
    bool timing = false;
    run->add_option("file", file, "Scenario JSON file")->required();
    auto* grid_opt = run->add_option("--grid", grid, "Override grid.resolution, e.g. 64x64");
    auto* seed_opt = run->add_option("--seed", seed, "Override the random seed");
    auto* refine_opt = run->add_option("--refine", refine, "Turn identity and oracle checks into refinement studies with n rungs");
    auto* out_opt = run->add_option("--out", out_path, "Write the report here ('-' for stdout)");
    auto* format_opt = run->add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "csv", "json"}));
    run->add_option("--jobs", jobs, "Parallel check jobs")->check(CLI::Range(1, 256));
    run->add_flag("--timing", timing, "Include wall times in JSON output");

    std::vector<std::string> args(argv + 1, argv + argc);
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitPass : kExitInvalid;
    }

    if (list_checks) {
        for (const auto& id : all_check_ids()) out << id << '\n';
        return kExitPass;
    }
    if (list_backends) {
        for (const auto& name : backend_names()) out << name << '\n';
        return kExitPass;
    }
    if (!run->parsed()) {
        out << app.help();
        return kExitInvalid;
    }

    Scenario sc;
    try {
        ScenarioOverrides ov;
        if (*grid_opt) ov.grid = parse_grid_flag(grid);
        if (*seed_opt) ov.seed = seed;
        if (*refine_opt) ov.refine = refine;
        if (*out_opt) ov.out = out_path;
        if (*format_opt) ov.format = parse_format(format);
        sc = load_scenario(file, ov);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    }

    const auto reports = run_checks(sc, jobs);
    const bool pass = all_pass(reports);
    if (sc.output_path && *sc.output_path != "-") {
        try {
            emit_report(reports, sc.format, *sc.output_path, timing);
        } catch (const Error& e) {
            err << "error: " << e.what() << '\n';
            return kExitInvalid;
        }
        if (sc.format != ReportFormat::Text) out << render_text(reports);
    } else {
        out << render(reports, sc.format, timing);
    }
    std::size_t failed = 0;
    for (const auto& r : reports) failed += r.pass ? 0 : 1;
    err << reports.size() << " checks, " << failed << " failed\n";
    return pass ? kExitPass : kExitFail;
}

} // namespace rcurv
