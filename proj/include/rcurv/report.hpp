#pragma once

// Check reports and their text, CSV and JSON renderings.

#include "rcurv/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace rcurv {

struct LadderRung {
    int resolution = 0; ///< nodes per axis
    double residual = 0.0; ///< normalised residual at this resolution

    friend bool operator==(const LadderRung&, const LadderRung&) = default;
};

struct CheckReport {
    std::string id;
    std::string backend;
    double residual = 0.0;
    double scale = 1.0;
    double tolerance = 0.0;
    bool pass = false;
    std::vector<LadderRung> ladder;
    std::optional<double> order;
    std::uint64_t seed = 0;
    int draws = 0;
    std::string grid;   ///< e.g. "64x64"
    std::string detail; ///< witness, saturation note or error text
    double wall_time = 0.0;

    double normalized() const { return scale > 0.0 ? residual / scale : residual; }

    friend bool operator==(const CheckReport&, const CheckReport&) = default;
};

enum class ReportFormat { Text, Csv, Json };

inline ReportFormat parse_format(const std::string& s)
{
    if (s == "text") return ReportFormat::Text;
    if (s == "csv") return ReportFormat::Csv;
    if (s == "json") return ReportFormat::Json;
    throw Error("unknown report format '" + s + "' (expected text, csv or json)");
}

inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::string short_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

} // namespace detail

inline std::string render_text(const std::vector<CheckReport>& reports)
{
    std::vector<std::array<std::string, 8>> rows;
    rows.push_back({"check", "backend", "grid", "residual", "scale", "tol", "order", "pass"});
    for (const auto& r : reports) {
        rows.push_back({r.id, r.backend, r.grid, detail::short_double(r.residual),
                        detail::short_double(r.scale), detail::short_double(r.tolerance),
                        r.order ? detail::short_double(*r.order) : std::string("-"),
                        r.pass ? "PASS" : "FAIL"});
    }
    std::array<std::size_t, 8> width{};
    for (const auto& row : rows)
        for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
    std::ostringstream os;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        for (std::size_t i = 0; i < rows[k].size(); ++i) {
            os << rows[k][i];
            if (i + 1 < rows[k].size()) os << std::string(width[i] - rows[k][i].size() + 2, ' ');
        }
        os << '\n';
        if (k > 0 && !reports[k - 1].detail.empty()) os << "    " << reports[k - 1].detail << '\n';
    }
    return os.str();
}

/// One row per report; the ladder is flattened as resolution:residual pairs
/// separated by ';'. Wall time is left out so that the bytes only depend on
/// the inputs.
inline std::string render_csv(const std::vector<CheckReport>& reports)
{
    std::ostringstream os;
    os << "id,backend,grid,residual,scale,tolerance,pass,order,seed,draws,ladder,detail\n";
    for (const auto& r : reports) {
        std::string ladder;
        for (const auto& l : r.ladder) {
            if (!ladder.empty()) ladder += ';';
            ladder += std::to_string(l.resolution) + ":" + format_double(l.residual);
        }
        os << detail::csv_field(r.id) << ',' << detail::csv_field(r.backend) << ',' << r.grid << ','
           << format_double(r.residual) << ',' << format_double(r.scale) << ','
           << format_double(r.tolerance) << ',' << (r.pass ? "true" : "false") << ','
           << (r.order ? format_double(*r.order) : std::string()) << ',' << r.seed << ',' << r.draws
           << ',' << ladder << ',' << detail::csv_field(r.detail) << '\n';
    }
    return os.str();
}

inline void to_json(nlohmann::json& j, const LadderRung& l)
{
    j = nlohmann::json{{"resolution", l.resolution}, {"residual", l.residual}};
}

inline void from_json(const nlohmann::json& j, LadderRung& l)
{
    j.at("resolution").get_to(l.resolution);
    j.at("residual").get_to(l.residual);
}

inline void to_json(nlohmann::json& j, const CheckReport& r)
{
    j = nlohmann::json{{"id", r.id},         {"backend", r.backend},     {"grid", r.grid},
                       {"residual", r.residual}, {"scale", r.scale},    {"tolerance", r.tolerance},
                       {"pass", r.pass},     {"ladder", r.ladder},       {"seed", r.seed},
                       {"draws", r.draws},   {"detail", r.detail},       {"wall_time", r.wall_time}};
    j["order"] = r.order ? nlohmann::json(*r.order) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json& j, CheckReport& r)
{
    j.at("id").get_to(r.id);
    j.at("backend").get_to(r.backend);
    j.at("grid").get_to(r.grid);
    j.at("residual").get_to(r.residual);
    j.at("scale").get_to(r.scale);
    j.at("tolerance").get_to(r.tolerance);
    j.at("pass").get_to(r.pass);
    j.at("ladder").get_to(r.ladder);
    j.at("seed").get_to(r.seed);
    j.at("draws").get_to(r.draws);
    j.at("detail").get_to(r.detail);
    r.wall_time = j.value("wall_time", 0.0);
    if (j.contains("order") && !j.at("order").is_null())
        r.order = j.at("order").get<double>();
    else
        r.order.reset();
}

/// Lossless JSON; wall times are zeroed unless `with_timing` is set so that
/// the default output is byte-stable.
inline std::string render_json(const std::vector<CheckReport>& reports, bool with_timing = false)
{
    nlohmann::json arr = nlohmann::json::array();
    for (auto r : reports) {
        if (!with_timing) r.wall_time = 0.0;
        arr.push_back(r);
    }
    return nlohmann::json{{"reports", arr}}.dump(2) + "\n";
}

inline std::vector<CheckReport> parse_json_reports(const std::string& text)
{
    return nlohmann::json::parse(text).at("reports").get<std::vector<CheckReport>>();
}

inline std::string render(const std::vector<CheckReport>& reports, ReportFormat f,
                          bool with_timing = false)
{
    switch (f) {
    case ReportFormat::Csv: return render_csv(reports);
    case ReportFormat::Json: return render_json(reports, with_timing);
    default: return render_text(reports);
    }
}

/// Writes the rendered reports to `path` ("-" for none).
inline void emit_report(const std::vector<CheckReport>& reports, ReportFormat f, const std::string& path,
                        bool with_timing = false)
{
    if (reports.empty()) throw Error("no reports to write");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write report to '" + path + "'");
    out << render(reports, f, with_timing);
    if (!out) throw Error("error while writing '" + path + "'");
}

} // namespace rcurv
