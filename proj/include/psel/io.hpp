#pragma once

#include <psel/data.hpp>
#include <psel/error.hpp>
#include <psel/glm.hpp>
#include <psel/objectives.hpp>
#include <psel/pareto.hpp>
#include <psel/penalized.hpp>

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace psel {

/// Shortest decimal text that round-trips to the same double.
inline std::string format_full(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Fixed-point text with `digits` decimals, for human-readable tables.
inline std::string format_fixed(double v, int digits = 1)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    std::string s(buf);
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
    return s;
}

namespace detail {

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace detail

// ---------------------------------------------------------------------------
// Fit results (label, p, converged, f1, f2, ...)
// ---------------------------------------------------------------------------

/// One row per candidate. f1 is the negative log-likelihood, f2 the parameter
/// count. Rows for non-converged fits are kept and flagged.
inline void write_fit_results(std::ostream& out, std::span<const FittedModel> fits,
                              bool include_constant = true)
{
    out << "label,p,converged,f1,f2,rss,pearson_chi_sq,n,iterations\n";
    for (const auto& f : fits) {
        double f1 = f.neg_log_lik;
        if (f.converged) f1 = neg_log_likelihood(f, include_constant);
        out << detail::csv_field(f.spec.label()) << ',' << f.p << ',' << (f.converged ? "true" : "false")
            << ',' << format_full(f1) << ',' << f.p << ',' << format_full(f.rss) << ','
            << format_full(f.pearson_chi_sq) << ',' << f.n << ',' << f.iterations << '\n';
    }
}

/// Objective points read back from a results file or a precomputed fixture.
struct ObjectiveTable {
    std::vector<ObjectivePoint> points;
    std::optional<std::size_t> n;          ///< from an `n` column, if present
    std::optional<double> c_hat;           ///< from `pearson_chi_sq` of the largest model
    std::size_t skipped_nonconverged = 0;
};

/// Reads a CSV with at least `label`, `f1`, `f2` columns. Optional columns:
/// `p` (defaults to f2, which must then be a whole number), `converged`
/// (false rows are skipped), `n`, `pearson_chi_sq`. Other columns are ignored.
inline ObjectiveTable read_objective_table(const std::string& path)
{
    const auto table = detail::read_csv(path);
    const auto label = table.column_index("label");
    const auto f1 = table.column_index("f1");
    const auto f2 = table.column_index("f2");
    if (!label || !f1 || !f2) throw DataError(path + ": expected columns label, f1, f2");
    const auto p_col = table.column_index("p");
    const auto conv_col = table.column_index("converged");
    const auto n_col = table.column_index("n");
    const auto chi_col = table.column_index("pearson_chi_sq");

    const auto number = [&](std::size_t r, std::size_t c) {
        const auto v = detail::parse_number(table.rows[r][c]);
        if (!v)
            throw DataError(path + ": row " + std::to_string(r + 1) + ", column '" + table.header[c] +
                            "': non-numeric value '" + table.rows[r][c] + "'");
        return *v;
    };
    const auto count = [&](std::size_t r, std::size_t c) {
        const double v = number(r, c);
        if (!(v >= 0.0) || std::floor(v) != v)
            throw DataError(path + ": row " + std::to_string(r + 1) + ", column '" + table.header[c] +
                            "': expected a non-negative whole number");
        return static_cast<std::size_t>(v);
    };

    ObjectiveTable out;
    std::optional<double> chi_of_largest;
    std::size_t largest_p = 0;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (conv_col) {
            const auto& c = row[*conv_col];
            if (c == "false" || c == "0" || c == "FALSE") {
                ++out.skipped_nonconverged;
                continue;
            }
        }
        ObjectivePoint pt;
        pt.model_id = row[*label];
        pt.f1 = number(r, *f1);
        pt.f2 = number(r, *f2);
        pt.p = p_col ? count(r, *p_col) : count(r, *f2);
        if (!std::isfinite(pt.f1) || !std::isfinite(pt.f2))
            throw DataError(path + ": row " + std::to_string(r + 1) + ": non-finite objective value");
        for (const auto& existing : out.points) {
            if (existing.model_id == pt.model_id)
                throw DataError(path + ": duplicate model label '" + pt.model_id + "'");
        }
        if (n_col) {
            const auto n = count(r, *n_col);
            if (out.n && *out.n != n) throw DataError(path + ": inconsistent sample size column");
            out.n = n;
        }
        if (chi_col && (!chi_of_largest || pt.p > largest_p)) {
            chi_of_largest = number(r, *chi_col);
            largest_p = pt.p;
        }
        out.points.push_back(std::move(pt));
    }
    if (chi_of_largest && out.n && *out.n > largest_p)
        out.c_hat = std::max(1.0, *chi_of_largest / static_cast<double>(*out.n - largest_p));
    return out;
}

// ---------------------------------------------------------------------------
// Ranked tables, sensitivity, paths
// ---------------------------------------------------------------------------

inline void write_ranked_csv(std::ostream& out, const RankedTable& table)
{
    out << "rank,label,p,f1,f2,score,delta\n";
    for (const auto& r : table) {
        out << r.rank << ',' << detail::csv_field(r.label) << ',' << r.p << ',' << format_full(r.f1)
            << ',' << format_full(r.f2) << ',' << format_full(r.score) << ',' << format_full(r.delta)
            << '\n';
    }
}

inline void write_sensitivity_csv(std::ostream& out, const SensitivityReport& report)
{
    out << "criterion,top_model,p,score,agreement\n";
    for (const auto& e : report.entries) {
        out << e.criterion << ',' << detail::csv_field(e.top_model) << ',' << e.top_p << ','
            << format_full(e.score) << ',' << (report.agreement ? "true" : "false") << '\n';
    }
}

/// Columns: w2, rss, penalty, objective, then one column per coefficient
/// (design scale, intercept first).
inline void write_path_csv(std::ostream& out, std::span<const PathPoint> path,
                           std::span<const std::string> coefficient_names)
{
    out << "w2,rss,penalty,objective";
    for (const auto& name : coefficient_names) out << ',' << detail::csv_field(name);
    out << '\n';
    for (const auto& pt : path) {
        out << format_full(pt.w2) << ',' << format_full(pt.rss) << ',' << format_full(pt.penalty_value)
            << ',' << format_full(pt.objective);
        for (Eigen::Index j = 0; j < pt.coefficients.size(); ++j) out << ',' << format_full(pt.coefficients[j]);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Frontier report JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const ObjectivePoint& p)
{
    return {{"id", p.model_id}, {"f1", p.f1}, {"f2", p.f2}, {"p", p.p}};
}

/// Fields: points[], frontier_ids[], dominated_ids[], dominated_count,
/// duplicate_groups[], marginal_returns[], elbow_id (null when undefined),
/// elbow_gap, elbow_degenerate.
inline nlohmann::json frontier_to_json(const FrontierReport& report)
{
    nlohmann::json j;
    j["points"] = nlohmann::json::array();
    for (const auto& p : report.all_points) {
        auto jp = to_json(p);
        jp["pareto"] = report.on_frontier(p.model_id);
        j["points"].push_back(std::move(jp));
    }
    j["frontier_ids"] = nlohmann::json::array();
    for (const auto& p : report.frontier) j["frontier_ids"].push_back(p.model_id);
    j["dominated_ids"] = nlohmann::json::array();
    for (const auto& p : report.dominated) j["dominated_ids"].push_back(p.model_id);
    j["dominated_count"] = report.dominated_count;
    j["duplicate_groups"] = report.duplicate_groups;
    j["marginal_returns"] = nlohmann::json::array();
    for (const auto& m : report.marginal_returns) {
        j["marginal_returns"].push_back(
            {{"from", m.from_id}, {"to", m.to_id}, {"delta_f1", m.delta_f1}, {"delta_f2", m.delta_f2}});
    }
    if (report.elbow) {
        j["elbow_id"] = report.elbow->point.model_id;
        j["elbow_gap"] = report.elbow->gap;
        j["elbow_degenerate"] = report.elbow->degenerate;
    } else {
        j["elbow_id"] = nullptr;
    }
    return j;
}

} // namespace psel
