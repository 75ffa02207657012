#pragma once

#include <psel/error.hpp>
#include <psel/objectives.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace psel {

namespace detail {

inline void require_finite(const ObjectivePoint& p)
{
    if (!std::isfinite(p.f1) || !std::isfinite(p.f2))
        throw DataError("objective point '" + p.model_id + "' has non-finite coordinates");
}

inline bool same_coordinates(const ObjectivePoint& a, const ObjectivePoint& b)
{
    return a.f1 == b.f1 && a.f2 == b.f2;
}

/// Drops consecutive points with identical coordinates; input must be sorted by f2.
inline std::vector<ObjectivePoint> unique_steps(std::span<const ObjectivePoint> frontier)
{
    std::vector<ObjectivePoint> out;
    for (const auto& p : frontier) {
        require_finite(p);
        if (!out.empty()) {
            if (p.f2 < out.back().f2) throw UsageError("frontier must be sorted by f2 ascending");
            if (same_coordinates(p, out.back())) continue;
        }
        out.push_back(p);
    }
    return out;
}

} // namespace detail

/// Minimization in both coordinates; exact comparisons.
inline bool dominates(const ObjectivePoint& a, const ObjectivePoint& b)
{
    detail::require_finite(a);
    detail::require_finite(b);
    return a.f1 <= b.f1 && a.f2 <= b.f2 && (a.f1 < b.f1 || a.f2 < b.f2);
}

struct MarginalReturn {
    std::string from_id;
    std::string to_id;
    double delta_f1 = 0.0; ///< f1 gained (decrease) by moving to the more complex point
    double delta_f2 = 0.0;
};

struct ElbowResult {
    ObjectivePoint point;
    double gap = 0.0;        ///< vertical distance below the endpoint chord
    bool degenerate = false; ///< no curvature: all interior points lie on the chord
};

/// Consecutive improvements f1[k] - f1[k+1] along a frontier sorted by f2.
/// Points with identical coordinates count once.
inline std::vector<MarginalReturn> marginal_returns(std::span<const ObjectivePoint> frontier)
{
    const auto steps = detail::unique_steps(frontier);
    if (steps.size() < 2) throw UsageError("marginal returns need at least two frontier points");
    std::vector<MarginalReturn> out;
    for (std::size_t k = 0; k + 1 < steps.size(); ++k) {
        out.push_back({steps[k].model_id, steps[k + 1].model_id, steps[k].f1 - steps[k + 1].f1,
                       steps[k + 1].f2 - steps[k].f2});
    }
    return out;
}

/// Interior frontier point lying furthest below the chord that joins the two
/// endpoints in the (f2, f1) plane. Ties go to the smaller f2.
inline ElbowResult elbow(std::span<const ObjectivePoint> frontier)
{
    const auto steps = detail::unique_steps(frontier);
    if (steps.size() < 3) throw UsageError("elbow detection needs at least three frontier points");
    const auto& a = steps.front();
    const auto& b = steps.back();
    if (!(b.f2 > a.f2)) throw UsageError("frontier endpoints share the same complexity");
    const double slope = (b.f1 - a.f1) / (b.f2 - a.f2);

    ElbowResult best{steps[1], -std::numeric_limits<double>::infinity(), false};
    for (std::size_t k = 1; k + 1 < steps.size(); ++k) {
        const double chord = a.f1 + slope * (steps[k].f2 - a.f2);
        const double gap = chord - steps[k].f1;
        if (gap > best.gap) best = {steps[k], gap, false};
    }
    const double scale = std::abs(a.f1) + std::abs(b.f1) + 1.0;
    if (best.gap <= 1e-12 * scale) {
        best.degenerate = true;
        best.gap = std::max(best.gap, 0.0);
    }
    return best;
}

/// Largest p satisfying p < n / obs_per_param.
inline std::size_t max_parameters_for(std::size_t n, std::size_t obs_per_param = 15)
{
    if (obs_per_param == 0) throw UsageError("observations per parameter must be positive");
    const auto ceil_div = (n + obs_per_param - 1) / obs_per_param;
    return ceil_div == 0 ? 0 : ceil_div - 1;
}

/// Minimum-f1 frontier point among those with p <= p_max.
inline ObjectivePoint constrained_select(std::span<const ObjectivePoint> frontier, std::size_t p_max)
{
    if (p_max == 0) throw UsageError("parameter limit must be at least 1");
    const ObjectivePoint* best = nullptr;
    for (const auto& pt : frontier) {
        detail::require_finite(pt);
        if (pt.p > p_max) continue;
        if (!best || pt.f1 < best->f1 || (pt.f1 == best->f1 && pt.p < best->p)) best = &pt;
    }
    if (!best)
        throw UsageError("no frontier model has p <= " + std::to_string(p_max));
    return *best;
}

struct FrontierReport {
    std::vector<ObjectivePoint> all_points;
    std::vector<ObjectivePoint> frontier;  ///< sorted by f2, then f1, then id
    std::vector<ObjectivePoint> dominated; ///< input order
    std::size_t dominated_count = 0;
    /// Frontier members sharing identical (f1, f2); all are kept.
    std::vector<std::vector<std::string>> duplicate_groups;
    std::vector<MarginalReturn> marginal_returns; ///< empty when fewer than two distinct steps
    std::optional<ElbowResult> elbow;             ///< absent when fewer than three distinct steps

    bool on_frontier(const std::string& id) const
    {
        return std::any_of(frontier.begin(), frontier.end(),
                           [&](const ObjectivePoint& p) { return p.model_id == id; });
    }
};

/// Non-dominated subset by a sort-and-sweep over (f2, f1).
inline FrontierReport pareto_frontier(std::span<const ObjectivePoint> points)
{
    if (points.empty()) throw UsageError("Pareto frontier of an empty point set");
    for (const auto& p : points) detail::require_finite(p);

    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        const auto& a = points[i];
        const auto& b = points[j];
        if (a.f2 != b.f2) return a.f2 < b.f2;
        if (a.f1 != b.f1) return a.f1 < b.f1;
        return a.model_id < b.model_id;
    });

    std::vector<bool> keep(points.size(), false);
    double best_f1_before = std::numeric_limits<double>::infinity(); // over strictly smaller f2
    for (std::size_t g = 0; g < order.size();) {
        std::size_t end = g;
        while (end < order.size() && points[order[end]].f2 == points[order[g]].f2) ++end;
        const double group_min = points[order[g]].f1;
        if (group_min < best_f1_before) {
            for (std::size_t k = g; k < end && points[order[k]].f1 == group_min; ++k)
                keep[order[k]] = true;
            best_f1_before = group_min;
        }
        g = end;
    }

    FrontierReport report;
    report.all_points.assign(points.begin(), points.end());
    for (const auto i : order) {
        if (keep[i]) report.frontier.push_back(points[i]);
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!keep[i]) report.dominated.push_back(points[i]);
    }
    report.dominated_count = report.dominated.size();

    for (std::size_t k = 0; k < report.frontier.size();) {
        std::size_t end = k + 1;
        while (end < report.frontier.size() &&
               detail::same_coordinates(report.frontier[end], report.frontier[k]))
            ++end;
        if (end - k > 1) {
            std::vector<std::string> group;
            for (std::size_t m = k; m < end; ++m) group.push_back(report.frontier[m].model_id);
            report.duplicate_groups.push_back(std::move(group));
        }
        k = end;
    }

    const auto distinct = report.frontier.size() - [&] {
        std::size_t dup = 0;
        for (const auto& g : report.duplicate_groups) dup += g.size() - 1;
        return dup;
    }();
    if (distinct >= 2) report.marginal_returns = marginal_returns(report.frontier);
    if (distinct >= 3) report.elbow = elbow(report.frontier);
    return report;
}

} // namespace psel
