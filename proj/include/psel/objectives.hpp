#pragma once

#include <psel/error.hpp>
#include <psel/glm.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace psel {

// ---------------------------------------------------------------------------
// Complexity penalty
// ---------------------------------------------------------------------------

/// Penalty sum_j |theta_j - mu_j|^gamma over the coefficient vector (intercept
/// first). `mu` is empty for all-zero locations. By default the intercept is
/// counted when gamma == 0 (so the value is the parameter count) and excluded
/// otherwise.
struct PenaltySpec {
    double gamma = 0.0;
    std::vector<double> mu;
    std::optional<bool> penalize_intercept;

    bool intercept_penalized() const { return penalize_intercept.value_or(gamma == 0.0); }
};

/// |x|^0 is taken to be 1 for every x, zero included.
inline double penalty(const Eigen::VectorXd& coefficients, const PenaltySpec& spec = {})
{
    if (!(spec.gamma >= 0.0) || !std::isfinite(spec.gamma))
        throw UsageError("penalty degree gamma must be finite and >= 0");
    if (!spec.mu.empty() && spec.mu.size() != static_cast<std::size_t>(coefficients.size()))
        throw UsageError("penalty location vector has " + std::to_string(spec.mu.size()) +
                         " entries for " + std::to_string(coefficients.size()) + " coefficients");
    const Eigen::Index first = spec.intercept_penalized() ? 0 : 1;
    double total = 0.0;
    for (Eigen::Index j = first; j < coefficients.size(); ++j) {
        if (spec.gamma == 0.0) {
            total += 1.0;
            continue;
        }
        const double loc = spec.mu.empty() ? 0.0 : spec.mu[static_cast<std::size_t>(j)];
        const double d = std::abs(coefficients[j] - loc);
        if (spec.gamma == 1.0) total += d;
        else if (spec.gamma == 2.0) total += d * d;
        else total += std::pow(d, spec.gamma);
    }
    return total;
}

/// w1 * f1 + w2 * f2 for strictly positive weights.
inline double weighted_objective(double f1, double f2, double w1, double w2)
{
    if (!(w1 > 0.0) || !(w2 > 0.0) || !std::isfinite(w1) || !std::isfinite(w2))
        throw UsageError("objective weights must be finite and strictly positive");
    return w1 * f1 + w2 * f2;
}

// ---------------------------------------------------------------------------
// Criterion catalog
// ---------------------------------------------------------------------------

enum class Criterion { aic, aicc, qaic, qaicc, bic, ridge, lasso, custom };

enum class FitObjective { neg_log_lik, rss };

inline std::string_view to_string(Criterion c)
{
    switch (c) {
    case Criterion::aic: return "AIC";
    case Criterion::aicc: return "AICc";
    case Criterion::qaic: return "QAIC";
    case Criterion::qaicc: return "QAICc";
    case Criterion::bic: return "BIC";
    case Criterion::ridge: return "RIDGE";
    case Criterion::lasso: return "LASSO";
    case Criterion::custom: return "CUSTOM";
    }
    return "?";
}

inline constexpr std::string_view criterion_names = "aic, aicc, qaic, qaicc, bic, ridge, lasso, custom";

inline Criterion parse_criterion(std::string_view name)
{
    std::string lower;
    for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "aic") return Criterion::aic;
    if (lower == "aicc") return Criterion::aicc;
    if (lower == "qaic") return Criterion::qaic;
    if (lower == "qaicc") return Criterion::qaicc;
    if (lower == "bic") return Criterion::bic;
    if (lower == "ridge") return Criterion::ridge;
    if (lower == "lasso") return Criterion::lasso;
    if (lower == "custom") return Criterion::custom;
    throw UsageError("unknown criterion '" + std::string(name) + "'; valid names: " +
                     std::string(criterion_names));
}

/// Weights and penalty degree for one model (n observations, p parameters).
struct CriterionWeights {
    double w1 = 2.0;
    double w2 = 2.0;
    double gamma = 0.0;
    FitObjective fit_objective = FitObjective::neg_log_lik;
};

/// A criterion as a set of rules. AICc and QAICc weights depend on p, so
/// weights are resolved per model by `resolve`.
struct CriterionSpec {
    Criterion name = Criterion::aic;
    std::optional<double> c_hat;  ///< QAIC / QAICc
    std::optional<double> w1;     ///< CUSTOM
    std::optional<double> w2;     ///< RIDGE, LASSO, CUSTOM
    double gamma = 0.0;           ///< CUSTOM
    FitObjective fit_objective = FitObjective::neg_log_lik; ///< CUSTOM

    std::string label() const { return std::string(to_string(name)); }

    CriterionWeights resolve(std::size_t n, std::size_t p) const
    {
        const auto small_sample_w2 = [&] {
            if (n == 0) throw UsageError(label() + " needs the sample size n");
            if (!(static_cast<double>(n) - static_cast<double>(p) - 1.0 > 0.0))
                throw DataError(label() + " requires n - p - 1 > 0 (n = " + std::to_string(n) +
                                ", p = " + std::to_string(p) + ")");
            const double nd = static_cast<double>(n);
            return 2.0 * nd / (nd - static_cast<double>(p) - 1.0);
        };
        const auto quasi_w1 = [&] {
            if (!c_hat) throw UsageError(label() + " requires an overdispersion estimate c-hat");
            if (!(*c_hat >= 1.0) || !std::isfinite(*c_hat))
                throw UsageError(label() + " requires c-hat >= 1");
            return 2.0 / *c_hat;
        };
        const auto user_w2 = [&] {
            if (!w2) throw UsageError(label() + " requires a user-supplied w2");
            if (!(*w2 >= 0.0) || !std::isfinite(*w2)) throw UsageError(label() + " requires w2 >= 0");
            return *w2;
        };

        switch (name) {
        case Criterion::aic: return {2.0, 2.0, 0.0, FitObjective::neg_log_lik};
        case Criterion::aicc: return {2.0, small_sample_w2(), 0.0, FitObjective::neg_log_lik};
        case Criterion::qaic: return {quasi_w1(), 2.0, 0.0, FitObjective::neg_log_lik};
        case Criterion::qaicc: return {quasi_w1(), small_sample_w2(), 0.0, FitObjective::neg_log_lik};
        case Criterion::bic:
            if (n == 0) throw UsageError("BIC needs the sample size n");
            return {2.0, std::log(static_cast<double>(n)), 0.0, FitObjective::neg_log_lik};
        case Criterion::ridge: return {1.0, user_w2(), 2.0, FitObjective::rss};
        case Criterion::lasso: return {1.0, user_w2(), 1.0, FitObjective::rss};
        case Criterion::custom: {
            if (!w1 || !w2) throw UsageError("CUSTOM criterion requires w1 and w2");
            if (!(*w1 > 0.0) || !(*w2 > 0.0)) throw UsageError("CUSTOM weights must be positive");
            if (!(gamma >= 0.0)) throw UsageError("CUSTOM gamma must be >= 0");
            return {*w1, *w2, gamma, fit_objective};
        }
        }
        throw UsageError("unhandled criterion");
    }
};

inline CriterionWeights criterion_spec(Criterion name, std::size_t n, std::size_t p,
                                       std::optional<double> c_hat = std::nullopt)
{
    CriterionSpec spec;
    spec.name = name;
    spec.c_hat = c_hat;
    return spec.resolve(n, p);
}

// ---------------------------------------------------------------------------
// Objective space
// ---------------------------------------------------------------------------

/// One model placed in (fit, complexity) space.
struct ObjectivePoint {
    std::string model_id;
    double f1 = 0.0;
    double f2 = 0.0;
    std::size_t p = 0;
};

/// Fit objective of a converged model under `objective`.
inline double fit_objective_value(const FittedModel& fit, FitObjective objective,
                                  bool include_constant = true)
{
    if (objective == FitObjective::rss) {
        if (!fit.converged) throw NumericalError("model '" + fit.spec.label() + "' did not converge");
        return fit.rss;
    }
    return neg_log_likelihood(fit, include_constant);
}

inline ObjectivePoint to_objective_point(const FittedModel& fit, const CriterionWeights& w,
                                         bool include_constant = true)
{
    return {fit.spec.label(), fit_objective_value(fit, w.fit_objective, include_constant),
            penalty(fit.coefficients, PenaltySpec{w.gamma, {}, {}}), fit.p};
}

/// Points for a model set using the negative log-likelihood and the
/// parameter count (gamma = 0). Non-converged fits are skipped.
inline std::vector<ObjectivePoint> objective_points(std::span<const FittedModel> fits,
                                                    bool include_constant = true)
{
    std::vector<ObjectivePoint> points;
    for (const auto& fit : fits) {
        if (!fit.converged) continue;
        points.push_back(to_objective_point(fit, CriterionWeights{}, include_constant));
    }
    return points;
}

inline double evaluate_criterion(const FittedModel& fit, const CriterionSpec& crit,
                                 bool include_constant = true)
{
    const auto w = crit.resolve(fit.n, fit.p);
    const auto pt = to_objective_point(fit, w, include_constant);
    return w.w1 * pt.f1 + w.w2 * pt.f2;
}

/// Criterion value of a point already expressed in the criterion's objective space.
inline double evaluate_criterion(const ObjectivePoint& point, const CriterionSpec& crit, std::size_t n)
{
    const auto w = crit.resolve(n, point.p);
    return w.w1 * point.f1 + w.w2 * point.f2;
}

/// Fit objective in the form printed for Mallows' Cp:
/// rss_sub / rss_full - n. This is not the textbook Cp (which divides by the
/// full model's residual variance); it is kept in the printed form.
inline double mallows_cp_f1(const FittedModel& sub, const FittedModel& full, std::size_t n)
{
    if (sub.family != Family::gaussian || full.family != Family::gaussian)
        throw UsageError("Mallows' Cp needs Gaussian fits");
    if (sub.n != full.n) throw UsageError("Mallows' Cp fits must share the same data");
    if (!(full.rss > 0.0)) throw NumericalError("full model residual sum of squares is zero");
    return sub.rss / full.rss - static_cast<double>(n);
}

/// Overdispersion estimate chi^2 / (n - p) from the most complex converged
/// Poisson candidate, floored at 1.
inline double estimate_c_hat(std::span<const FittedModel> fits)
{
    const FittedModel* global = nullptr;
    for (const auto& f : fits) {
        if (!f.converged || f.family != Family::poisson) continue;
        if (!global || f.p > global->p) global = &f;
    }
    if (!global) throw UsageError("c-hat estimation needs a converged Poisson fit");
    if (global->n <= global->p)
        throw DataError("c-hat estimation needs n > p for the most complex model");
    const double c = pearson_chi_square(*global) / static_cast<double>(global->n - global->p);
    return std::max(1.0, c);
}

// ---------------------------------------------------------------------------
// Ranking and sensitivity
// ---------------------------------------------------------------------------

struct RankedRow {
    std::size_t rank = 0;
    std::string label;
    std::size_t p = 0;
    double f1 = 0.0;
    double f2 = 0.0;
    double score = 0.0;
    double delta = 0.0;
};

using RankedTable = std::vector<RankedRow>;

/// Sorts ascending by score; ties go to smaller p, then label.
/// `n` is the sample size used to resolve n-dependent weights.
inline RankedTable rank_models(std::span<const ObjectivePoint> points, const CriterionSpec& crit,
                               std::size_t n)
{
    if (points.empty()) throw UsageError("no models to rank");
    RankedTable rows;
    rows.reserve(points.size());
    for (const auto& pt : points) {
        rows.push_back({0, pt.model_id, pt.p, pt.f1, pt.f2, evaluate_criterion(pt, crit, n), 0.0});
    }
    std::sort(rows.begin(), rows.end(), [](const RankedRow& a, const RankedRow& b) {
        if (a.score != b.score) return a.score < b.score;
        if (a.p != b.p) return a.p < b.p;
        return a.label < b.label;
    });
    const double best = rows.front().score;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].rank = i + 1;
        rows[i].delta = rows[i].score - best;
    }
    return rows;
}

/// Ranks converged fits; points are built in the criterion's own objective
/// space (e.g. rss and |beta|^2 for RIDGE).
inline RankedTable rank_models(std::span<const FittedModel> fits, const CriterionSpec& crit,
                               bool include_constant = true)
{
    std::vector<ObjectivePoint> points;
    std::size_t n = 0;
    for (const auto& fit : fits) {
        if (!fit.converged) continue;
        if (n != 0 && fit.n != n) throw UsageError("fits to rank must share the same data");
        n = fit.n;
        points.push_back(to_objective_point(fit, crit.resolve(fit.n, fit.p), include_constant));
    }
    if (points.empty()) throw UsageError("no converged fits to rank");
    return rank_models(points, crit, n);
}

struct SensitivityEntry {
    std::string criterion;
    std::string top_model;
    std::size_t top_p = 0;
    double score = 0.0;
};

struct SensitivityReport {
    std::vector<SensitivityEntry> entries;
    bool agreement = false;
};

namespace detail {

template <class RankOne>
SensitivityReport sensitivity_from(std::span<const CriterionSpec> criteria, RankOne&& rank_one)
{
    if (criteria.size() < 2) throw UsageError("sensitivity analysis needs at least two criteria");
    SensitivityReport report;
    for (const auto& crit : criteria) {
        const auto table = rank_one(crit);
        const auto& top = table.front();
        report.entries.push_back({crit.label(), top.label, top.p, top.score});
    }
    report.agreement = std::all_of(report.entries.begin(), report.entries.end(), [&](const auto& e) {
        return e.top_model == report.entries.front().top_model;
    });
    return report;
}

} // namespace detail

/// Top model under each criterion and whether they all pick the same one.
inline SensitivityReport sensitivity_report(std::span<const ObjectivePoint> points,
                                            std::span<const CriterionSpec> criteria, std::size_t n)
{
    return detail::sensitivity_from(criteria, [&](const CriterionSpec& c) { return rank_models(points, c, n); });
}

inline SensitivityReport sensitivity_report(std::span<const FittedModel> fits,
                                            std::span<const CriterionSpec> criteria,
                                            bool include_constant = true)
{
    return detail::sensitivity_from(
        criteria, [&](const CriterionSpec& c) { return rank_models(fits, c, include_constant); });
}

} // namespace psel
