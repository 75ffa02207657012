#pragma once

#include <psel/data.hpp>
#include <psel/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace psel {

enum class Family { poisson, gaussian };

inline std::string_view to_string(Family f) { return f == Family::poisson ? "poisson" : "gaussian"; }

inline Family parse_family(std::string_view name)
{
    if (name == "poisson") return Family::poisson;
    if (name == "gaussian") return Family::gaussian;
    throw UsageError("unknown family '" + std::string(name) + "' (expected poisson or gaussian)");
}

struct IrlsOptions {
    double tolerance = 1e-8;      ///< relative deviance change
    int max_iterations = 100;
    double rank_tolerance = 1e-10; ///< relative to the largest pivot
};

/// Result of a single GLM fit. Coefficients are on the design's scale
/// (standardized when the design is); `raw_coefficients` are back-transformed.
struct FittedModel {
    ModelSpec spec;
    Family family = Family::poisson;
    Eigen::VectorXd coefficients;
    Eigen::VectorXd raw_coefficients;
    Eigen::VectorXd std_errors;
    Eigen::VectorXd response;
    Eigen::VectorXd fitted;
    double neg_log_lik = 0.0; ///< full likelihood, constant included
    double deviance = 0.0;
    double rss = 0.0;
    double pearson_chi_sq = 0.0;
    std::size_t p = 0;
    std::size_t n = 0;
    bool converged = false;
    int iterations = 0;
    std::vector<double> deviance_trace; ///< deviance after initialization and each accepted step
};

namespace detail {

inline Eigen::ColPivHouseholderQR<Eigen::MatrixXd> full_rank_qr(const Eigen::MatrixXd& x,
                                                                double rank_tolerance)
{
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x.rows(), x.cols());
    qr.setThreshold(rank_tolerance);
    qr.compute(x);
    if (qr.rank() < x.cols())
        throw NumericalError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                             " < " + std::to_string(x.cols()) + " columns)");
    return qr;
}

inline double log_factorial_sum(const Eigen::VectorXd& y)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) s += std::lgamma(y[i] + 1.0);
    return s;
}

/// Poisson deviance 2 * sum(y log(y/mu) - (y - mu)), with 0 log 0 = 0.
inline double poisson_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu)
{
    double d = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double term = y[i] > 0.0 ? y[i] * std::log(y[i] / mu[i]) : 0.0;
        d += term - (y[i] - mu[i]);
    }
    return 2.0 * d;
}

inline double poisson_kernel(const Eigen::VectorXd& y, const Eigen::VectorXd& mu)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        s += mu[i] - (y[i] > 0.0 ? y[i] * std::log(mu[i]) : 0.0);
    return s;
}

inline double gaussian_constant(std::size_t n)
{
    return 0.5 * static_cast<double>(n) * (std::log(2.0 * std::numbers::pi) + 1.0);
}

inline void check_design_response(const DesignMatrix& design, const Eigen::VectorXd& y)
{
    if (design.rows() != y.size())
        throw DataError("design has " + std::to_string(design.rows()) + " rows but response has " +
                        std::to_string(y.size()));
}

} // namespace detail

/// Poisson regression with log link by iteratively reweighted least squares.
/// Each step solves the weighted least-squares problem by pivoted QR; a step
/// that would raise the deviance is halved until it does not. A fit that hits
/// the iteration cap is returned with `converged == false`.
inline FittedModel fit_poisson_irls(const DesignMatrix& design, const Eigen::VectorXd& y,
                                    const IrlsOptions& opts = {}, ModelSpec spec = {})
{
    detail::check_design_response(design, y);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!(y[i] >= 0.0) || std::floor(y[i]) != y[i] || !std::isfinite(y[i]))
            throw DataError("Poisson response must be non-negative integers (row " +
                            std::to_string(i + 1) + ")");
    }
    const auto& x = design.matrix();
    const auto k = x.cols();
    if (x.rows() < k) throw NumericalError("more parameters than observations");
    detail::full_rank_qr(x, opts.rank_tolerance);

    FittedModel fit;
    fit.spec = std::move(spec);
    fit.family = Family::poisson;
    fit.n = static_cast<std::size_t>(y.size());
    fit.p = static_cast<std::size_t>(k);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
    beta[0] = std::log(y.mean() + 1e-8);
    Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd mu = eta.array().exp();
    double dev = detail::poisson_deviance(y, mu);
    fit.deviance_trace.push_back(dev);

    for (int it = 1; it <= opts.max_iterations; ++it) {
        fit.iterations = it;
        const Eigen::ArrayXd w = mu.array();
        const Eigen::ArrayXd z = eta.array() + (y.array() - mu.array()) / w;
        if (!w.allFinite() || !z.allFinite() || (w <= 0.0).any())
            throw NumericalError("IRLS diverged: non-finite working weights");
        const Eigen::ArrayXd sw = w.sqrt();
        const Eigen::MatrixXd wx = sw.matrix().asDiagonal() * x;
        const auto qr = detail::full_rank_qr(wx, opts.rank_tolerance);
        Eigen::VectorXd candidate = qr.solve((sw * z).matrix());

        Eigen::VectorXd eta_new = x * candidate;
        Eigen::VectorXd mu_new = eta_new.array().exp();
        double dev_new = detail::poisson_deviance(y, mu_new);
        int halvings = 0;
        while (!(std::isfinite(dev_new) && dev_new <= dev) && halvings < 50) {
            candidate = 0.5 * (candidate + beta);
            eta_new = x * candidate;
            mu_new = eta_new.array().exp();
            dev_new = detail::poisson_deviance(y, mu_new);
            ++halvings;
        }
        if (!(std::isfinite(dev_new) && dev_new <= dev)) {
            // No descent along the Newton direction: the current point is the
            // numerical optimum.
            fit.converged = true;
            break;
        }
        const double change = std::abs(dev_new - dev) / (std::abs(dev_new) + 0.1);
        beta = std::move(candidate);
        eta = std::move(eta_new);
        mu = std::move(mu_new);
        dev = dev_new;
        fit.deviance_trace.push_back(dev);
        if (change < opts.tolerance) {
            fit.converged = true;
            break;
        }
    }
    if (!mu.allFinite()) throw NumericalError("IRLS diverged: non-finite fitted means");

    fit.coefficients = beta;
    fit.raw_coefficients = design.to_raw_scale(beta);
    fit.response = y;
    fit.fitted = mu;
    fit.deviance = dev;
    fit.rss = (y - mu).squaredNorm();
    fit.pearson_chi_sq = ((y - mu).array().square() / mu.array()).sum();
    fit.neg_log_lik = detail::poisson_kernel(y, mu) + detail::log_factorial_sum(y);

    const Eigen::MatrixXd info = x.transpose() * mu.asDiagonal() * x;
    fit.std_errors = info.ldlt().solve(Eigen::MatrixXd::Identity(k, k)).diagonal().cwiseSqrt();
    return fit;
}

/// Ordinary least squares. The Gaussian likelihood uses sigma^2 = rss / n.
/// A perfect fit (rss = 0) has neg_log_lik = -infinity.
inline FittedModel fit_gaussian_ols(const DesignMatrix& design, const Eigen::VectorXd& y,
                                    double rank_tolerance = 1e-10, ModelSpec spec = {})
{
    detail::check_design_response(design, y);
    const auto& x = design.matrix();
    const auto n = x.rows();
    const auto k = x.cols();
    if (n <= k)
        throw DataError("least squares needs more observations than parameters (n = " +
                        std::to_string(n) + ", p = " + std::to_string(k) + ")");
    if (!y.allFinite()) throw DataError("response is not finite");
    const auto qr = detail::full_rank_qr(x, rank_tolerance);

    FittedModel fit;
    fit.spec = std::move(spec);
    fit.family = Family::gaussian;
    fit.n = static_cast<std::size_t>(n);
    fit.p = static_cast<std::size_t>(k);
    fit.coefficients = qr.solve(y);
    fit.raw_coefficients = design.to_raw_scale(fit.coefficients);
    fit.response = y;
    fit.fitted = x * fit.coefficients;
    fit.rss = (y - fit.fitted).squaredNorm();
    fit.deviance = fit.rss;
    fit.pearson_chi_sq = fit.rss;
    const double nd = static_cast<double>(n);
    fit.neg_log_lik = 0.5 * nd * std::log(fit.rss / nd) + detail::gaussian_constant(fit.n);
    fit.converged = true;
    fit.iterations = 1;
    fit.deviance_trace.push_back(fit.rss);

    const double sigma2 = fit.rss / static_cast<double>(n - k);
    const Eigen::MatrixXd xtx = x.transpose() * x;
    fit.std_errors =
        (xtx.ldlt().solve(Eigen::MatrixXd::Identity(k, k)).diagonal() * sigma2).cwiseSqrt();
    return fit;
}

/// Negative log-likelihood of a converged fit. For Poisson the constant is
/// sum(log y!); for Gaussian it is n/2 (log 2 pi + 1). Neither depends on the
/// coefficients, so dropping it shifts every model on the same data equally.
inline double neg_log_likelihood(const FittedModel& fit, bool include_constant = true)
{
    if (!fit.converged) throw NumericalError("model '" + fit.spec.label() + "' did not converge");
    if (fit.family == Family::poisson) {
        const double kernel = detail::poisson_kernel(fit.response, fit.fitted);
        return include_constant ? kernel + detail::log_factorial_sum(fit.response) : kernel;
    }
    const double nd = static_cast<double>(fit.n);
    const double kernel = 0.5 * nd * std::log(fit.rss / nd);
    return include_constant ? kernel + detail::gaussian_constant(fit.n) : kernel;
}

/// Pearson chi-square sum((y - mu)^2 / mu) for a Poisson fit.
inline double pearson_chi_square(const FittedModel& fit)
{
    if (!fit.converged) throw NumericalError("model '" + fit.spec.label() + "' did not converge");
    if (fit.family != Family::poisson)
        throw UsageError("Pearson chi-square is defined here for Poisson fits only");
    double s = 0.0;
    for (Eigen::Index i = 0; i < fit.fitted.size(); ++i) {
        const double mu = fit.fitted[i];
        if (!(mu > 0.0)) throw NumericalError("fitted mean is zero at row " + std::to_string(i + 1));
        const double r = fit.response[i] - mu;
        s += r * r / mu;
    }
    return s;
}

/// Builds the design for `spec` and fits it with the requested family.
inline FittedModel fit_model(const Dataset& data, const ModelSpec& spec, Family family,
                             bool standardize = true)
{
    const auto design = build_design_matrix(data, spec, standardize);
    const auto y = data.response_vector();
    if (family == Family::poisson) return fit_poisson_irls(design, y, {}, spec);
    return fit_gaussian_ols(design, y, 1e-10, spec);
}

} // namespace psel
