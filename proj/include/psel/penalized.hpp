#pragma once

#include <psel/data.hpp>
#include <psel/error.hpp>
#include <psel/glm.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

// Ridge and lasso on the plain residual sum of squares:
//
//     rss(beta) + w2 * sum_{j>=1} |beta_j|^gamma
//
// There is no 1/(2n) factor, so w2 is directly the complexity weight and the
// lasso soft-threshold level is w2 / 2. The intercept is never penalized; it
// is handled by centering and recovered afterwards.

namespace psel {

struct PathPoint {
    double w2 = 0.0;
    double gamma = 2.0;
    Eigen::VectorXd coefficients;     ///< design scale, intercept first
    Eigen::VectorXd raw_coefficients;
    double rss = 0.0;
    double penalty_value = 0.0;
    double objective = 0.0;           ///< rss + w2 * penalty_value
    int iterations = 0;               ///< coordinate-descent cycles (lasso)
};

struct LassoOptions {
    double tolerance = 1e-9; ///< max coefficient change over a full cycle
    int max_cycles = 10000;
};

namespace detail {

struct CenteredProblem {
    Eigen::MatrixXd x;      // slope columns, centered
    Eigen::VectorXd y;      // centered response
    Eigen::RowVectorXd x_mean;
    double y_mean = 0.0;
};

inline CenteredProblem center(const DesignMatrix& design, const Eigen::VectorXd& y)
{
    check_design_response(design, y);
    if (!y.allFinite()) throw DataError("response is not finite");
    const auto& full = design.matrix();
    CenteredProblem c;
    const auto slopes = full.cols() - 1;
    c.x_mean = full.rightCols(slopes).colwise().mean();
    c.x = full.rightCols(slopes).rowwise() - c.x_mean;
    c.y_mean = y.mean();
    c.y = y.array() - c.y_mean;
    return c;
}

inline void check_w2(double w2)
{
    if (!(w2 >= 0.0) || !std::isfinite(w2)) throw UsageError("penalty weight w2 must be finite and >= 0");
}

inline PathPoint finish_point(const DesignMatrix& design, const Eigen::VectorXd& y,
                              const CenteredProblem& c, const Eigen::VectorXd& slopes, double w2,
                              double gamma)
{
    PathPoint pt;
    pt.w2 = w2;
    pt.gamma = gamma;
    pt.coefficients.resize(slopes.size() + 1);
    pt.coefficients[0] = c.y_mean - c.x_mean.dot(slopes);
    pt.coefficients.tail(slopes.size()) = slopes;
    pt.raw_coefficients = design.to_raw_scale(pt.coefficients);
    pt.rss = (y - design.matrix() * pt.coefficients).squaredNorm();
    pt.penalty_value = gamma == 1.0 ? slopes.cwiseAbs().sum() : slopes.squaredNorm();
    pt.objective = pt.rss + w2 * pt.penalty_value;
    return pt;
}

inline double soft_threshold(double z, double t)
{
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

} // namespace detail

/// Closed-form ridge: (Xc'Xc + w2 I) b = Xc'yc on centered slope columns.
inline PathPoint fit_ridge(const DesignMatrix& design, const Eigen::VectorXd& y, double w2)
{
    detail::check_w2(w2);
    const auto c = detail::center(design, y);
    const auto k = c.x.cols();
    Eigen::VectorXd slopes(k);
    if (k > 0) {
        if (w2 == 0.0) {
            slopes = detail::full_rank_qr(c.x, 1e-10).solve(c.y);
        } else {
            Eigen::MatrixXd a = c.x.transpose() * c.x;
            a.diagonal().array() += w2;
            slopes = a.llt().solve(c.x.transpose() * c.y);
        }
    }
    return detail::finish_point(design, y, c, slopes, w2, 2.0);
}

/// Cyclic coordinate descent with soft-thresholding at w2 / 2. `warm_start`
/// (slopes only, no intercept) seeds the iteration.
inline PathPoint fit_lasso(const DesignMatrix& design, const Eigen::VectorXd& y, double w2,
                           const LassoOptions& opts = {},
                           const std::optional<Eigen::VectorXd>& warm_start = std::nullopt)
{
    detail::check_w2(w2);
    const auto c = detail::center(design, y);
    const auto k = c.x.cols();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    if (warm_start) {
        if (warm_start->size() != k) throw UsageError("warm start has the wrong length");
        b = *warm_start;
    }
    const Eigen::VectorXd norms = c.x.colwise().squaredNorm().transpose();
    const double threshold = 0.5 * w2;

    // Inactivity screen: every slope is zero once w2 >= 2 max_j |x_j'(y - ybar)|.
    // The relative allowance absorbs rounding in the inner products.
    const double w2_max = k > 0 ? 2.0 * (c.x.transpose() * c.y).cwiseAbs().maxCoeff() : 0.0;
    if (w2 >= w2_max * (1.0 - 1e-12)) {
        b.setZero();
        auto pt = detail::finish_point(design, y, c, b, w2, 1.0);
        pt.iterations = 0;
        return pt;
    }

    Eigen::VectorXd r = c.y - c.x * b;
    int cycle = 0;
    bool converged = k == 0;
    while (!converged) {
        if (cycle >= opts.max_cycles)
            throw NumericalError("lasso coordinate descent did not converge in " +
                                 std::to_string(opts.max_cycles) + " cycles (w2 = " +
                                 std::to_string(w2) + ")");
        ++cycle;
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) {
            if (norms[j] == 0.0) {
                b[j] = 0.0;
                continue;
            }
            const double rho = c.x.col(j).dot(r) + norms[j] * b[j];
            const double updated = detail::soft_threshold(rho, threshold) / norms[j];
            const double change = updated - b[j];
            if (change != 0.0) {
                r -= change * c.x.col(j);
                b[j] = updated;
                max_change = std::max(max_change, std::abs(change));
            }
        }
        converged = max_change < opts.tolerance;
    }
    auto pt = detail::finish_point(design, y, c, b, w2, 1.0);
    pt.iterations = cycle;
    return pt;
}

/// One point per w2 value of a strictly ascending, non-negative grid. Lasso
/// points are warm-started from the previous grid value.
inline std::vector<PathPoint> regularization_path(const DesignMatrix& design, const Eigen::VectorXd& y,
                                                  double gamma, std::span<const double> w2_grid,
                                                  const LassoOptions& opts = {})
{
    if (gamma != 1.0 && gamma != 2.0)
        throw UsageError("regularization path supports gamma = 1 (lasso) or 2 (ridge)");
    if (w2_grid.empty()) throw UsageError("w2 grid is empty");
    for (std::size_t i = 0; i < w2_grid.size(); ++i) {
        detail::check_w2(w2_grid[i]);
        if (i > 0 && !(w2_grid[i] > w2_grid[i - 1]))
            throw UsageError("w2 grid must be strictly ascending");
    }
    std::vector<PathPoint> path;
    path.reserve(w2_grid.size());
    std::optional<Eigen::VectorXd> warm;
    for (const double w2 : w2_grid) {
        if (gamma == 2.0) {
            path.push_back(fit_ridge(design, y, w2));
        } else {
            path.push_back(fit_lasso(design, y, w2, opts, warm));
            warm = path.back().coefficients.tail(path.back().coefficients.size() - 1);
        }
    }
    return path;
}

} // namespace psel
