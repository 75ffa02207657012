#pragma once

#include <psel/pareto.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace psel {

struct PlotOptions {
    int width = 760;
    int height = 480;
    std::string title = "Model fit vs. model complexity";
    std::string x_label = "f2: model complexity (no. parameters)";
    std::string y_label = "f1: model fit (negative log-likelihood)";
    std::optional<std::string> highlight_id;    ///< model to ring
    std::string highlight_label = "selected";   ///< legend text for the ring
};

namespace detail {

inline std::string svg_num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

inline double nice_step(double range, int target_ticks)
{
    if (!(range > 0.0)) return 1.0;
    const double raw = range / target_ticks;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    const double nice = norm < 1.5 ? 1.0 : norm < 3.0 ? 2.0 : norm < 7.0 ? 5.0 : 10.0;
    return nice * mag;
}

inline std::vector<double> ticks(double lo, double hi, double step)
{
    std::vector<double> out;
    for (double t = std::ceil(lo / step - 1e-9) * step; t <= hi + 1e-9 * step; t += step)
        out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    return out;
}

inline std::string tick_text(double v, double step)
{
    char buf[32];
    const int digits = step >= 1.0 ? 0 : static_cast<int>(std::ceil(-std::log10(step) - 1e-9));
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

} // namespace detail

/// Renders the frontier report as a standalone SVG scatter plot: f2 across,
/// f1 up. Dominated points are open circles, frontier points are filled and
/// joined by a polyline. Output depends only on the inputs.
inline std::string render_frontier_svg(const FrontierReport& report, const PlotOptions& opt = {})
{
    const double left = 84, right = 190, top = 44, bottom = 64;
    const double pw = opt.width - left - right;
    const double ph = opt.height - top - bottom;

    double x_lo = report.all_points.front().f2, x_hi = x_lo;
    double y_lo = report.all_points.front().f1, y_hi = y_lo;
    for (const auto& p : report.all_points) {
        x_lo = std::min(x_lo, p.f2);
        x_hi = std::max(x_hi, p.f2);
        y_lo = std::min(y_lo, p.f1);
        y_hi = std::max(y_hi, p.f1);
    }
    const double x_step = detail::nice_step(std::max(x_hi - x_lo, 1.0), 8);
    const double y_step = detail::nice_step(std::max(y_hi - y_lo, 1e-9), 6);
    x_lo = std::floor(x_lo / x_step) * x_step - 0.5 * x_step;
    x_hi = std::ceil(x_hi / x_step) * x_step + 0.5 * x_step;
    y_lo = std::floor(y_lo / y_step) * y_step;
    y_hi = std::ceil(y_hi / y_step) * y_step;
    if (y_hi == y_lo) y_hi = y_lo + y_step;

    const auto sx = [&](double v) { return left + (v - x_lo) / (x_hi - x_lo) * pw; };
    const auto sy = [&](double v) { return top + (y_hi - v) / (y_hi - y_lo) * ph; };
    using detail::svg_num;

    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opt.width) +
         "\" height=\"" + std::to_string(opt.height) + "\" viewBox=\"0 0 " +
         std::to_string(opt.width) + " " + std::to_string(opt.height) +
         "\" font-family=\"Helvetica, Arial, sans-serif\" font-size=\"12\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(opt.width) + "\" height=\"" +
         std::to_string(opt.height) + "\" fill=\"#ffffff\"/>\n";
    s += "<text class=\"title\" x=\"" + svg_num(left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
         detail::xml_escape(opt.title) + "</text>\n";

    // axes
    s += "<g class=\"axes\" stroke=\"#000000\" stroke-width=\"1\">\n";
    s += "<line x1=\"" + svg_num(left) + "\" y1=\"" + svg_num(top + ph) + "\" x2=\"" + svg_num(left + pw) +
         "\" y2=\"" + svg_num(top + ph) + "\"/>\n";
    s += "<line x1=\"" + svg_num(left) + "\" y1=\"" + svg_num(top) + "\" x2=\"" + svg_num(left) +
         "\" y2=\"" + svg_num(top + ph) + "\"/>\n";
    s += "</g>\n<g class=\"ticks\" fill=\"#000000\">\n";
    for (const double t : detail::ticks(x_lo, x_hi, x_step)) {
        const double x = sx(t);
        s += "<line x1=\"" + svg_num(x) + "\" y1=\"" + svg_num(top + ph) + "\" x2=\"" + svg_num(x) +
             "\" y2=\"" + svg_num(top + ph + 5) + "\" stroke=\"#000000\"/>\n";
        s += "<text x=\"" + svg_num(x) + "\" y=\"" + svg_num(top + ph + 19) + "\" text-anchor=\"middle\">" +
             detail::tick_text(t, x_step) + "</text>\n";
    }
    for (const double t : detail::ticks(y_lo, y_hi, y_step)) {
        const double y = sy(t);
        s += "<line x1=\"" + svg_num(left - 5) + "\" y1=\"" + svg_num(y) + "\" x2=\"" + svg_num(left) +
             "\" y2=\"" + svg_num(y) + "\" stroke=\"#000000\"/>\n";
        s += "<text x=\"" + svg_num(left - 8) + "\" y=\"" + svg_num(y + 4) + "\" text-anchor=\"end\">" +
             detail::tick_text(t, y_step) + "</text>\n";
    }
    s += "</g>\n";
    s += "<text class=\"x-label\" x=\"" + svg_num(left + pw / 2) + "\" y=\"" + svg_num(opt.height - 18.0) +
         "\" text-anchor=\"middle\">" + detail::xml_escape(opt.x_label) + "</text>\n";
    s += "<text class=\"y-label\" x=\"20\" y=\"" + svg_num(top + ph / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " + svg_num(top + ph / 2) + ")\">" +
         detail::xml_escape(opt.y_label) + "</text>\n";

    // frontier line
    s += "<polyline class=\"frontier-line\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < report.frontier.size(); ++k) {
        if (k) s += ' ';
        s += svg_num(sx(report.frontier[k].f2)) + "," + svg_num(sy(report.frontier[k].f1));
    }
    s += "\"/>\n";

    // points, in input order
    s += "<g class=\"points\">\n";
    for (const auto& p : report.all_points) {
        const bool pareto = report.on_frontier(p.model_id);
        s += "<circle class=\"point " + std::string(pareto ? "frontier" : "dominated") + "\" cx=\"" +
             svg_num(sx(p.f2)) + "\" cy=\"" + svg_num(sy(p.f1)) + "\" r=\"4.5\"" +
             (pareto ? " fill=\"#1f77b4\" stroke=\"#1f77b4\"" : " fill=\"none\" stroke=\"#444444\"") +
             "><title>" + detail::xml_escape(p.model_id) + " (f1=" + svg_num(p.f1) + ", f2=" +
             svg_num(p.f2) + ")</title></circle>\n";
    }
    s += "</g>\n";

    if (opt.highlight_id) {
        for (const auto& p : report.all_points) {
            if (p.model_id != *opt.highlight_id) continue;
            s += "<circle class=\"highlight\" cx=\"" + svg_num(sx(p.f2)) + "\" cy=\"" + svg_num(sy(p.f1)) +
                 "\" r=\"9\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"><title>" +
                 detail::xml_escape(opt.highlight_label + ": " + p.model_id) + "</title></circle>\n";
            break;
        }
    }

    // legend
    const double lx = left + pw + 20;
    double ly = top + 10;
    s += "<g class=\"legend\">\n";
    s += "<circle cx=\"" + svg_num(lx) + "\" cy=\"" + svg_num(ly) +
         "\" r=\"4.5\" fill=\"#1f77b4\" stroke=\"#1f77b4\"/><text x=\"" + svg_num(lx + 12) + "\" y=\"" +
         svg_num(ly + 4) + "\">Pareto optimal (" + std::to_string(report.frontier.size()) + ")</text>\n";
    ly += 20;
    s += "<circle cx=\"" + svg_num(lx) + "\" cy=\"" + svg_num(ly) +
         "\" r=\"4.5\" fill=\"none\" stroke=\"#444444\"/><text x=\"" + svg_num(lx + 12) + "\" y=\"" +
         svg_num(ly + 4) + "\">dominated (" + std::to_string(report.dominated_count) + ")</text>\n";
    if (opt.highlight_id) {
        ly += 20;
        s += "<circle cx=\"" + svg_num(lx) + "\" cy=\"" + svg_num(ly) +
             "\" r=\"7\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"/><text x=\"" + svg_num(lx + 12) +
             "\" y=\"" + svg_num(ly + 4) + "\">" + detail::xml_escape(opt.highlight_label) + "</text>\n";
    }
    s += "</g>\n</svg>\n";
    return s;
}

} // namespace psel
