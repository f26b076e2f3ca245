// Minimal deterministic SVG line plots: axes, ticks, legend, one polyline per
// series. Output depends only on the input, never on locale or clock.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cogflow/csv.hpp"
#include "cogflow/errors.hpp"

namespace cogflow {

struct PlotSeries {
    std::string label;
    std::vector<double> xs;
    std::vector<double> ys;
};

struct PlotAxes {
    bool x_log = false;
    bool y_log = false;
    std::string x_label;
    std::string y_label;
};

namespace detail {

inline std::string format_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.8g", v);
    return std::string(buf);
}

inline std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
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

struct AxisScale {
    double lo = 0.0;
    double hi = 1.0;
    bool log = false;

    double transform(double v) const { return log ? std::log10(v) : v; }
    double back(double u) const { return log ? std::pow(10.0, u) : u; }
    // Fraction of the axis from lo to hi, in transformed space.
    double fraction(double v) const { return (transform(v) - lo) / (hi - lo); }
};

inline AxisScale make_scale(double mn, double mx, bool log) {
    AxisScale scale;
    scale.log = log;
    double lo = log ? std::log10(mn) : mn;
    double hi = log ? std::log10(mx) : mx;
    if (hi - lo < 1e-12) {  // flat data still needs a nonempty range
        lo -= 0.5;
        hi += 0.5;
    } else {
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
    scale.lo = lo;
    scale.hi = hi;
    return scale;
}

}  // namespace detail

inline std::string render_svg_lineplot(const std::vector<PlotSeries>& series,
                                       const PlotAxes& axes, const std::string& title = "") {
    if (series.empty()) throw ContractError("plot needs at least one series");
    for (const auto& s : series) {
        if (s.xs.size() != s.ys.size())
            throw ContractError("series '" + s.label + "' has mismatched x/y lengths");
        if (s.xs.empty()) throw ContractError("series '" + s.label + "' is empty");
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            if (axes.x_log && !(s.xs[i] > 0.0))
                throw DomainError("log x axis requires positive data in series '" + s.label +
                                  "'");
            if (axes.y_log && !(s.ys[i] > 0.0))
                throw DomainError("log y axis requires positive data in series '" + s.label +
                                  "'");
        }
    }

    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    for (const auto& s : series) {
        for (double x : s.xs) {
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
        }
        for (double y : s.ys) {
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    }
    const detail::AxisScale sx = detail::make_scale(x_min, x_max, axes.x_log);
    const detail::AxisScale sy = detail::make_scale(y_min, y_max, axes.y_log);

    const double width = 720.0, height = 480.0;
    const double ml = 70.0, mr = 20.0, mt = title.empty() ? 20.0 : 40.0, mb = 50.0;
    const double pw = width - ml - mr, ph = height - mt - mb;
    auto px = [&](double v) { return ml + sx.fraction(v) * pw; };
    auto py = [&](double v) { return mt + (1.0 - sy.fraction(v)) * ph; };

    static const char* kPalette[] = {"#1f6fb2", "#d1495b", "#3a7d44", "#8c5383",
                                     "#c98a1f", "#4f6d7a"};
    constexpr int kPaletteSize = 6;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"480\" "
           "viewBox=\"0 0 720 480\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"720\" height=\"480\" fill=\"#ffffff\"/>\n";
    if (!title.empty())
        svg += "<text x=\"360\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"16\">" +
               detail::escape_xml(title) + "</text>\n";

    // frame
    svg += "<rect x=\"" + detail::format_coord(ml) + "\" y=\"" + detail::format_coord(mt) +
           "\" width=\"" + detail::format_coord(pw) + "\" height=\"" + detail::format_coord(ph) +
           "\" fill=\"none\" stroke=\"#333333\"/>\n";

    // ticks: 5 per axis, evenly spaced in transformed coordinates
    const int n_ticks = 5;
    for (int i = 0; i < n_ticks; ++i) {
        const double f = static_cast<double>(i) / (n_ticks - 1);
        const double ux = sx.lo + f * (sx.hi - sx.lo);
        const double xv = sx.back(ux);
        const double xp = ml + f * pw;
        svg += "<line x1=\"" + detail::format_coord(xp) + "\" y1=\"" +
               detail::format_coord(mt + ph) + "\" x2=\"" + detail::format_coord(xp) +
               "\" y2=\"" + detail::format_coord(mt + ph + 5.0) + "\" stroke=\"#333333\"/>\n";
        svg += "<text x=\"" + detail::format_coord(xp) + "\" y=\"" +
               detail::format_coord(mt + ph + 18.0) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               format_axis_value(xv) + "</text>\n";

        const double uy = sy.lo + f * (sy.hi - sy.lo);
        const double yv = sy.back(uy);
        const double yp = mt + (1.0 - f) * ph;
        svg += "<line x1=\"" + detail::format_coord(ml - 5.0) + "\" y1=\"" +
               detail::format_coord(yp) + "\" x2=\"" + detail::format_coord(ml) + "\" y2=\"" +
               detail::format_coord(yp) + "\" stroke=\"#333333\"/>\n";
        svg += "<text x=\"" + detail::format_coord(ml - 8.0) + "\" y=\"" +
               detail::format_coord(yp + 4.0) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               format_axis_value(yv) + "</text>\n";
    }

    if (!axes.x_label.empty())
        svg += "<text x=\"" + detail::format_coord(ml + pw / 2.0) + "\" y=\"" +
               detail::format_coord(height - 12.0) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
               detail::escape_xml(axes.x_label) + "</text>\n";
    if (!axes.y_label.empty())
        svg += "<text x=\"16\" y=\"" + detail::format_coord(mt + ph / 2.0) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
               "transform=\"rotate(-90 16 " +
               detail::format_coord(mt + ph / 2.0) + ")\">" + detail::escape_xml(axes.y_label) +
               "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % kPaletteSize];
        std::string points;
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            if (i > 0) points += ' ';
            points += detail::format_coord(px(s.xs[i])) + "," +
                      detail::format_coord(py(s.ys[i]));
        }
        svg += "<polyline data-series=\"" + detail::escape_xml(s.label) + "\" points=\"" +
               points + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
    }

    // legend, top-right inside the frame
    for (std::size_t si = 0; si < series.size(); ++si) {
        const char* color = kPalette[si % kPaletteSize];
        const double ly = mt + 14.0 + 16.0 * static_cast<double>(si);
        svg += "<line x1=\"" + detail::format_coord(ml + pw - 110.0) + "\" y1=\"" +
               detail::format_coord(ly) + "\" x2=\"" + detail::format_coord(ml + pw - 90.0) +
               "\" y2=\"" + detail::format_coord(ly) + "\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + detail::format_coord(ml + pw - 84.0) + "\" y=\"" +
               detail::format_coord(ly + 4.0) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" +
               detail::escape_xml(series[si].label) + "</text>\n";
    }

    svg += "</svg>\n";
    return svg;
}

inline void emit_svg_lineplot(const std::vector<PlotSeries>& series, const PlotAxes& axes,
                              const std::filesystem::path& path, const std::string& title = "") {
    write_text_file(path, render_svg_lineplot(series, axes, title));
}

}  // namespace cogflow
