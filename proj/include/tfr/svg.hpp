#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "tfr/csv.hpp"
#include "tfr/matrix.hpp"

namespace tfr {
namespace detail {

// Fixed two-decimal formatting for coordinates. Snapping to a 0.01 px
// grid keeps the generated markup byte-stable across platforms.
inline std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string hex_color(int r, int g, int b) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

// Diverging blue-white-red map over [-1, 1].
inline std::string diverging_color(double t) {
    t = std::clamp(t, -1.0, 1.0);
    const int lo[3] = {33, 102, 172}, mid[3] = {247, 247, 247}, hi[3] = {178, 24, 43};
    const int* a = t < 0.0 ? lo : hi;
    double w = std::fabs(t);
    int rgb[3];
    for (int i = 0; i < 3; ++i)
        rgb[i] = static_cast<int>(std::lround(mid[i] + (a[i] - mid[i]) * w));
    return hex_color(rgb[0], rgb[1], rgb[2]);
}

// Tick step of the form {1, 2, 5} * 10^k giving at most `max_ticks` ticks.
inline double nice_step(double range, int max_ticks) {
    if (!(range > 0.0)) return 1.0;
    double raw = range / max_ticks;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) return m * mag;
    return 10.0 * mag;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

inline void open_svg(std::string& s, double w, double h) {
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(w) + "\" height=\"" + px(h) +
         "\" viewBox=\"0 0 " + px(w) + " " + px(h) + "\" font-family=\"monospace\">\n";
    s += "<rect width=\"" + px(w) + "\" height=\"" + px(h) + "\" fill=\"#ffffff\"/>\n";
}

inline void text_at(std::string& s, double x, double y, const std::string& msg, int size,
                    const std::string& anchor = "start") {
    s += "<text x=\"" + px(x) + "\" y=\"" + px(y) + "\" font-size=\"" + std::to_string(size) +
         "\" text-anchor=\"" + anchor + "\" fill=\"#222222\">" + xml_escape(msg) + "</text>\n";
}

}  // namespace detail

struct LineSeries {
    std::string name;
    std::vector<double> xs;
    std::vector<double> ys;
};

// Correlation-style heatmap with a fixed [-1, 1] color scale.
inline std::string svg_heatmap(const Matrix& m, const std::string& title) {
    std::size_t n_rows = m.rows(), n_cols = m.cols();
    double cell = std::min(6.0, std::max(1.5, 720.0 / static_cast<double>(std::max(n_rows, n_cols))));
    double left = 60.0, top = 40.0;
    double w = left + cell * static_cast<double>(n_cols) + 80.0;
    double h = top + cell * static_cast<double>(n_rows) + 30.0;
    std::string s;
    detail::open_svg(s, w, h);
    detail::text_at(s, left, 24.0, title, 14);
    for (std::size_t r = 0; r < n_rows; ++r)
        for (std::size_t c = 0; c < n_cols; ++c) {
            s += "<rect x=\"" + detail::px(left + cell * static_cast<double>(c)) + "\" y=\"" +
                 detail::px(top + cell * static_cast<double>(r)) + "\" width=\"" + detail::px(cell) +
                 "\" height=\"" + detail::px(cell) + "\" fill=\"" +
                 detail::diverging_color(m(r, c)) + "\"/>\n";
        }
    // colorbar
    double bar_x = left + cell * static_cast<double>(n_cols) + 20.0;
    int steps = 40;
    double bar_h = cell * static_cast<double>(n_rows);
    for (int i = 0; i < steps; ++i) {
        double t = 1.0 - 2.0 * (i + 0.5) / steps;
        s += "<rect x=\"" + detail::px(bar_x) + "\" y=\"" + detail::px(top + bar_h * i / steps) +
             "\" width=\"12.00\" height=\"" + detail::px(bar_h / steps + 0.5) + "\" fill=\"" +
             detail::diverging_color(t) + "\"/>\n";
    }
    detail::text_at(s, bar_x + 16.0, top + 8.0, "+1", 11);
    detail::text_at(s, bar_x + 16.0, top + bar_h / 2.0 + 4.0, "0", 11);
    detail::text_at(s, bar_x + 16.0, top + bar_h, "-1", 11);
    s += "</svg>\n";
    return s;
}

// Line chart with shared axes; used for optimization convergence.
inline std::string svg_line_chart(const std::vector<LineSeries>& series, const std::string& title,
                                  const std::string& x_label, const std::string& y_label) {
    static const char* palette[] = {"#1b6ca8", "#c2571a", "#3a8f4d", "#8a4f9e",
                                    "#a8201a", "#6b6b6b"};
    double lo_x = 0.0, hi_x = 1.0, lo_y = 0.0, hi_y = 1.0;
    bool has = false;
    for (const LineSeries& ls : series)
        for (std::size_t i = 0; i < ls.xs.size(); ++i) {
            if (!has) {
                lo_x = hi_x = ls.xs[i];
                lo_y = hi_y = ls.ys[i];
                has = true;
            }
            lo_x = std::min(lo_x, ls.xs[i]);
            hi_x = std::max(hi_x, ls.xs[i]);
            lo_y = std::min(lo_y, ls.ys[i]);
            hi_y = std::max(hi_y, ls.ys[i]);
        }
    if (hi_x <= lo_x) hi_x = lo_x + 1.0;
    if (hi_y <= lo_y) hi_y = lo_y + 1.0;
    double pad_y = 0.05 * (hi_y - lo_y);
    lo_y -= pad_y;
    hi_y += pad_y;
    double left = 70.0, top = 40.0, pw = 520.0, ph = 300.0;
    double w = left + pw + 160.0, h = top + ph + 60.0;
    auto sx = [&](double v) { return left + pw * (v - lo_x) / (hi_x - lo_x); };
    auto sy = [&](double v) { return top + ph * (1.0 - (v - lo_y) / (hi_y - lo_y)); };
    std::string s;
    detail::open_svg(s, w, h);
    detail::text_at(s, left, 24.0, title, 14);
    s += "<rect x=\"" + detail::px(left) + "\" y=\"" + detail::px(top) + "\" width=\"" +
         detail::px(pw) + "\" height=\"" + detail::px(ph) +
         "\" fill=\"none\" stroke=\"#444444\"/>\n";
    double step_x = detail::nice_step(hi_x - lo_x, 8);
    for (double v = std::ceil(lo_x / step_x) * step_x; v <= hi_x + 1e-9; v += step_x) {
        detail::text_at(s, sx(v), top + ph + 18.0, format_double(v), 11, "middle");
        s += "<line x1=\"" + detail::px(sx(v)) + "\" y1=\"" + detail::px(top) + "\" x2=\"" +
             detail::px(sx(v)) + "\" y2=\"" + detail::px(top + ph) +
             "\" stroke=\"#dddddd\"/>\n";
    }
    double step_y = detail::nice_step(hi_y - lo_y, 6);
    for (double v = std::ceil(lo_y / step_y) * step_y; v <= hi_y + 1e-9; v += step_y) {
        detail::text_at(s, left - 8.0, sy(v) + 4.0, format_double(v), 11, "end");
        s += "<line x1=\"" + detail::px(left) + "\" y1=\"" + detail::px(sy(v)) + "\" x2=\"" +
             detail::px(left + pw) + "\" y2=\"" + detail::px(sy(v)) + "\" stroke=\"#dddddd\"/>\n";
    }
    detail::text_at(s, left + pw / 2.0, top + ph + 40.0, x_label, 12, "middle");
    detail::text_at(s, 16.0, top - 12.0, y_label, 12);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const LineSeries& ls = series[k];
        const char* color = palette[k % 6];
        std::string pts;
        for (std::size_t i = 0; i < ls.xs.size(); ++i)
            pts += detail::px(sx(ls.xs[i])) + "," + detail::px(sy(ls.ys[i])) + " ";
        s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
             "\" stroke-width=\"1.8\"/>\n";
        double ly = top + 16.0 + 16.0 * static_cast<double>(k);
        s += "<line x1=\"" + detail::px(left + pw + 12.0) + "\" y1=\"" + detail::px(ly - 4.0) +
             "\" x2=\"" + detail::px(left + pw + 34.0) + "\" y2=\"" + detail::px(ly - 4.0) +
             "\" stroke=\"" + color + "\" stroke-width=\"1.8\"/>\n";
        detail::text_at(s, left + pw + 40.0, ly, ls.name, 11);
    }
    s += "</svg>\n";
    return s;
}

// Horizontal bar chart, one bar per label, drawn in the given order.
inline std::string svg_bar_chart(const std::vector<std::string>& labels,
                                 const std::vector<double>& values, const std::string& title,
                                 const std::string& x_label) {
    double hi = 0.0;
    for (double v : values) hi = std::max(hi, v);
    if (hi <= 0.0) hi = 1.0;
    double left = 190.0, top = 40.0, pw = 430.0, row = 18.0;
    double ph = row * static_cast<double>(labels.size());
    double w = left + pw + 80.0, h = top + ph + 60.0;
    std::string s;
    detail::open_svg(s, w, h);
    detail::text_at(s, left, 24.0, title, 14);
    double step = detail::nice_step(hi, 6);
    for (double v = 0.0; v <= hi + 1e-9; v += step) {
        double x = left + pw * v / hi;
        s += "<line x1=\"" + detail::px(x) + "\" y1=\"" + detail::px(top) + "\" x2=\"" +
             detail::px(x) + "\" y2=\"" + detail::px(top + ph) + "\" stroke=\"#dddddd\"/>\n";
        detail::text_at(s, x, top + ph + 16.0, format_double(v), 11, "middle");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        double y = top + row * static_cast<double>(i);
        s += "<rect x=\"" + detail::px(left) + "\" y=\"" + detail::px(y + 3.0) + "\" width=\"" +
             detail::px(pw * values[i] / hi) + "\" height=\"" + detail::px(row - 6.0) +
             "\" fill=\"#1b6ca8\"/>\n";
        detail::text_at(s, left - 8.0, y + row - 5.0, labels[i], 11, "end");
        detail::text_at(s, left + pw * values[i] / hi + 6.0, y + row - 5.0, format_double(values[i]),
                        10);
    }
    detail::text_at(s, left + pw / 2.0, top + ph + 40.0, x_label, 12, "middle");
    s += "</svg>\n";
    return s;
}

}  // namespace tfr
