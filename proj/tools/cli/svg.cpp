#include "cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace bsqz::cli {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string esc(const std::string& s) {
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

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

bool usable(double y, bool log_y) { return std::isfinite(y) && (!log_y || y > 0.0); }

std::vector<double> linear_ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag) {
            step = m * mag;
            break;
        }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
    return t;
}

}  // namespace

std::string line_chart(const ChartSpec& spec, const std::vector<Series>& series) {
    const double left = 78, right = 170, top = 40, bottom = 56;
    const double pw = spec.width - left - right, ph = spec.height - top - bottom;

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !usable(s.y[i], spec.log_y)) continue;
            const double y = spec.log_y ? std::log10(s.y[i]) : s.y[i];
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 - x0 <= 0) x0 -= 0.5, x1 += 0.5;
    if (spec.log_y) {
        y0 = std::floor(y0);
        y1 = std::ceil(y1);
        if (y1 <= y0) y1 = y0 + 1;
    } else {
        const double pad = y1 > y0 ? 0.05 * (y1 - y0) : std::max(1.0, std::abs(y0) * 0.1);
        y0 -= pad;
        y1 += pad;
    }
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

    std::string o;
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.width) + "\" height=\"" +
         std::to_string(spec.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o += "<text x=\"" + num(left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + esc(spec.title) + "</text>\n";
    o += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double t : linear_ticks(x0, x1)) {
        o += "<line x1=\"" + num(px(t)) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(px(t)) + "\" y2=\"" + num(top + ph + 5) +
             "\" stroke=\"black\"/>\n";
        o += "<text x=\"" + num(px(t)) + "\" y=\"" + num(top + ph + 18) + "\" text-anchor=\"middle\">" + tick_label(t) + "</text>\n";
    }
    std::vector<double> yt;
    if (spec.log_y) {
        const int step = std::max(1, static_cast<int>(std::ceil((y1 - y0) / 8)));
        for (double e = y0; e <= y1; e += step) yt.push_back(e);
    } else {
        yt = linear_ticks(y0, y1);
    }
    for (double t : yt) {
        o += "<line x1=\"" + num(left - 5) + "\" y1=\"" + num(py(t)) + "\" x2=\"" + num(left) + "\" y2=\"" + num(py(t)) +
             "\" stroke=\"black\"/>\n";
        o += "<line x1=\"" + num(left) + "\" y1=\"" + num(py(t)) + "\" x2=\"" + num(left + pw) + "\" y2=\"" + num(py(t)) +
             "\" stroke=\"#dddddd\"/>\n";
        const std::string label = spec.log_y ? "1e" + std::to_string(static_cast<int>(t)) : tick_label(t);
        o += "<text x=\"" + num(left - 8) + "\" y=\"" + num(py(t) + 4) + "\" text-anchor=\"end\">" + label + "</text>\n";
    }
    o += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(spec.height - 12.0) + "\" text-anchor=\"middle\">" + esc(spec.x_label) +
         "</text>\n";
    o += "<text transform=\"translate(16," + num(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" + esc(spec.y_label) +
         "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* colour = kPalette[si % (sizeof kPalette / sizeof *kPalette)];
        std::string pts;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !usable(s.y[i], spec.log_y)) continue;
            const double y = spec.log_y ? std::log10(s.y[i]) : s.y[i];
            if (!pts.empty()) pts += ' ';
            pts += num(px(s.x[i])) + "," + num(py(y));
        }
        if (!pts.empty())
            o += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        const double ly = top + 14 + 18.0 * static_cast<double>(si);
        o += "<line x1=\"" + num(left + pw + 12) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(left + pw + 34) + "\" y2=\"" + num(ly) +
             "\" stroke=\"" + colour + "\" stroke-width=\"2\"/>\n";
        o += "<text x=\"" + num(left + pw + 40) + "\" y=\"" + num(ly + 4) + "\">" + esc(s.label) + "</text>\n";
    }
    o += "</svg>\n";
    return o;
}

}  // namespace bsqz::cli
