#pragma once

#include <string>
#include <vector>

namespace bsqz::cli {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    int width = 640;
    int height = 420;
};

/// Standalone SVG with axes, ticks, one polyline per series and a legend.
/// Non-finite points (and non-positive ones on a log axis) are skipped.
std::string line_chart(const ChartSpec& spec, const std::vector<Series>& series);

}  // namespace bsqz::cli
