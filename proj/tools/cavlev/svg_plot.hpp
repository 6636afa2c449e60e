#pragma once

#include <string>
#include <vector>

namespace cavlev::cli {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal deterministic SVG line plot; keeps the numerical core free of any
/// plotting dependency.
void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         const std::vector<PlotSeries>& series);

} // namespace cavlev::cli
