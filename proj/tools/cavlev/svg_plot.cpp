#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace cavlev::cli {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace

void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         const std::vector<PlotSeries>& series)
{
    const double width = 860, height = 560;
    const double ml = 90, mr = 30, mt = 50, mb = 70;

    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    for (const auto& s : series) {
        for (double v : s.x) {
            x_min = std::min(x_min, v);
            x_max = std::max(x_max, v);
        }
        for (double v : s.y) {
            y_min = std::min(y_min, v);
            y_max = std::max(y_max, v);
        }
    }
    if (!(x_max > x_min)) {
        x_min -= 1.0;
        x_max += 1.0;
    }
    if (!(y_max > y_min)) {
        y_min -= 1.0;
        y_max += 1.0;
    }
    const double y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    const auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (width - ml - mr); };
    const auto py = [&](double y) {
        return height - mb - (y - y_min) / (y_max - y_min) * (height - mt - mb);
    };

    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write plot file: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"18\">"
        << title << "</text>\n";

    // Axes with 5 ticks per side.
    out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << width - ml - mr
        << "\" height=\"" << height - mt - mb << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double xv = x_min + (x_max - x_min) * t / 5;
        const double yv = y_min + (y_max - y_min) * t / 5;
        out << "<line x1=\"" << px(xv) << "\" y1=\"" << height - mb << "\" x2=\"" << px(xv)
            << "\" y2=\"" << height - mb + 6 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << px(xv) << "\" y=\"" << height - mb + 22
            << "\" text-anchor=\"middle\" font-size=\"12\">" << fmt(xv) << "</text>\n";
        out << "<line x1=\"" << ml - 6 << "\" y1=\"" << py(yv) << "\" x2=\"" << ml << "\" y2=\""
            << py(yv) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << ml - 10 << "\" y=\"" << py(yv) + 4
            << "\" text-anchor=\"end\" font-size=\"12\">" << fmt(yv) << "</text>\n";
    }
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 18
        << "\" text-anchor=\"middle\" font-size=\"14\">" << x_label << "</text>\n";
    out << "<text x=\"22\" y=\"" << height / 2
        << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 22 " << height / 2
        << ")\">" << y_label << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i)
            out << fmt(px(series[s].x[i])) << "," << fmt(py(series[s].y[i])) << " ";
        out << "\"/>\n";
        if (!series[s].label.empty() && s < 12) {
            out << "<text x=\"" << width - mr - 8 << "\" y=\"" << mt + 18 + 16 * static_cast<double>(s)
                << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">"
                << series[s].label << "</text>\n";
        }
    }
    out << "</svg>\n";
}

} // namespace cavlev::cli
