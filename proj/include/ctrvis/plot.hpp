#pragma once

#include <string>
#include <vector>

namespace ctrvis {

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotAxes {
    std::string title;
    std::string x_label;
    std::string y_label;
    double x_min = 0.0, x_max = 1.0;
    double y_min = 0.0, y_max = 1.0;
};

/// Standalone SVG documents. Lines join points in the given order.
std::string svg_line_plot(const PlotAxes& axes, const std::vector<PlotSeries>& series);
std::string svg_scatter_plot(const PlotAxes& axes, const PlotSeries& points);

/// Axis range covering the values with a small margin; degenerate ranges widen.
std::pair<double, double> padded_range(const std::vector<double>& values);

/// Two-column CSV (header x_name,y_name), values printed with %.17g.
std::string xy_csv(const std::string& x_name, const std::string& y_name, const std::vector<double>& x,
                   const std::vector<double>& y);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace ctrvis
