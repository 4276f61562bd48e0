#include "ctrvis/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ctrvis/error.hpp"

namespace ctrvis {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

struct Frame {
    PlotAxes axes;
    double sx(double x) const {
        return kLeft + (x - axes.x_min) / (axes.x_max - axes.x_min) * (kWidth - kLeft - kRight);
    }
    double sy(double y) const {
        return kHeight - kBottom - (y - axes.y_min) / (axes.y_max - axes.y_min) * (kHeight - kTop - kBottom);
    }
};

void open_frame(std::ostringstream& os, const Frame& f) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(f.axes.title)
       << "</text>\n";
    const double x0 = f.sx(f.axes.x_min), x1 = f.sx(f.axes.x_max), y0 = f.sy(f.axes.y_min), y1 = f.sy(f.axes.y_max);
    os << "<rect x=\"" << num(x0) << "\" y=\"" << num(y1) << "\" width=\"" << num(x1 - x0) << "\" height=\""
       << num(y0 - y1) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = f.axes.x_min + (f.axes.x_max - f.axes.x_min) * i / 5.0;
        const double yv = f.axes.y_min + (f.axes.y_max - f.axes.y_min) * i / 5.0;
        os << "<line x1=\"" << num(f.sx(xv)) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(f.sx(xv)) << "\" y2=\""
           << num(y0 + 5) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(f.sx(xv)) << "\" y=\"" << num(y0 + 18) << "\" text-anchor=\"middle\">" << tick(xv)
           << "</text>\n";
        os << "<line x1=\"" << num(x0 - 5) << "\" y1=\"" << num(f.sy(yv)) << "\" x2=\"" << num(x0) << "\" y2=\""
           << num(f.sy(yv)) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(x0 - 8) << "\" y=\"" << num(f.sy(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
           << "</text>\n";
    }
    os << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(kHeight - 12) << "\" text-anchor=\"middle\">"
       << escape(f.axes.x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << num((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << num((y0 + y1) / 2) << ")\">" << escape(f.axes.y_label) << "</text>\n";
}

}  // namespace

std::string svg_line_plot(const PlotAxes& axes, const std::vector<PlotSeries>& series) {
    std::ostringstream os;
    const Frame f{axes};
    open_frame(os, f);
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kColors[s % std::size(kColors)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            os << (i ? " " : "") << num(f.sx(series[s].x[i])) << "," << num(f.sy(series[s].y[i]));
        }
        os << "\"/>\n";
        const double ly = kTop + 14 + 16 * static_cast<double>(s);
        os << "<line x1=\"" << num(kWidth - 150) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(kWidth - 130)
           << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << num(kWidth - 125) << "\" y=\"" << num(ly + 4) << "\">" << escape(series[s].name)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string svg_scatter_plot(const PlotAxes& axes, const PlotSeries& points) {
    std::ostringstream os;
    const Frame f{axes};
    open_frame(os, f);
    os << "<g fill=\"" << kColors[0] << "\" fill-opacity=\"0.6\">\n";
    for (std::size_t i = 0; i < points.x.size(); ++i) {
        os << "<circle cx=\"" << num(f.sx(points.x[i])) << "\" cy=\"" << num(f.sy(points.y[i])) << "\" r=\"2\"/>\n";
    }
    os << "</g>\n</svg>\n";
    return os.str();
}

std::pair<double, double> padded_range(const std::vector<double>& values) {
    if (values.empty()) return {0.0, 1.0};
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    double a = *lo, b = *hi;
    if (!(b > a)) {
        const double pad = std::max(1e-9, std::abs(a) * 0.05 + 0.5 * (a == 0.0));
        return {a - pad, b + pad};
    }
    const double pad = 0.05 * (b - a);
    return {a - pad, b + pad};
}

std::string xy_csv(const std::string& x_name, const std::string& y_name, const std::vector<double>& x,
                   const std::vector<double>& y) {
    std::string out = x_name + "," + y_name + "\n";
    char buf[80];
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", x[i], y[i]);
        out += buf;
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << content;
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

}  // namespace ctrvis
