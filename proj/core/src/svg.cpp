#include "nvi/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace nvi {

namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 520.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string xlabel, std::string ylabel, bool logx, bool logy)
    : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)),
      logx_(logx), logy_(logy) {}

void SvgPlot::add_series(const std::string& name, const std::vector<double>& xs,
                         const std::vector<double>& ys) {
    series_.push_back({name, xs, ys, false});
}

void SvgPlot::add_reference(const std::string& name, double x0, double y0, double x1, double y1) {
    series_.push_back({name, {x0, x1}, {y0, y1}, true});
}

void SvgPlot::annotate(const std::string& text) { annotations_.push_back(text); }

std::string SvgPlot::render() const {
    auto tx = [&](double v) { return logx_ ? std::log10(std::max(v, 1e-300)) : v; };
    auto ty = [&](double v) { return logy_ ? std::log10(std::max(v, 1e-300)) : v; };

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series_) {
        for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
            if (logx_ && s.xs[i] <= 0.0) continue;
            if (logy_ && s.ys[i] <= 0.0) continue;
            xmin = std::min(xmin, tx(s.xs[i]));
            xmax = std::max(xmax, tx(s.xs[i]));
            ymin = std::min(ymin, ty(s.ys[i]));
            ymax = std::max(ymax, ty(s.ys[i]));
        }
    }
    if (!(xmin < xmax)) {
        xmin -= 1.0;
        xmax = xmin + 2.0;
    }
    if (!(ymin < ymax)) {
        ymin -= 1.0;
        ymax = ymin + 2.0;
    }
    const double xpad = 0.03 * (xmax - xmin);
    const double ypad = 0.06 * (ymax - ymin);
    xmin -= xpad;
    xmax += xpad;
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double v) {
        return kLeft + (tx(v) - xmin) / (xmax - xmin) * (kWidth - kLeft - kRight);
    };
    auto py = [&](double v) {
        return kHeight - kBottom - (ty(v) - ymin) / (ymax - ymin) * (kHeight - kTop - kBottom);
    };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
       << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"16\">"
       << title_ << "</text>\n";

    // axes
    os << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight
       << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
       << kHeight - kBottom << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 14
       << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel_ << "</text>\n";
    os << "<text x=\"18\" y=\"" << kHeight / 2
       << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 " << kHeight / 2
       << ")\">" << ylabel_ << "</text>\n";

    // ticks
    const int nticks = 5;
    for (int i = 0; i <= nticks; ++i) {
        const double fx = xmin + (xmax - xmin) * i / nticks;
        const double vx = logx_ ? std::pow(10.0, fx) : fx;
        const double x = kLeft + (fx - xmin) / (xmax - xmin) * (kWidth - kLeft - kRight);
        os << "<line x1=\"" << x << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << x << "\" y2=\""
           << kHeight - kBottom + 5 << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << x << "\" y=\"" << kHeight - kBottom + 18
           << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(vx) << "</text>\n";
        const double fy = ymin + (ymax - ymin) * i / nticks;
        const double vy = logy_ ? std::pow(10.0, fy) : fy;
        const double y = kHeight - kBottom - (fy - ymin) / (ymax - ymin) * (kHeight - kTop - kBottom);
        os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << y << "\" x2=\"" << kLeft << "\" y2=\"" << y
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4
           << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(vy) << "</text>\n";
    }

    // series
    int color = 0;
    double legend_y = kTop + 6.0;
    for (const auto& s : series_) {
        const char* c = kPalette[color % 10];
        os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.6\"";
        if (s.dashed) os << " stroke-dasharray=\"6,4\"";
        os << " points=\"";
        for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
            if (logx_ && s.xs[i] <= 0.0) continue;
            if (logy_ && s.ys[i] <= 0.0) continue;
            os << px(s.xs[i]) << ',' << py(s.ys[i]) << ' ';
        }
        os << "\"/>\n";
        if (!s.name.empty()) {
            os << "<text x=\"" << kWidth - kRight - 6 << "\" y=\"" << legend_y
               << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << c << "\">" << s.name
               << "</text>\n";
            legend_y += 16.0;
        }
        ++color;
    }

    double ann_y = kHeight - kBottom - 10.0;
    for (const auto& a : annotations_) {
        os << "<text x=\"" << kLeft + 10 << "\" y=\"" << ann_y << "\" font-size=\"12\">" << a
           << "</text>\n";
        ann_y -= 16.0;
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace nvi
