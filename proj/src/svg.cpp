#include "lfmpc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lfmpc/errors.hpp"

namespace lfmpc {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

} // namespace

SvgFigure::SvgFigure(std::string title, std::string x_label, std::string y_label, double x_min,
                     double x_max, double y_min, double y_max, int width, int height)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)),
      x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max), width_(width),
      height_(height) {
    if (!(x_max_ > x_min_)) {
        x_max_ = x_min_ + 1.0;
    }
    if (!(y_max_ > y_min_)) {
        y_max_ = y_min_ + 1.0;
    }
}

double SvgFigure::map_x(double x) const {
    const double w = width_ - margin_left_ - margin_right_;
    const double t = (x - x_min_) / (x_max_ - x_min_);
    return margin_left_ + std::clamp(t, 0.0, 1.0) * w;
}

double SvgFigure::map_y(double y) const {
    const double h = height_ - margin_top_ - margin_bottom_;
    const double t = (y - y_min_) / (y_max_ - y_min_);
    return margin_top_ + (1.0 - std::clamp(t, 0.0, 1.0)) * h;
}

void SvgFigure::polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                         const std::string& color, double stroke_width,
                         const std::string& dash) {
    if (xs.size() != ys.size() || xs.empty()) {
        return;
    }
    std::ostringstream s;
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << stroke_width
      << "\"";
    if (!dash.empty()) {
        s << " stroke-dasharray=\"" << dash << "\"";
    }
    s << " points=\"";
    for (size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
            continue;
        }
        s << fmt(map_x(xs[i])) << "," << fmt(map_y(ys[i])) << " ";
    }
    s << "\"/>";
    body_.push_back(s.str());
}

void SvgFigure::band(const std::vector<double>& xs, const std::vector<double>& lo,
                     const std::vector<double>& hi, const std::string& color, double opacity) {
    if (xs.size() != lo.size() || xs.size() != hi.size() || xs.empty()) {
        return;
    }
    std::ostringstream s;
    s << "<polygon fill=\"" << color << "\" fill-opacity=\"" << opacity
      << "\" stroke=\"none\" points=\"";
    for (size_t i = 0; i < xs.size(); ++i) {
        s << fmt(map_x(xs[i])) << "," << fmt(map_y(hi[i])) << " ";
    }
    for (size_t i = xs.size(); i-- > 0;) {
        s << fmt(map_x(xs[i])) << "," << fmt(map_y(lo[i])) << " ";
    }
    s << "\"/>";
    body_.push_back(s.str());
}

void SvgFigure::hline(double y, const std::string& color, const std::string& dash) {
    std::ostringstream s;
    s << "<line x1=\"" << fmt(map_x(x_min_)) << "\" y1=\"" << fmt(map_y(y)) << "\" x2=\""
      << fmt(map_x(x_max_)) << "\" y2=\"" << fmt(map_y(y)) << "\" stroke=\"" << color
      << "\" stroke-dasharray=\"" << dash << "\"/>";
    body_.push_back(s.str());
}

void SvgFigure::circle(double x, double y, double radius_px, const std::string& color) {
    std::ostringstream s;
    s << "<circle cx=\"" << fmt(map_x(x)) << "\" cy=\"" << fmt(map_y(y)) << "\" r=\""
      << radius_px << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>";
    body_.push_back(s.str());
}

void SvgFigure::legend(const std::vector<std::pair<std::string, std::string>>& entries) {
    double y = margin_top_ + 14.0;
    for (const auto& [label, color] : entries) {
        std::ostringstream s;
        s << "<line x1=\"" << fmt(margin_left_ + 8) << "\" y1=\"" << fmt(y - 4) << "\" x2=\""
          << fmt(margin_left_ + 30) << "\" y2=\"" << fmt(y - 4) << "\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>"
          << "<text x=\"" << fmt(margin_left_ + 36) << "\" y=\"" << fmt(y)
          << "\" font-size=\"11\" font-family=\"sans-serif\">" << label << "</text>";
        body_.push_back(s.str());
        y += 15.0;
    }
}

std::string SvgFigure::render() const {
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << width_ << " " << height_
      << "\" width=\"" << width_ << "\" height=\"" << height_ << "\">\n";
    s << "<rect width=\"" << width_ << "\" height=\"" << height_ << "\" fill=\"white\"/>\n";

    const double px0 = margin_left_, px1 = width_ - margin_right_;
    const double py0 = margin_top_, py1 = height_ - margin_bottom_;
    s << "<rect x=\"" << px0 << "\" y=\"" << py0 << "\" width=\"" << px1 - px0
      << "\" height=\"" << py1 - py0 << "\" fill=\"none\" stroke=\"#444\"/>\n";

    // ticks
    const int n_ticks = 5;
    for (int i = 0; i <= n_ticks; ++i) {
        const double fx = x_min_ + (x_max_ - x_min_) * i / n_ticks;
        const double fy = y_min_ + (y_max_ - y_min_) * i / n_ticks;
        s << "<line x1=\"" << fmt(map_x(fx)) << "\" y1=\"" << py1 << "\" x2=\""
          << fmt(map_x(fx)) << "\" y2=\"" << py1 + 4 << "\" stroke=\"#444\"/>\n";
        s << "<text x=\"" << fmt(map_x(fx)) << "\" y=\"" << py1 + 17
          << "\" font-size=\"10\" text-anchor=\"middle\" font-family=\"sans-serif\">"
          << fmt_tick(fx) << "</text>\n";
        s << "<line x1=\"" << px0 - 4 << "\" y1=\"" << fmt(map_y(fy)) << "\" x2=\"" << px0
          << "\" y2=\"" << fmt(map_y(fy)) << "\" stroke=\"#444\"/>\n";
        s << "<text x=\"" << px0 - 7 << "\" y=\"" << fmt(map_y(fy) + 3)
          << "\" font-size=\"10\" text-anchor=\"end\" font-family=\"sans-serif\">"
          << fmt_tick(fy) << "</text>\n";
    }

    s << "<text x=\"" << (px0 + px1) / 2 << "\" y=\"20\" font-size=\"13\" "
      << "text-anchor=\"middle\" font-family=\"sans-serif\">" << title_ << "</text>\n";
    s << "<text x=\"" << (px0 + px1) / 2 << "\" y=\"" << height_ - 10
      << "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">" << x_label_
      << "</text>\n";
    s << "<text x=\"14\" y=\"" << (py0 + py1) / 2
      << "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "transform=\"rotate(-90 14 " << (py0 + py1) / 2 << ")\">" << y_label_ << "</text>\n";

    for (const auto& b : body_) {
        s << b << "\n";
    }
    s << "</svg>\n";
    return s.str();
}

void SvgFigure::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
        throw NumericsError("svg: cannot open '" + path + "' for writing");
    }
    out << render();
    if (!out) {
        throw NumericsError("svg: write failure on '" + path + "'");
    }
}

} // namespace lfmpc
