#pragma once

#include <string>
#include <utility>
#include <vector>

namespace lfmpc {

/// Minimal self-contained SVG line-plot writer. The data window is fixed at
/// construction; every drawn point is mapped inside the plot area, so
/// emitted geometry always lies within the viewBox as long as callers size
/// the window to their data.
class SvgFigure {
public:
    SvgFigure(std::string title, std::string x_label, std::string y_label, double x_min,
              double x_max, double y_min, double y_max, int width = 720, int height = 420);

    void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                  const std::string& color, double stroke_width = 1.5,
                  const std::string& dash = "");

    /// Shaded region between two curves sharing the same x grid.
    void band(const std::vector<double>& xs, const std::vector<double>& lo,
              const std::vector<double>& hi, const std::string& color, double opacity = 0.25);

    void hline(double y, const std::string& color, const std::string& dash = "4,3");
    void circle(double x, double y, double radius_px, const std::string& color);
    void legend(const std::vector<std::pair<std::string, std::string>>& entries);

    std::string render() const;
    void write(const std::string& path) const;

private:
    double map_x(double x) const;
    double map_y(double y) const;

    std::string title_, x_label_, y_label_;
    double x_min_, x_max_, y_min_, y_max_;
    int width_, height_;
    double margin_left_ = 62.0, margin_right_ = 16.0, margin_top_ = 34.0, margin_bottom_ = 46.0;
    std::vector<std::string> body_;
};

} // namespace lfmpc
