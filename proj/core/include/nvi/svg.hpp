#pragma once

#include <string>
#include <vector>

namespace nvi {

/// Minimal SVG line-plot writer (the only plot backend; keeps reporting free
/// of plotting runtimes). Optionally log-scales either axis.
class SvgPlot {
  public:
    SvgPlot(std::string title, std::string xlabel, std::string ylabel, bool logx = false,
            bool logy = false);

    void add_series(const std::string& name, const std::vector<double>& xs,
                    const std::vector<double>& ys);
    // Straight reference line between two data-space points (dashed).
    void add_reference(const std::string& name, double x0, double y0, double x1, double y1);
    void annotate(const std::string& text);

    std::string render() const;

  private:
    struct Series {
        std::string name;
        std::vector<double> xs, ys;
        bool dashed = false;
    };

    std::string title_, xlabel_, ylabel_;
    bool logx_, logy_;
    std::vector<Series> series_;
    std::vector<std::string> annotations_;
};

}  // namespace nvi
