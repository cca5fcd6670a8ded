#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace deblur {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> err; ///< optional error bars, same length as y
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    std::optional<double> baseline; ///< horizontal dashed reference
    bool log_x = false;
};

/// Static SVG rendering; non-finite points are skipped.
void write_svg(const std::filesystem::path& path, const LineChart& chart);

struct Histogram {
    std::string title;
    std::string x_label;
    std::vector<double> values;
    int bins = 20;
};

void write_svg(const std::filesystem::path& path, const Histogram& hist);

} // namespace deblur
