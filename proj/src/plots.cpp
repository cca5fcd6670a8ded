#include "deblur/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "deblur/errors.hpp"

namespace deblur {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 60;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else if (c == '&')
            out += "&amp;";
        else
            out += c;
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v)
    {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finish()
    {
        if (!(lo <= hi)) {
            lo = 0;
            hi = 1;
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
};

std::string fmt(double v)
{
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
}

void frame(std::ostream& o, const std::string& title, const std::string& xl, const std::string& yl)
{
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n"
      << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth - kLeft - kRight << "\" height=\""
      << kHeight - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n"
      << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\">" << escape(xl) << "</text>\n"
      << "<text transform=\"translate(18," << (kTop + kHeight - kBottom) / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(yl) << "</text>\n";
}

void ticks(std::ostream& o, const Range& xr, const Range& yr, bool log_x)
{
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    for (int t = 0; t <= 4; ++t) {
        const double fx = t / 4.0;
        const double vx = xr.lo + fx * (xr.hi - xr.lo);
        o << "<text x=\"" << kLeft + fx * pw << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">"
          << fmt(log_x ? std::pow(10.0, vx) : vx) << "</text>\n";
        const double vy = yr.lo + fx * (yr.hi - yr.lo);
        o << "<text x=\"" << kLeft - 6 << "\" y=\"" << kHeight - kBottom - fx * ph + 4 << "\" text-anchor=\"end\">"
          << fmt(vy) << "</text>\n";
    }
}

void save(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << text;
}

} // namespace

void write_svg(const std::filesystem::path& path, const LineChart& chart)
{
    auto tx = [&](double v) { return chart.log_x ? (v > 0 ? std::log10(v) : std::nan("")) : v; };
    Range xr, yr;
    for (const auto& s : chart.series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            xr.add(tx(s.x[i]));
            const double e = i < s.err.size() && std::isfinite(s.err[i]) ? s.err[i] : 0.0;
            yr.add(s.y[i] - e);
            yr.add(s.y[i] + e);
        }
    if (chart.baseline)
        yr.add(*chart.baseline);
    xr.finish();
    yr.finish();
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + (tx(v) - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto py = [&](double v) { return kHeight - kBottom - (v - yr.lo) / (yr.hi - yr.lo) * ph; };

    std::ostringstream o;
    frame(o, chart.title, chart.x_label, chart.y_label);
    ticks(o, xr, yr, chart.log_x);
    if (chart.baseline)
        o << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << py(*chart.baseline) << "\" y2=\""
          << py(*chart.baseline) << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
    for (std::size_t s = 0; s < chart.series.size(); ++s) {
        const auto& ser = chart.series[s];
        const char* color = kColors[s % std::size(kColors)];
        std::ostringstream pts;
        for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
            if (!std::isfinite(tx(ser.x[i])) || !std::isfinite(ser.y[i]))
                continue;
            pts << px(ser.x[i]) << ',' << py(ser.y[i]) << ' ';
            o << "<circle cx=\"" << px(ser.x[i]) << "\" cy=\"" << py(ser.y[i]) << "\" r=\"3\" fill=\"" << color
              << "\"/>\n";
            if (i < ser.err.size() && std::isfinite(ser.err[i]) && ser.err[i] > 0)
                o << "<line x1=\"" << px(ser.x[i]) << "\" x2=\"" << px(ser.x[i]) << "\" y1=\""
                  << py(ser.y[i] - ser.err[i]) << "\" y2=\"" << py(ser.y[i] + ser.err[i]) << "\" stroke=\"" << color
                  << "\"/>\n";
        }
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << pts.str()
          << "\"/>\n";
        o << "<text x=\"" << kWidth - kRight + 10 << "\" y=\"" << kTop + 16 * (s + 1) << "\" fill=\"" << color
          << "\">" << escape(ser.label) << "</text>\n";
    }
    o << "</svg>\n";
    save(path, o.str());
}

void write_svg(const std::filesystem::path& path, const Histogram& hist)
{
    const int bins = std::max(1, hist.bins);
    Range xr;
    for (double v : hist.values)
        xr.add(v);
    xr.finish();
    std::vector<int> counts(bins, 0);
    for (double v : hist.values)
        if (std::isfinite(v))
            counts[std::min(bins - 1, static_cast<int>((v - xr.lo) / (xr.hi - xr.lo) * bins))]++;
    Range yr;
    yr.add(0);
    yr.add(*std::max_element(counts.begin(), counts.end()) + 1);
    yr.finish();
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;

    std::ostringstream o;
    frame(o, hist.title, hist.x_label, "count");
    ticks(o, xr, yr, false);
    for (int b = 0; b < bins; ++b) {
        const double h = counts[b] / yr.hi * ph;
        o << "<rect x=\"" << kLeft + b * pw / bins << "\" y=\"" << kHeight - kBottom - h << "\" width=\""
          << pw / bins << "\" height=\"" << h << "\" fill=\"" << kColors[0] << "\" stroke=\"white\"/>\n";
    }
    o << "</svg>\n";
    save(path, o.str());
}

} // namespace deblur
