#include "deblur/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "deblur/rng.hpp"

namespace deblur {

ImageGrid procedural_scene(int height, int width, std::uint64_t seed)
{
    if (height < 8 || width < 8)
        throw DimensionError("procedural scene needs at least 8x8 pixels");
    constexpr int ss = 4;
    const int H = height * ss, W = width * ss;
    SplitRng rng(seed, "synthetic.scene");
    cv::Mat canvas(H, W, CV_64F);

    const double a = rng.uniform(-0.3, 0.3), b = rng.uniform(-0.3, 0.3), base = rng.uniform(0.35, 0.65);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
            canvas.at<double>(i, j) = base + a * (i / double(H) - 0.5) + b * (j / double(W) - 0.5);

    auto pt = [&](double margin) {
        return cv::Point(static_cast<int>(rng.uniform(-margin, 1 + margin) * W),
                         static_cast<int>(rng.uniform(-margin, 1 + margin) * H));
    };
    const int scale = std::min(H, W);

    const int polys = 5 + static_cast<int>(rng.uniform() * 4);
    for (int p = 0; p < polys; ++p) {
        const cv::Point c = pt(0.1);
        const int corners = 3 + static_cast<int>(rng.uniform() * 4);
        const double r = rng.uniform(0.08, 0.3) * scale;
        const double phase = rng.uniform(0, 2 * std::numbers::pi);
        std::vector<cv::Point> poly;
        for (int k = 0; k < corners; ++k) {
            const double t = phase + 2 * std::numbers::pi * k / corners + rng.uniform(-0.3, 0.3);
            const double rr = r * rng.uniform(0.6, 1.0);
            poly.emplace_back(c.x + static_cast<int>(rr * std::cos(t)), c.y + static_cast<int>(rr * std::sin(t)));
        }
        cv::fillPoly(canvas, std::vector<std::vector<cv::Point>>{poly}, cv::Scalar(rng.uniform(0.05, 0.95)));
    }

    const int ellipses = 3 + static_cast<int>(rng.uniform() * 3);
    for (int e = 0; e < ellipses; ++e) {
        const cv::Size axes(static_cast<int>(rng.uniform(0.04, 0.18) * scale),
                            static_cast<int>(rng.uniform(0.04, 0.18) * scale));
        cv::ellipse(canvas, pt(0.0), axes, rng.uniform(0, 180), 0, 360, cv::Scalar(rng.uniform(0.05, 0.95)),
                    cv::FILLED);
    }

    // textured patch: band-limited noise
    {
        const int th = static_cast<int>(rng.uniform(0.2, 0.35) * H), tw = static_cast<int>(rng.uniform(0.2, 0.35) * W);
        const int ty = static_cast<int>(rng.uniform(0, 1) * (H - th)), tx = static_cast<int>(rng.uniform(0, 1) * (W - tw));
        cv::Mat noise(th / (2 * ss) + 2, tw / (2 * ss) + 2, CV_64F);
        for (int i = 0; i < noise.rows; ++i)
            for (int j = 0; j < noise.cols; ++j)
                noise.at<double>(i, j) = rng.uniform(-0.2, 0.2);
        cv::Mat up;
        cv::resize(noise, up, cv::Size(tw, th), 0, 0, cv::INTER_CUBIC);
        const double level = rng.uniform(0.3, 0.7);
        for (int i = 0; i < th; ++i)
            for (int j = 0; j < tw; ++j)
                canvas.at<double>(ty + i, tx + j) = level + up.at<double>(i, j);
    }

    const int strokes = 4 + static_cast<int>(rng.uniform() * 4);
    for (int s = 0; s < strokes; ++s) {
        const int thickness = std::max(1, static_cast<int>(rng.uniform(0.5, 2.5) * ss));
        cv::line(canvas, pt(0.0), pt(0.0), cv::Scalar(rng.uniform(0.05, 0.95)), thickness);
    }

    cv::Mat small;
    cv::resize(canvas, small, cv::Size(width, height), 0, 0, cv::INTER_AREA);
    ImageGrid out(1, height, width);
    for (int i = 0; i < height; ++i)
        for (int j = 0; j < width; ++j)
            out(0, i, j) = std::clamp(small.at<double>(i, j), 0.05, 0.95);
    return out;
}

Kernel motion_kernel(int size, std::uint64_t seed, double length)
{
    if (size < 3)
        throw DimensionError("motion kernel needs at least 3x3 pixels");
    if (length <= 0)
        length = 0.9 * (size - 2);
    SplitRng rng(seed, "synthetic.kernel");
    constexpr int steps = 400;
    std::vector<double> px(steps), py(steps);
    double vx = std::cos(rng.uniform(0, 2 * std::numbers::pi)), vy = 0;
    vy = std::sqrt(std::max(0.0, 1 - vx * vx)) * (rng.uniform() < 0.5 ? -1 : 1);
    double x = 0, y = 0;
    for (int s = 0; s < steps; ++s) {
        px[s] = x;
        py[s] = y;
        vx += rng.uniform(-0.35, 0.35);
        vy += rng.uniform(-0.35, 0.35);
        const double n = std::hypot(vx, vy);
        vx /= n;
        vy /= n;
        x += vx;
        y += vy;
    }
    // scale the path so its bounding box fits the requested extent
    double minx = *std::min_element(px.begin(), px.end()), maxx = *std::max_element(px.begin(), px.end());
    double miny = *std::min_element(py.begin(), py.end()), maxy = *std::max_element(py.begin(), py.end());
    const double extent = std::max({maxx - minx, maxy - miny, 1e-9});
    const double limit = std::min(length, static_cast<double>(size - 3));
    const double sc = limit / extent;
    double cx = 0, cy = 0;
    for (int s = 0; s < steps; ++s) {
        px[s] = (px[s] - minx) * sc;
        py[s] = (py[s] - miny) * sc;
        cx += px[s];
        cy += py[s];
    }
    cx /= steps;
    cy /= steps;
    const double mid = (size - 1) / 2.0;
    Kernel k(size, size);
    for (int s = 0; s < steps; ++s) {
        const double fx = std::clamp(px[s] - cx + mid, 1.0, size - 2.0);
        const double fy = std::clamp(py[s] - cy + mid, 1.0, size - 2.0);
        const int ix = std::min(static_cast<int>(std::floor(fx)), size - 3);
        const int iy = std::min(static_cast<int>(std::floor(fy)), size - 3);
        const double ax = fx - ix, ay = fy - iy;
        k(iy, ix) += (1 - ax) * (1 - ay);
        k(iy, ix + 1) += ax * (1 - ay);
        k(iy + 1, ix) += (1 - ax) * ay;
        k(iy + 1, ix + 1) += ax * ay;
    }
    const double s = k.sum();
    for (double& v : k.storage())
        v /= s;
    return k;
}

Kernel gaussian_kernel(int size, double sigma)
{
    if (size < 1 || !(sigma > 0))
        throw ParameterError("gaussian kernel needs a positive size and sigma");
    Kernel k(size, size);
    const double mid = (size - 1) / 2.0;
    double s = 0;
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) {
            k(i, j) = std::exp(-((i - mid) * (i - mid) + (j - mid) * (j - mid)) / (2 * sigma * sigma));
            s += k(i, j);
        }
    for (double& v : k.storage())
        v /= s;
    return k;
}

} // namespace deblur
