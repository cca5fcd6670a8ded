#include "deblur/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "deblur/rng.hpp"

namespace deblur {

std::string to_string(NoiseKind k)
{
    switch (k) {
    case NoiseKind::none:
        return "none";
    case NoiseKind::gaussian:
        return "gaussian";
    case NoiseKind::impulse:
        return "impulse";
    case NoiseKind::shot:
        return "shot";
    case NoiseKind::saturation:
        return "saturation";
    }
    return "none";
}

NoiseKind noise_kind_from_string(const std::string& s)
{
    for (NoiseKind k : {NoiseKind::none, NoiseKind::gaussian, NoiseKind::impulse, NoiseKind::shot,
                        NoiseKind::saturation})
        if (to_string(k) == s)
            return k;
    throw ParameterError("unknown noise kind '" + s + "'");
}

void NoiseSpec::validate() const
{
    switch (kind) {
    case NoiseKind::gaussian:
        if (!(gaussian_sigma >= 0))
            throw ParameterError("gaussian_sigma must be nonnegative");
        break;
    case NoiseKind::impulse:
        if (!(impulse_p >= 0 && impulse_p <= 1))
            throw ParameterError("impulse_p must lie in [0, 1]");
        break;
    case NoiseKind::shot:
        if (!(shot_eta > 0))
            throw ParameterError("shot_eta must be positive");
        break;
    case NoiseKind::none:
    case NoiseKind::saturation:
        break;
    }
}

nlohmann::json NoiseSpec::to_json() const
{
    return {{"kind", to_string(kind)},
            {"gaussian_sigma", gaussian_sigma},
            {"impulse_p", impulse_p},
            {"shot_eta", shot_eta},
            {"seed", seed}};
}

NoiseSpec NoiseSpec::from_json(const nlohmann::json& j)
{
    NoiseSpec n;
    n.kind = noise_kind_from_string(j.value("kind", std::string("none")));
    n.gaussian_sigma = j.value("gaussian_sigma", n.gaussian_sigma);
    n.impulse_p = j.value("impulse_p", n.impulse_p);
    n.shot_eta = j.value("shot_eta", n.shot_eta);
    n.seed = j.value("seed", n.seed);
    n.validate();
    return n;
}

NoiseSpec NoiseSpec::preset(NoiseKind kind, const std::string& level, std::uint64_t seed)
{
    const bool list = level.rfind("list_", 0) == 0;
    const bool fig = level.rfind("fig_", 0) == 0;
    if (!list && !fig)
        throw ParameterError("unknown noise preset '" + level + "'");
    const std::string tier = level.substr(level.find('_') + 1);
    if (tier != "low" && tier != "high")
        throw ParameterError("unknown noise preset '" + level + "'");
    const bool high = tier == "high";
    NoiseSpec n;
    n.kind = kind;
    n.seed = seed;
    n.gaussian_sigma = high ? 0.05 : 0.01;
    if (list) {
        n.shot_eta = high ? 25.0 : 90.0;
        n.impulse_p = high ? 0.08 : 0.005;
    } else {
        n.shot_eta = high ? 40.0 : 80.0;
        n.impulse_p = high ? 0.05 : 0.01;
    }
    return n;
}

ImageGrid add_gaussian(const ImageGrid& x, double sigma, std::uint64_t seed)
{
    if (!(sigma >= 0))
        throw ParameterError("Gaussian noise level must be nonnegative");
    ImageGrid out = x;
    if (sigma == 0)
        return out;
    SplitRng rng(seed, "noise.gaussian");
    std::normal_distribution<double> n(0.0, sigma);
    for (double& v : out.storage())
        v = std::clamp(v + n(rng), 0.0, 1.0);
    return out;
}

ImageGrid add_impulse(const ImageGrid& x, double p, std::uint64_t seed)
{
    if (!(p >= 0 && p <= 1))
        throw ParameterError("impulse probability must lie in [0, 1]");
    ImageGrid out = x;
    SplitRng rng(seed, "noise.impulse");
    for (int i = 0; i < x.height(); ++i)
        for (int j = 0; j < x.width(); ++j) {
            const double u = rng.uniform();
            const double v = rng.uniform() < 0.5 ? 0.0 : 1.0;
            if (u < p)
                for (int c = 0; c < x.channels(); ++c)
                    out(c, i, j) = v;
        }
    return out;
}

ImageGrid add_shot(const ImageGrid& x, double eta, std::uint64_t seed)
{
    if (!(eta > 0))
        throw ParameterError("shot noise rate must be positive");
    ImageGrid out = x;
    SplitRng rng(seed, "noise.shot");
    for (double& v : out.storage()) {
        const double rate = eta * std::max(v, 0.0);
        if (rate == 0) {
            v = 0;
            continue;
        }
        std::poisson_distribution<long long> pd(rate);
        v = std::clamp(static_cast<double>(pd(rng)) / eta, 0.0, 1.0);
    }
    return out;
}

namespace {

struct Hls {
    double h, l, s;
};

// hue in [0, 1)
Hls to_hls(double r, double g, double b)
{
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    const double l = (mx + mn) / 2;
    if (mx == mn)
        return {0, l, 0};
    const double d = mx - mn;
    const double s = l <= 0.5 ? d / (mx + mn) : d / (2 - mx - mn);
    double h = mx == r ? (g - b) / d : mx == g ? 2 + (b - r) / d : 4 + (r - g) / d;
    h /= 6;
    if (h < 0)
        h += 1;
    return {h, l, s};
}

double hue_to_channel(double m1, double m2, double h)
{
    h -= std::floor(h);
    if (h < 1.0 / 6)
        return m1 + (m2 - m1) * h * 6;
    if (h < 0.5)
        return m2;
    if (h < 2.0 / 3)
        return m1 + (m2 - m1) * (2.0 / 3 - h) * 6;
    return m1;
}

} // namespace

ImageGrid saturate_colors(const ImageGrid& x)
{
    if (x.channels() != 3)
        throw UnsupportedChannels("saturation needs an RGB image");
    ImageGrid out(3, x.height(), x.width());
    for (int i = 0; i < x.height(); ++i)
        for (int j = 0; j < x.width(); ++j) {
            const Hls c = to_hls(x(0, i, j), x(1, i, j), x(2, i, j));
            const double s = std::clamp(2 * c.s + 0.1, 0.0, 1.0);
            double rgb[3] = {c.l, c.l, c.l};
            if (s > 0) {
                const double m2 = c.l <= 0.5 ? c.l * (1 + s) : c.l + s - c.l * s;
                const double m1 = 2 * c.l - m2;
                rgb[0] = hue_to_channel(m1, m2, c.h + 1.0 / 3);
                rgb[1] = hue_to_channel(m1, m2, c.h);
                rgb[2] = hue_to_channel(m1, m2, c.h - 1.0 / 3);
            }
            for (int ch = 0; ch < 3; ++ch)
                out(ch, i, j) = std::clamp(rgb[ch], 0.0, 1.0);
        }
    return out;
}

ImageGrid saturate(const ImageGrid& x, std::uint64_t seed)
{
    return add_gaussian(saturate_colors(x), 1e-4, seed);
}

ImageGrid apply_noise(const ImageGrid& x, const NoiseSpec& spec)
{
    spec.validate();
    switch (spec.kind) {
    case NoiseKind::none:
        return x;
    case NoiseKind::gaussian:
        return add_gaussian(x, spec.gaussian_sigma, spec.seed);
    case NoiseKind::impulse:
        return add_impulse(x, spec.impulse_p, spec.seed);
    case NoiseKind::shot:
        return add_shot(x, spec.shot_eta, spec.seed);
    case NoiseKind::saturation:
        return saturate(x, spec.seed);
    }
    return x;
}

ImageGrid synthesize_case(const ImageGrid& x_clean, const Kernel& k, const NoiseSpec& noise)
{
    require_image_channels(x_clean.channels());
    ImageGrid y = convolve_truncated(x_clean, k);
    return apply_noise(y, noise);
}

GradientCdf gradient_cdf(const std::vector<ImageGrid>& images, int grid_points)
{
    if (images.empty())
        throw DimensionError("gradient_cdf needs at least one image");
    if (grid_points < 2)
        throw ParameterError("gradient_cdf needs at least two grid points");
    GradientCdf out;
    out.thresholds.resize(grid_points);
    for (int t = 0; t < grid_points; ++t)
        out.thresholds[t] = static_cast<double>(t) / (grid_points - 1);

    std::vector<std::vector<double>> curves;
    for (const ImageGrid& img : images) {
        const int h = img.height(), w = img.width();
        std::vector<double> mag(static_cast<std::size_t>(h) * w, 0.0);
        for (int c = 0; c < img.channels(); ++c) {
            cv::Mat plane(h, w, CV_64F, const_cast<double*>(img.plane(c)));
            cv::Mat gx, gy;
            cv::Sobel(plane, gx, CV_64F, 1, 0, 3, 1.0, 0.0, cv::BORDER_REPLICATE);
            cv::Sobel(plane, gy, CV_64F, 0, 1, 3, 1.0, 0.0, cv::BORDER_REPLICATE);
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) {
                    const double a = gx.at<double>(i, j), b = gy.at<double>(i, j);
                    mag[static_cast<std::size_t>(i) * w + j] += a * a + b * b;
                }
        }
        double peak = 0;
        for (double& m : mag) {
            m = std::sqrt(m);
            peak = std::max(peak, m);
        }
        for (double& m : mag)
            m = peak > 0 ? m / peak : 0.0;
        std::sort(mag.begin(), mag.end());
        std::vector<double> cdf(grid_points);
        for (int t = 0; t < grid_points; ++t) {
            const auto it = std::upper_bound(mag.begin(), mag.end(), out.thresholds[t]);
            cdf[t] = static_cast<double>(it - mag.begin()) / static_cast<double>(mag.size());
        }
        curves.push_back(std::move(cdf));
    }
    out.mean.assign(grid_points, 0.0);
    out.std.assign(grid_points, 0.0);
    const double n = static_cast<double>(curves.size());
    for (int t = 0; t < grid_points; ++t) {
        double s = 0, s2 = 0;
        for (const auto& c : curves) {
            s += c[t];
            s2 += c[t] * c[t];
        }
        const double m = s / n;
        out.mean[t] = m;
        out.std[t] = std::sqrt(std::max(0.0, s2 / n - m * m));
    }
    return out;
}

} // namespace deblur
