#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>

#include "deblur/degradation.hpp"
#include "helpers.hpp"

using namespace deblur;

namespace {

constexpr int kSide = 317; // just over 1e5 pixels

struct Moments {
    double mean = 0, var = 0;
};

Moments moments(const std::vector<double>& v)
{
    Moments m;
    for (double x : v)
        m.mean += x;
    m.mean /= v.size();
    for (double x : v)
        m.var += (x - m.mean) * (x - m.mean);
    m.var /= v.size();
    return m;
}

std::vector<double> diff(const ImageGrid& a, const ImageGrid& b)
{
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = a.storage()[i] - b.storage()[i];
    return d;
}

// textbook HLS, hue in [0, 1)
std::array<double, 3> rgb_to_hls(double r, double g, double b)
{
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    const double l = (mx + mn) / 2;
    if (mx == mn)
        return {0, l, 0};
    const double d = mx - mn;
    const double s = l <= 0.5 ? d / (mx + mn) : d / (2 - mx - mn);
    double h;
    if (mx == r)
        h = (g - b) / d;
    else if (mx == g)
        h = 2 + (b - r) / d;
    else
        h = 4 + (r - g) / d;
    h /= 6;
    if (h < 0)
        h += 1;
    return {h, l, s};
}

double hue_channel(double m1, double m2, double h)
{
    h = h - std::floor(h);
    if (h < 1.0 / 6)
        return m1 + (m2 - m1) * h * 6;
    if (h < 0.5)
        return m2;
    if (h < 2.0 / 3)
        return m1 + (m2 - m1) * (2.0 / 3 - h) * 6;
    return m1;
}

std::array<double, 3> hls_to_rgb(double h, double l, double s)
{
    if (s == 0)
        return {l, l, l};
    const double m2 = l <= 0.5 ? l * (1 + s) : l + s - l * s;
    const double m1 = 2 * l - m2;
    return {hue_channel(m1, m2, h + 1.0 / 3), hue_channel(m1, m2, h), hue_channel(m1, m2, h - 1.0 / 3)};
}

} // namespace

TEST_CASE("gaussian noise moments")
{
    const ImageGrid x(1, kSide, kSide, 0.5);
    const double sigma = 0.05;
    const auto m = moments(diff(add_gaussian(x, sigma, 11), x));
    const double n = x.size();
    CHECK(std::abs(m.mean) < 3 * sigma / std::sqrt(n));
    // standard error of a sample variance under normality
    CHECK(std::abs(m.var - sigma * sigma) < 3 * sigma * sigma * std::sqrt(2.0 / n));
}

TEST_CASE("gaussian noise is clipped to the unit range")
{
    const ImageGrid x = testing::random_image(3, 40, 40, 1);
    const ImageGrid y = add_gaussian(x, 0.5, 2);
    for (double v : y.storage()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(add_gaussian(x, 0.0, 3) == x);
    CHECK_THROWS_AS(add_gaussian(x, -1.0, 3), ParameterError);
}

TEST_CASE("impulse noise rate and polarity")
{
    const double p = 0.08;
    const ImageGrid x(3, kSide, kSide, 0.5);
    const ImageGrid y = add_impulse(x, p, 12);
    const double n = static_cast<double>(x.plane_size());
    double hit = 0, white = 0;
    for (int i = 0; i < kSide; ++i)
        for (int j = 0; j < kSide; ++j) {
            if (y(0, i, j) == 0.5) {
                CHECK(y(1, i, j) == 0.5);
                CHECK(y(2, i, j) == 0.5);
                continue;
            }
            // a hit replaces every channel of the pixel with the same extreme
            REQUIRE((y(0, i, j) == 0.0 || y(0, i, j) == 1.0));
            CHECK(y(1, i, j) == y(0, i, j));
            CHECK(y(2, i, j) == y(0, i, j));
            hit += 1;
            white += y(0, i, j);
        }
    CHECK(std::abs(hit / n - p) < 3 * std::sqrt(p * (1 - p) / n));
    CHECK(std::abs(white / hit - 0.5) < 3 * std::sqrt(0.25 / hit));
}

TEST_CASE("shot noise moments")
{
    const double eta = 40, level = 0.5;
    const ImageGrid x(1, kSide, kSide, level);
    const auto m = moments(add_shot(x, eta, 13).storage());
    const double n = x.size();
    const double lambda = eta * level;
    // Poisson(lambda) / eta: mean level, variance level / eta
    const double var = lambda / (eta * eta);
    CHECK(std::abs(m.mean - level) < 3 * std::sqrt(var / n));
    const double mu4 = lambda * (1 + 3 * lambda) / std::pow(eta, 4);
    CHECK(std::abs(m.var - var) < 3 * std::sqrt((mu4 - var * var) / n));
}

TEST_CASE("shot noise keeps black pixels black")
{
    const ImageGrid x(1, 10, 10, 0.0);
    CHECK(add_shot(x, 25, 1) == x);
    CHECK_THROWS_AS(add_shot(x, 0.0, 1), ParameterError);
}

TEST_CASE("saturation remap against a hand HLS oracle")
{
    // pixels chosen to hit every branch: gray, light and dark halves, clipping
    const std::vector<std::array<double, 3>> pixels{
        {0.5, 0.5, 0.5}, {0.6, 0.4, 0.4}, {0.2, 0.3, 0.25}, {0.9, 0.7, 0.8}, {0.1, 0.6, 0.9},
        {0.3, 0.1, 0.2}, {1.0, 0.0, 0.0}, {0.45, 0.5, 0.55}, {0.8, 0.75, 0.2}};
    ImageGrid x(3, 1, static_cast<int>(pixels.size()));
    for (std::size_t p = 0; p < pixels.size(); ++p)
        for (int c = 0; c < 3; ++c)
            x(c, 0, static_cast<int>(p)) = pixels[p][c];
    const ImageGrid y = saturate_colors(x);
    for (std::size_t p = 0; p < pixels.size(); ++p) {
        const auto [h, l, s] = rgb_to_hls(pixels[p][0], pixels[p][1], pixels[p][2]);
        const double s2 = std::clamp(2 * s + 0.1, 0.0, 1.0);
        const auto rgb = hls_to_rgb(h, l, s2);
        for (int c = 0; c < 3; ++c)
            CHECK(y(c, 0, static_cast<int>(p)) == doctest::Approx(std::clamp(rgb[c], 0.0, 1.0)).epsilon(1e-12));
        // the remap is affine in saturation and leaves hue and lightness alone
        const auto back = rgb_to_hls(y(0, 0, p), y(1, 0, p), y(2, 0, p));
        CHECK(back[1] == doctest::Approx(l).epsilon(1e-12));
        CHECK(back[2] == doctest::Approx(s2).epsilon(1e-12));
    }
}

TEST_CASE("saturation needs color input and adds tiny noise")
{
    CHECK_THROWS_AS(saturate(ImageGrid(1, 4, 4, 0.5), 1), UnsupportedChannels);
    const ImageGrid x = testing::random_image(3, 30, 30, 4);
    const auto m = moments(diff(saturate(x, 5), saturate_colors(x)));
    CHECK(std::sqrt(m.var) < 2e-4);
}

TEST_CASE("noise is deterministic per seed")
{
    const ImageGrid x = testing::random_image(1, 20, 20, 6);
    for (NoiseKind k : {NoiseKind::gaussian, NoiseKind::impulse, NoiseKind::shot}) {
        const NoiseSpec spec = NoiseSpec::preset(k, "fig_high", 9);
        CHECK(apply_noise(x, spec) == apply_noise(x, spec));
        NoiseSpec other = spec;
        other.seed = 10;
        CHECK_FALSE(apply_noise(x, spec) == apply_noise(x, other));
    }
}

TEST_CASE("presets")
{
    CHECK(NoiseSpec::preset(NoiseKind::shot, "list_low").shot_eta == 90);
    CHECK(NoiseSpec::preset(NoiseKind::shot, "list_high").shot_eta == 25);
    CHECK(NoiseSpec::preset(NoiseKind::impulse, "list_high").impulse_p == 0.08);
    CHECK(NoiseSpec::preset(NoiseKind::shot, "fig_high").shot_eta == 40);
    CHECK(NoiseSpec::preset(NoiseKind::impulse, "fig_low").impulse_p == 0.01);
    CHECK(NoiseSpec::preset(NoiseKind::gaussian, "fig_high").gaussian_sigma == 0.05);
    CHECK_THROWS_AS(NoiseSpec::preset(NoiseKind::shot, "medium"), ParameterError);
    const NoiseSpec s = NoiseSpec::preset(NoiseKind::impulse, "fig_high", 3);
    CHECK(NoiseSpec::from_json(s.to_json()) == s);
    NoiseSpec bad;
    bad.kind = NoiseKind::impulse;
    bad.impulse_p = 1.5;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("synthesized case without noise is the truncated convolution")
{
    const ImageGrid clean = testing::random_image(1, 20, 18, 7);
    const Kernel delta = Kernel::delta(5, 5, 2, 2);
    const ImageGrid y = synthesize_case(clean, delta, NoiseSpec{});
    REQUIRE(y.height() == 16);
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 14; ++j)
            CHECK(y(0, i, j) == clean(0, i + 2, j + 2));
}

TEST_CASE("gradient CDF of a step edge")
{
    ImageGrid step(1, 10, 10, 0.0);
    for (int i = 0; i < 10; ++i)
        for (int j = 5; j < 10; ++j)
            step(0, i, j) = 1.0;
    const ImageGrid flat(1, 10, 10, 0.3);
    const GradientCdf cdf = gradient_cdf({step, flat});
    REQUIRE(cdf.thresholds.size() == 1000);
    CHECK(cdf.thresholds.front() == 0.0);
    CHECK(cdf.thresholds.back() == 1.0);
    // two edge columns carry the (normalized) peak magnitude, the rest are zero
    CHECK(cdf.mean[0] == doctest::Approx((0.8 + 1.0) / 2));
    CHECK(cdf.std[0] == doctest::Approx(0.1));
    CHECK(cdf.mean[998] == doctest::Approx(0.9));
    CHECK(cdf.mean[999] == doctest::Approx(1.0));
    for (std::size_t t = 1; t < cdf.mean.size(); ++t)
        CHECK(cdf.mean[t] >= cdf.mean[t - 1]);
    CHECK_THROWS_AS(gradient_cdf({}), DimensionError);
}
