#include "deblur/metrics.hpp"

#include <cmath>
#include <complex>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace deblur {

double psnr(const ImageGrid& a, const ImageGrid& b)
{
    if (!a.same_shape(b))
        throw DimensionError("psnr: images must have the same shape");
    double s = 0;
    const auto& av = a.storage();
    const auto& bv = b.storage();
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double d = av[i] - bv[i];
        s += d * d;
    }
    const double mse = s / static_cast<double>(av.size());
    if (mse < 1e-10)
        return kPsnrCap;
    return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

ImageGrid to_gray(const ImageGrid& x)
{
    require_image_channels(x.channels());
    if (x.channels() == 1)
        return x;
    ImageGrid g(1, x.height(), x.width());
    for (int i = 0; i < x.height(); ++i)
        for (int j = 0; j < x.width(); ++j)
            g(0, i, j) = 0.299 * x(0, i, j) + 0.587 * x(1, i, j) + 0.114 * x(2, i, j);
    return g;
}

namespace {

struct Plane {
    int h = 0, w = 0;
    std::vector<double> v;
    double& at(int i, int j) { return v[static_cast<std::size_t>(i) * w + j]; }
    double at(int i, int j) const { return v[static_cast<std::size_t>(i) * w + j]; }
};

Plane gaussian_window(int n)
{
    Plane win{n, n, std::vector<double>(static_cast<std::size_t>(n) * n)};
    const double sigma = n / 5.0;
    const double r = (n - 1) / 2.0;
    double s = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double y = i - r, x = j - r;
            win.at(i, j) = std::exp(-(x * x + y * y) / (2 * sigma * sigma));
            s += win.at(i, j);
        }
    for (double& v : win.v)
        v /= s;
    return win;
}

Plane filter_valid(const Plane& x, const Plane& win)
{
    Plane out{x.h - win.h + 1, x.w - win.w + 1, {}};
    if (out.h < 1 || out.w < 1)
        return Plane{};
    out.v.assign(static_cast<std::size_t>(out.h) * out.w, 0.0);
    for (int i = 0; i < out.h; ++i)
        for (int j = 0; j < out.w; ++j) {
            double s = 0;
            for (int a = 0; a < win.h; ++a)
                for (int b = 0; b < win.w; ++b)
                    s += win.at(a, b) * x.at(i + a, j + b);
            out.at(i, j) = s;
        }
    return out;
}

Plane product(const Plane& a, const Plane& b)
{
    Plane p = a;
    for (std::size_t i = 0; i < p.v.size(); ++i)
        p.v[i] *= b.v[i];
    return p;
}

Plane decimate(const Plane& x)
{
    Plane out{(x.h + 1) / 2, (x.w + 1) / 2, {}};
    out.v.resize(static_cast<std::size_t>(out.h) * out.w);
    for (int i = 0; i < out.h; ++i)
        for (int j = 0; j < out.w; ++j)
            out.at(i, j) = x.at(2 * i, 2 * j);
    return out;
}

Plane luma_255(const ImageGrid& x)
{
    const ImageGrid g = to_gray(x);
    Plane p{g.height(), g.width(), std::vector<double>(g.storage())};
    for (double& v : p.v)
        v *= 255.0;
    return p;
}

constexpr double kVifNoiseVar = 2.0;
constexpr double kVifEps = 1e-10;

std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

std::vector<std::complex<double>> dft2(const Kernel& k, int rows, int cols)
{
    std::vector<std::complex<double>> in(static_cast<std::size_t>(rows) * cols), out(in.size());
    for (int i = 0; i < k.rows(); ++i)
        for (int j = 0; j < k.cols(); ++j)
            in[static_cast<std::size_t>(i) * cols + j] = k(i, j);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan = fftw_plan_dft_2d(rows, cols, reinterpret_cast<fftw_complex*>(in.data()),
                                reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

} // namespace

double vif(const ImageGrid& ref, const ImageGrid& dist)
{
    if (!ref.same_shape(dist))
        throw DimensionError("vif: images must have the same shape");
    Plane r = luma_255(ref), d = luma_255(dist);
    double num = 0, den = 0;
    for (int scale = 1; scale <= 4; ++scale) {
        const Plane win = gaussian_window((1 << (4 - scale + 1)) + 1);
        if (scale > 1) {
            r = filter_valid(r, win);
            d = filter_valid(d, win);
            if (r.v.empty())
                break;
            r = decimate(r);
            d = decimate(d);
        }
        const Plane mu1 = filter_valid(r, win);
        if (mu1.v.empty())
            break;
        const Plane mu2 = filter_valid(d, win);
        const Plane e11 = filter_valid(product(r, r), win);
        const Plane e22 = filter_valid(product(d, d), win);
        const Plane e12 = filter_valid(product(r, d), win);
        for (std::size_t i = 0; i < mu1.v.size(); ++i) {
            double s1 = std::max(0.0, e11.v[i] - mu1.v[i] * mu1.v[i]);
            const double s2 = std::max(0.0, e22.v[i] - mu2.v[i] * mu2.v[i]);
            const double s12 = e12.v[i] - mu1.v[i] * mu2.v[i];
            double g = s12 / (s1 + kVifEps);
            double sv = s2 - g * s12;
            if (s1 < kVifEps) {
                g = 0;
                sv = s2;
                s1 = 0;
            }
            if (s2 < kVifEps) {
                g = 0;
                sv = 0;
            }
            if (g < 0) {
                sv = s2;
                g = 0;
            }
            sv = std::max(sv, kVifEps);
            num += std::log10(1 + g * g * s1 / (sv + kVifNoiseVar));
            den += std::log10(1 + s1 / kVifNoiseVar);
        }
    }
    if (den <= 0)
        return num <= 0 ? 1.0 : 0.0;
    return num / den;
}

BandErrors fbe(const Kernel& k_true, const Kernel& k_est)
{
    const int rows = std::max(k_true.rows(), k_est.rows());
    const int cols = std::max(k_true.cols(), k_est.cols());
    const auto ft = dft2(k_true, rows, cols);
    const auto fe = dft2(k_est, rows, cols);
    BandErrors sum{}, count{};
    for (int u = 0; u < rows; ++u)
        for (int v = 0; v < cols; ++v) {
            const double fu = static_cast<double>(std::min(u, rows - u)) / rows;
            const double fv = static_cast<double>(std::min(v, cols - v)) / cols;
            const double radius = std::sqrt(fu * fu + fv * fv) / 0.5;
            const int band = std::min(kFbeBands - 1, static_cast<int>(std::floor(radius * kFbeBands)));
            const std::size_t idx = static_cast<std::size_t>(u) * cols + v;
            sum[band] += std::abs(ft[idx] - fe[idx]) / std::max(std::abs(ft[idx]), 1e-12);
            count[band] += 1;
        }
    BandErrors out{};
    for (int b = 0; b < kFbeBands; ++b)
        out[b] = count[b] > 0 ? sum[b] / count[b] : 0.0;
    return out;
}

nlohmann::json metric_provenance()
{
    const SsimParams s;
    return {{"psnr", {{"dynamic_range", 1.0}, {"cap_db", kPsnrCap}, {"channels", "joint"}}},
            {"ssim",
             {{"window", 2 * s.radius + 1},
              {"sigma", s.sigma},
              {"k1", s.k1},
              {"k2", s.k2},
              {"mode", "valid"},
              {"channels", "mean"}}},
            {"vif",
             {{"domain", "pixel"},
              {"scales", 4},
              {"noise_variance", kVifNoiseVar},
              {"intensity_scale", 255},
              {"color", "luma 0.299/0.587/0.114"}}},
            {"fbe", {{"bands", kFbeBands}, {"partition", "equal radial width up to Nyquist"}, {"guard", 1e-12}}},
            {"lpips", nullptr}};
}

nlohmann::json MetricReport::to_json() const
{
    nlohmann::json j{{"schema_version", kReportSchemaVersion},
                     {"psnr", psnr},
                     {"ssim", ssim},
                     {"vif", vif},
                     {"provenance", metric_provenance()}};
    if (fbe)
        j["fbe"] = *fbe;
    return j;
}

MetricReport MetricReport::from_json(const nlohmann::json& j)
{
    MetricReport r;
    r.psnr = j.at("psnr").get<double>();
    r.ssim = j.at("ssim").get<double>();
    r.vif = j.at("vif").get<double>();
    if (j.contains("fbe"))
        r.fbe = j.at("fbe").get<BandErrors>();
    return r;
}

MetricReport evaluate_pair(const ImageGrid& x_est, const ImageGrid& x_true, const Kernel* k_est, const Kernel* k_true)
{
    MetricReport r;
    r.psnr = psnr(x_est, x_true);
    r.ssim = ssim(x_est, x_true);
    r.vif = vif(x_true, x_est);
    if (k_est && k_true)
        r.fbe = fbe(*k_true, *k_est);
    return r;
}

} // namespace deblur
