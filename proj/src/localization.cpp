#include "deblur/localization.hpp"
#include "deblur/nn/ordered_sum.hpp"

#include <cmath>
#include <vector>

namespace deblur {

namespace {

struct Window {
    std::vector<double> taps_y, taps_x;
    int ry = 0, rx = 0;
};

std::vector<double> gaussian_taps(int radius, double sigma)
{
    std::vector<double> t(2 * radius + 1);
    double s = 0;
    for (int i = -radius; i <= radius; ++i) {
        t[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        s += t[i + radius];
    }
    for (double& v : t)
        v /= s;
    return t;
}

Window make_window(int h, int w, const SsimParams& p)
{
    Window win;
    win.ry = std::min(p.radius, (h - 1) / 2);
    win.rx = std::min(p.radius, (w - 1) / 2);
    win.taps_y = gaussian_taps(win.ry, p.sigma);
    win.taps_x = gaussian_taps(win.rx, p.sigma);
    return win;
}

/// Separable valid-mode filter of an h x w array with row stride `stride`.
/// Output is (h - 2 ry) x (w - 2 rx), row-major and dense.
void filter_valid(const double* src, int h, int w, std::size_t stride, const Window& win, std::vector<double>& tmp,
                  std::vector<double>& out)
{
    const int oh = h - 2 * win.ry, ow = w - 2 * win.rx;
    const int ty = 2 * win.ry + 1, tx = 2 * win.rx + 1;
    tmp.assign(static_cast<std::size_t>(h) * ow, 0.0);
    for (int i = 0; i < h; ++i) {
        const double* s = src + i * stride;
        double* d = tmp.data() + static_cast<std::size_t>(i) * ow;
        for (int t = 0; t < tx; ++t) {
            const double c = win.taps_x[t];
#pragma omp simd
            for (int j = 0; j < ow; ++j)
                d[j] += c * s[j + t];
        }
    }
    out.assign(static_cast<std::size_t>(oh) * ow, 0.0);
    for (int i = 0; i < oh; ++i) {
        double* d = out.data() + static_cast<std::size_t>(i) * ow;
        for (int t = 0; t < ty; ++t) {
            const double c = win.taps_y[t];
            const double* s = tmp.data() + static_cast<std::size_t>(i + t) * ow;
#pragma omp simd
            for (int j = 0; j < ow; ++j)
                d[j] += c * s[j];
        }
    }
}

struct Consts {
    double c1, c2;
};

Consts constants(const SsimParams& p)
{
    return {std::pow(p.k1 * p.dynamic_range, 2), std::pow(p.k2 * p.dynamic_range, 2)};
}

/// First and second moments of one plane under the window.
struct Moments {
    std::vector<double> mu, sq; // filtered x and filtered x^2
};

Moments moments(const double* x, int h, int w, const Window& win)
{
    Moments m;
    std::vector<double> tmp, xx(static_cast<std::size_t>(h) * w);
    for (std::size_t i = 0; i < xx.size(); ++i)
        xx[i] = x[i] * x[i];
    filter_valid(x, h, w, w, win, tmp, m.mu);
    filter_valid(xx.data(), h, w, w, win, tmp, m.sq);
    return m;
}

} // namespace

double ssim(const ImageGrid& a, const ImageGrid& b, const SsimParams& params)
{
    if (!a.same_shape(b))
        throw DimensionError("ssim: images must have the same shape");
    const int h = a.height(), w = a.width();
    const Window win = make_window(h, w, params);
    const Consts k = constants(params);
    const int oh = h - 2 * win.ry, ow = w - 2 * win.rx;
    double total = 0;
    std::vector<double> tmp, cross, ab(a.plane_size());
    for (int c = 0; c < a.channels(); ++c) {
        const Moments ma = moments(a.plane(c), h, w, win);
        const Moments mb = moments(b.plane(c), h, w, win);
        for (std::size_t i = 0; i < ab.size(); ++i)
            ab[i] = a.plane(c)[i] * b.plane(c)[i];
        filter_valid(ab.data(), h, w, w, win, tmp, cross);
        double s = 0;
        for (std::size_t i = 0; i < cross.size(); ++i) {
            const double ua = ma.mu[i], ub = mb.mu[i];
            const double va = ma.sq[i] - ua * ua, vb = mb.sq[i] - ub * ub, cov = cross[i] - ua * ub;
            s += ((2 * ua * ub + k.c1) * (2 * cov + k.c2)) / ((ua * ua + ub * ub + k.c1) * (va + vb + k.c2));
        }
        total += s / (static_cast<double>(oh) * ow);
    }
    return total / a.channels();
}

std::pair<ImageGrid, Placement> locate_image(const ImageGrid& canvas, const ImageGrid& y, const SsimParams& params)
{
    if (canvas.channels() != y.channels())
        throw DimensionError("locate_image: channel mismatch");
    const int nh = canvas.height(), nw = canvas.width(), h = y.height(), w = y.width();
    if (nh < h || nw < w)
        throw DimensionError("locate_image: canvas is smaller than the template");
    const Window win = make_window(h, w, params);
    const Consts k = constants(params);
    const int oh = h - 2 * win.ry, ow = w - 2 * win.rx;
    const int cw = nw - 2 * win.rx; // width of the valid canvas maps
    const double inv_count = 1.0 / (static_cast<double>(oh) * ow * y.channels());

    std::vector<Moments> my, mc;
    for (int c = 0; c < y.channels(); ++c) {
        my.push_back(moments(y.plane(c), h, w, win));
        mc.push_back(moments(canvas.plane(c), nh, nw, win));
    }

    Placement best{{0, 0}, -std::numeric_limits<double>::infinity()};
    std::vector<double> prod(static_cast<std::size_t>(h) * w), tmp, cross;
    for (int oi = 0; oi + h <= nh; ++oi)
        for (int oj = 0; oj + w <= nw; ++oj) {
            double score = 0;
            for (int c = 0; c < y.channels(); ++c) {
                const double* yp = y.plane(c);
                const double* xp = canvas.plane(c);
                for (int i = 0; i < h; ++i) {
                    const double* xr = xp + static_cast<std::size_t>(oi + i) * nw + oj;
                    const double* yr = yp + static_cast<std::size_t>(i) * w;
                    double* pr = prod.data() + static_cast<std::size_t>(i) * w;
#pragma omp simd
                    for (int j = 0; j < w; ++j)
                        pr[j] = xr[j] * yr[j];
                }
                filter_valid(prod.data(), h, w, w, win, tmp, cross);
                const Moments& a = my[c];
                const Moments& b = mc[c];
                double s = 0;
                for (int i = 0; i < oh; ++i) {
                    const double* am = a.mu.data() + static_cast<std::size_t>(i) * ow;
                    const double* as = a.sq.data() + static_cast<std::size_t>(i) * ow;
                    const double* cr = cross.data() + static_cast<std::size_t>(i) * ow;
                    const double* bm = b.mu.data() + static_cast<std::size_t>(oi + i) * cw + oj;
                    const double* bs = b.sq.data() + static_cast<std::size_t>(oi + i) * cw + oj;
                    s += ordered_sum<double>(static_cast<std::size_t>(ow), [&](std::size_t j) {
                        const double ua = am[j], ub = bm[j];
                        const double va = as[j] - ua * ua, vb = bs[j] - ub * ub;
                        const double cov = cr[j] - ua * ub;
                        return ((2 * ua * ub + k.c1) * (2 * cov + k.c2)) /
                               ((ua * ua + ub * ub + k.c1) * (va + vb + k.c2));
                    });
                }
                score += s;
            }
            score *= inv_count;
            if (score > best.score)
                best = Placement{{oi, oj}, score};
        }

    ImageGrid crop(y.channels(), h, w);
    for (int c = 0; c < y.channels(); ++c)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j)
                crop(c, i, j) = canvas(c, best.offset.rows + i, best.offset.cols + j);
    return {std::move(crop), best};
}

Shift centered_offset(const SizingPlan& plan)
{
    return {(plan.x_size.rows - plan.y_size.rows) / 2, (plan.x_size.cols - plan.y_size.cols) / 2};
}

Kernel translate_clipped(const Kernel& k, Shift s)
{
    Kernel out(k.rows(), k.cols());
    for (int i = 0; i < k.rows(); ++i)
        for (int j = 0; j < k.cols(); ++j) {
            const int ti = i + s.rows, tj = j + s.cols;
            if (ti >= 0 && ti < k.rows() && tj >= 0 && tj < k.cols())
                out(ti, tj) = k(i, j);
        }
    return out;
}

Kernel locate_kernel(const Kernel& k_canvas, const Placement& placement, const SizingPlan& plan)
{
    const Shift c = centered_offset(plan);
    const Shift d{placement.offset.rows - c.rows, placement.offset.cols - c.cols};
    Kernel out = translate_clipped(k_canvas, d);
    const double before = k_canvas.sum(), after = out.sum();
    if (after > 0 && std::abs(after - before) > 0)
        for (double& v : out.storage())
            v *= before / after;
    return out;
}

Shift localized_center(PixelSize k_size)
{
    return {k_size.rows / 2, k_size.cols / 2};
}

Kernel embed_centered(const Kernel& k, PixelSize size)
{
    if (k.rows() > size.rows || k.cols() > size.cols)
        throw DimensionError("embed_centered: kernel larger than the target canvas");
    const Shift c = localized_center(size);
    const int r0 = std::min(c.rows - (k.rows() - 1) / 2, size.rows - k.rows());
    const int c0 = std::min(c.cols - (k.cols() - 1) / 2, size.cols - k.cols());
    Kernel out(size.rows, size.cols);
    for (int i = 0; i < k.rows(); ++i)
        for (int j = 0; j < k.cols(); ++j)
            out(r0 + i, c0 + j) = k(i, j);
    return out;
}

double centered_mass(const Kernel& k, int r)
{
    const Shift c = localized_center({k.rows(), k.cols()});
    double s = 0;
    for (int i = std::max(0, c.rows - r); i <= std::min(k.rows() - 1, c.rows + r); ++i)
        for (int j = std::max(0, c.cols - r); j <= std::min(k.cols() - 1, c.cols + r); ++j)
            s += k(i, j);
    return s;
}

} // namespace deblur
