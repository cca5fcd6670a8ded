#include "deblur/forward_model.hpp"
#include "deblur/nn/ordered_sum.hpp"

#include <string>

namespace deblur {

namespace {

std::string fmt_size(PixelSize s)
{
    return std::to_string(s.rows) + "x" + std::to_string(s.cols);
}

template <typename T>
void require_valid_pair(const Grid<T>& x, const BasicKernel<T>& k)
{
    if (k.rows() > x.height() || k.cols() > x.width())
        throw DimensionError("kernel " + std::to_string(k.rows()) + "x" + std::to_string(k.cols()) +
                             " does not fit canvas " + std::to_string(x.height()) + "x" +
                             std::to_string(x.width()));
}

} // namespace

SizingPlan plan_sizes(PixelSize y_size, std::optional<PixelSize> k_size)
{
    if (y_size.rows < 1 || y_size.cols < 1)
        throw DimensionError("observation size must be positive, got " + fmt_size(y_size));
    PixelSize k = k_size.value_or(PixelSize{(y_size.rows + 1) / 2, (y_size.cols + 1) / 2});
    if (k.rows < 1 || k.cols < 1)
        throw InvalidSpecification("kernel size must be positive, got " + fmt_size(k));
    if (k.rows > y_size.rows || k.cols > y_size.cols)
        throw InvalidSpecification("kernel size " + fmt_size(k) + " exceeds observation size " +
                                   fmt_size(y_size) + "; the latent image would be under-determined");
    return SizingPlan{y_size, k, PixelSize{y_size.rows + k.rows - 1, y_size.cols + k.cols - 1}};
}

void check_plan(const SizingPlan& plan)
{
    if (plan.x_size.rows != plan.y_size.rows + plan.k_size.rows - 1 ||
        plan.x_size.cols != plan.y_size.cols + plan.k_size.cols - 1)
        throw DimensionError("inconsistent sizing plan: y " + fmt_size(plan.y_size) + ", k " +
                             fmt_size(plan.k_size) + ", x " + fmt_size(plan.x_size));
}

template <typename T>
Grid<T> convolve_truncated(const Grid<T>& x, const BasicKernel<T>& k)
{
    require_valid_pair(x, k);
    const int nk = k.rows(), mk = k.cols();
    const int ny = x.height() - nk + 1, my = x.width() - mk + 1;
    Grid<T> y(x.channels(), ny, my);
    for (int c = 0; c < x.channels(); ++c) {
        for (int i = 0; i < ny; ++i) {
            T* yr = &y(c, i, 0);
            for (int a = 0; a < nk; ++a) {
                const T* xrow = &x(c, i + nk - 1 - a, 0);
                for (int b = 0; b < mk; ++b) {
                    const T w = k(a, b);
                    const T* xr = xrow + (mk - 1 - b);
#pragma omp simd
                    for (int j = 0; j < my; ++j)
                        yr[j] += w * xr[j];
                }
            }
        }
    }
    return y;
}

template <typename T>
Grid<T> convolve_truncated(const Grid<T>& x, const BasicKernel<T>& k, const SizingPlan& plan)
{
    check_plan(plan);
    if (x.height() != plan.x_size.rows || x.width() != plan.x_size.cols)
        throw DimensionError("canvas " + std::to_string(x.height()) + "x" + std::to_string(x.width()) +
                             " does not match plan " + fmt_size(plan.x_size));
    if (k.rows() != plan.k_size.rows || k.cols() != plan.k_size.cols)
        throw DimensionError("kernel " + std::to_string(k.rows()) + "x" + std::to_string(k.cols()) +
                             " does not match plan " + fmt_size(plan.k_size));
    return convolve_truncated(x, k);
}

template <typename T>
void convolve_truncated_grad_image(const Grid<T>& grad_y, const BasicKernel<T>& k, Grid<T>& grad_x)
{
    const int nk = k.rows(), mk = k.cols();
    const int ny = grad_y.height(), my = grad_y.width();
    if (grad_x.height() != ny + nk - 1 || grad_x.width() != my + mk - 1 ||
        grad_x.channels() != grad_y.channels())
        throw DimensionError("gradient canvas does not match kernel and observation sizes");
    for (int c = 0; c < grad_y.channels(); ++c) {
        for (int i = 0; i < ny; ++i) {
            const T* gy = &grad_y(c, i, 0);
            for (int a = 0; a < nk; ++a) {
                T* grow = &grad_x(c, i + nk - 1 - a, 0);
                for (int b = 0; b < mk; ++b) {
                    const T w = k(a, b);
                    T* gr = grow + (mk - 1 - b);
#pragma omp simd
                    for (int j = 0; j < my; ++j)
                        gr[j] += w * gy[j];
                }
            }
        }
    }
}

template <typename T>
void convolve_truncated_grad_kernel(const Grid<T>& grad_y, const Grid<T>& x, BasicKernel<T>& grad_k)
{
    const int nk = grad_k.rows(), mk = grad_k.cols();
    const int ny = grad_y.height(), my = grad_y.width();
    if (x.height() != ny + nk - 1 || x.width() != my + mk - 1 || x.channels() != grad_y.channels())
        throw DimensionError("canvas does not match kernel and observation sizes");
    for (int c = 0; c < grad_y.channels(); ++c) {
        for (int i = 0; i < ny; ++i) {
            const T* gy = &grad_y(c, i, 0);
            for (int a = 0; a < nk; ++a) {
                const T* xrow = &x(c, i + nk - 1 - a, 0);
                for (int b = 0; b < mk; ++b) {
                    const T* xr = xrow + (mk - 1 - b);
                    grad_k(a, b) += ordered_sum<T>(static_cast<std::size_t>(my),
                                                   [gy, xr](std::size_t j) { return gy[j] * xr[j]; });
                }
            }
        }
    }
}

template <typename T>
BasicKernel<T> translate(const BasicKernel<T>& k, Shift s)
{
    BasicKernel<T> out(k.rows(), k.cols());
    for (int i = 0; i < k.rows(); ++i)
        for (int j = 0; j < k.cols(); ++j) {
            const T v = k(i, j);
            if (v == T(0))
                continue;
            const int ti = i + s.rows, tj = j + s.cols;
            if (ti < 0 || tj < 0 || ti >= k.rows() || tj >= k.cols())
                throw OutOfSupport("kernel shift (" + std::to_string(s.rows) + "," + std::to_string(s.cols) +
                                   ") moves nonzero mass off the canvas");
            out(ti, tj) = v;
        }
    return out;
}

template <typename T>
Grid<T> translate(const Grid<T>& x, Shift s)
{
    Grid<T> out(x.channels(), x.height(), x.width());
    for (int c = 0; c < x.channels(); ++c)
        for (int i = 0; i < x.height(); ++i)
            for (int j = 0; j < x.width(); ++j) {
                const T v = x(c, i, j);
                if (v == T(0))
                    continue;
                const int ti = i + s.rows, tj = j + s.cols;
                if (ti < 0 || tj < 0 || ti >= x.height() || tj >= x.width())
                    throw OutOfSupport("image shift (" + std::to_string(s.rows) + "," +
                                       std::to_string(s.cols) + ") moves nonzero content off the canvas");
                out(c, ti, tj) = v;
            }
    return out;
}

std::pair<Kernel, ImageGrid> shift_pair(const Kernel& k, const ImageGrid& x, Shift tau)
{
    return {translate(k, Shift{-tau.rows, -tau.cols}), translate(x, tau)};
}

#define DEBLUR_INSTANTIATE(T)                                                                         \
    template Grid<T> convolve_truncated(const Grid<T>&, const BasicKernel<T>&);                       \
    template Grid<T> convolve_truncated(const Grid<T>&, const BasicKernel<T>&, const SizingPlan&);    \
    template void convolve_truncated_grad_image(const Grid<T>&, const BasicKernel<T>&, Grid<T>&);     \
    template void convolve_truncated_grad_kernel(const Grid<T>&, const Grid<T>&, BasicKernel<T>&);    \
    template BasicKernel<T> translate(const BasicKernel<T>&, Shift);                                  \
    template Grid<T> translate(const Grid<T>&, Shift);

DEBLUR_INSTANTIATE(float)
DEBLUR_INSTANTIATE(double)
#undef DEBLUR_INSTANTIATE

} // namespace deblur
