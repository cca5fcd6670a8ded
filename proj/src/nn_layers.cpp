#include "deblur/nn/layers.hpp"
#include "deblur/nn/ordered_sum.hpp"

#include <cmath>

#include <Eigen/Core>

namespace deblur::nn {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

int reflect_index(int i, int n)
{
    if (n == 1)
        return 0;
    while (i < 0 || i >= n) {
        if (i < 0)
            i = -i;
        if (i >= n)
            i = 2 * (n - 1) - i;
    }
    return i;
}

template <typename T>
void fill_uniform(std::vector<T>& v, double bound, SplitRng& rng)
{
    for (T& x : v)
        x = static_cast<T>(rng.uniform(-bound, bound));
}

} // namespace

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(std::string name, int in_ch, int out_ch, int ksize, int stride, SplitRng& rng)
    : weight(name + ".weight", static_cast<std::size_t>(out_ch) * in_ch * ksize * ksize),
      bias(name + ".bias", static_cast<std::size_t>(out_ch)), in_ch_(in_ch), out_ch_(out_ch),
      ksize_(ksize), stride_(stride), pad_((ksize - 1) / 2)
{
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch * ksize * ksize));
    fill_uniform(weight.value, bound, rng);
    fill_uniform(bias.value, bound, rng);
}

template <typename T>
int Conv2d<T>::output_extent(int in, int ksize, int stride)
{
    const int pad = (ksize - 1) / 2;
    return (in + 2 * pad - ksize) / stride + 1;
}

template <typename T>
void Conv2d<T>::build_indices(int h, int w)
{
    if (h == in_h_ && w == in_w_ && !row_src_.empty())
        return;
    in_h_ = h;
    in_w_ = w;
    out_h_ = output_extent(h, ksize_, stride_);
    out_w_ = output_extent(w, ksize_, stride_);
    row_src_.resize(static_cast<std::size_t>(ksize_) * out_h_);
    col_src_.resize(static_cast<std::size_t>(ksize_) * out_w_);
    col_lo_.assign(ksize_, 0);
    col_hi_.assign(ksize_, 0);
    for (int k = 0; k < ksize_; ++k) {
        // Output columns whose source index needs no reflection.
        int lo = 0;
        while (lo < out_w_ && lo * stride_ + k - pad_ < 0)
            ++lo;
        int hi = lo;
        while (hi < out_w_ && hi * stride_ + k - pad_ < w)
            ++hi;
        col_lo_[k] = lo;
        col_hi_[k] = hi;
        for (int o = 0; o < out_h_; ++o)
            row_src_[k * out_h_ + o] = reflect_index(o * stride_ + k - pad_, h);
        for (int o = 0; o < out_w_; ++o)
            col_src_[k * out_w_ + o] = reflect_index(o * stride_ + k - pad_, w);
    }
}

template <typename T>
void Conv2d<T>::im2col(const Grid<T>& in, std::vector<T>& col) const
{
    const std::size_t n = static_cast<std::size_t>(out_h_) * out_w_;
    col.resize(static_cast<std::size_t>(in_ch_) * ksize_ * ksize_ * n);
    T* dst = col.data();
    for (int c = 0; c < in_ch_; ++c) {
        const T* src = in.plane(c);
        for (int ky = 0; ky < ksize_; ++ky)
            for (int kx = 0; kx < ksize_; ++kx) {
                const int* cs = &col_src_[kx * out_w_];
                const int lo = col_lo_[kx], hi = col_hi_[kx], off = kx - pad_;
                for (int oy = 0; oy < out_h_; ++oy) {
                    const T* srow = src + static_cast<std::size_t>(row_src_[ky * out_h_ + oy]) * in_w_;
                    for (int ox = 0; ox < lo; ++ox)
                        dst[ox] = srow[cs[ox]];
                    if (stride_ == 1) {
                        std::copy(srow + lo + off, srow + hi + off, dst + lo);
                    } else {
                        for (int ox = lo; ox < hi; ++ox)
                            dst[ox] = srow[ox * stride_ + off];
                    }
                    for (int ox = hi; ox < out_w_; ++ox)
                        dst[ox] = srow[cs[ox]];
                    dst += out_w_;
                }
            }
    }
}

template <typename T>
void Conv2d<T>::col2im(const std::vector<T>& col, Grid<T>& grad_in) const
{
    const T* src = col.data();
    for (int c = 0; c < in_ch_; ++c) {
        T* dst = grad_in.plane(c);
        for (int ky = 0; ky < ksize_; ++ky)
            for (int kx = 0; kx < ksize_; ++kx) {
                const int* cs = &col_src_[kx * out_w_];
                const int lo = col_lo_[kx], hi = col_hi_[kx], off = kx - pad_;
                for (int oy = 0; oy < out_h_; ++oy) {
                    T* drow = dst + static_cast<std::size_t>(row_src_[ky * out_h_ + oy]) * in_w_;
                    for (int ox = 0; ox < lo; ++ox)
                        drow[cs[ox]] += src[ox];
                    if (stride_ == 1) {
                        T* d = drow + off;
#pragma omp simd
                        for (int ox = lo; ox < hi; ++ox)
                            d[ox] += src[ox];
                    } else {
                        for (int ox = lo; ox < hi; ++ox)
                            drow[ox * stride_ + off] += src[ox];
                    }
                    for (int ox = hi; ox < out_w_; ++ox)
                        drow[cs[ox]] += src[ox];
                    src += out_w_;
                }
            }
    }
}

template <typename T>
Grid<T> Conv2d<T>::forward(const Grid<T>& in)
{
    if (in.channels() != in_ch_)
        throw DimensionError(weight.name + ": expected " + std::to_string(in_ch_) + " input channels, got " +
                             std::to_string(in.channels()));
    build_indices(in.height(), in.width());
    const bool pointwise = ksize_ == 1 && stride_ == 1;
    if (pointwise) {
        col_ = in.storage();
    } else {
        im2col(in, col_);
    }
    const int k = in_ch_ * ksize_ * ksize_;
    const int n = out_h_ * out_w_;
    Grid<T> out(out_ch_, out_h_, out_w_);
    Eigen::Map<const MatR<T>> w(weight.value.data(), out_ch_, k);
    Eigen::Map<const MatR<T>> c(col_.data(), k, n);
    Eigen::Map<MatR<T>> o(out.storage().data(), out_ch_, n);
    o.noalias() = w * c;
    for (int oc = 0; oc < out_ch_; ++oc)
        o.row(oc).array() += bias.value[oc];
    return out;
}

template <typename T>
Grid<T> Conv2d<T>::backward(const Grid<T>& grad_out)
{
    const bool pointwise = ksize_ == 1 && stride_ == 1;
    const int k = in_ch_ * ksize_ * ksize_;
    const int n = out_h_ * out_w_;
    Eigen::Map<const MatR<T>> g(grad_out.storage().data(), out_ch_, n);
    Eigen::Map<const MatR<T>> c(col_.data(), k, n);
    Eigen::Map<MatR<T>> gw(weight.grad.data(), out_ch_, k);
    gw.noalias() += g * c.transpose();
    for (int oc = 0; oc < out_ch_; ++oc) {
        const T* go = grad_out.storage().data() + static_cast<std::size_t>(oc) * n;
        bias.grad[oc] += ordered_sum<T>(static_cast<std::size_t>(n), [go](std::size_t i) { return go[i]; });
    }

    Eigen::Map<const MatR<T>> w(weight.value.data(), out_ch_, k);
    Grid<T> grad_in(in_ch_, in_h_, in_w_);
    if (pointwise) {
        Eigen::Map<MatR<T>> gi(grad_in.storage().data(), k, n);
        gi.noalias() = w.transpose() * g;
    } else {
        Eigen::Map<MatR<T>> gc(col_.data(), k, n);
        gc.noalias() = w.transpose() * g; // the cached columns are no longer needed
        col2im(col_, grad_in);
    }
    return grad_in;
}

// ------------------------------------------------------------- BatchNorm

template <typename T>
BatchNorm<T>::BatchNorm(std::string name, int channels)
    : gamma(name + ".gamma", static_cast<std::size_t>(channels)),
      beta(name + ".beta", static_cast<std::size_t>(channels))
{
    std::fill(gamma.value.begin(), gamma.value.end(), T(1));
}

template <typename T>
Grid<T> BatchNorm<T>::forward(const Grid<T>& in)
{
    if (static_cast<std::size_t>(in.channels()) != gamma.size())
        throw DimensionError(gamma.name + ": channel mismatch");
    const std::size_t n = in.plane_size();
    normalized_ = Grid<T>(in.channels(), in.height(), in.width());
    inv_std_.assign(in.channels(), 0.0);
    Grid<T> out(in.channels(), in.height(), in.width());
    for (int c = 0; c < in.channels(); ++c) {
        const T* x = in.plane(c);
        const double mean = ordered_sum<double>(n, [x](std::size_t i) { return static_cast<double>(x[i]); }) /
                            static_cast<double>(n);
        const double var = ordered_sum<double>(n,
                                               [x, mean](std::size_t i) {
                                                   const double d = x[i] - mean;
                                                   return d * d;
                                               }) /
                           static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + 1e-5);
        inv_std_[c] = inv;
        T* xh = normalized_.plane(c);
        T* y = out.plane(c);
        const T g = gamma.value[c], b = beta.value[c];
        const T m = static_cast<T>(mean), s = static_cast<T>(inv);
#pragma omp simd
        for (std::size_t i = 0; i < n; ++i) {
            xh[i] = (x[i] - m) * s;
            y[i] = g * xh[i] + b;
        }
    }
    return out;
}

template <typename T>
Grid<T> BatchNorm<T>::backward(const Grid<T>& grad_out)
{
    const std::size_t n = grad_out.plane_size();
    Grid<T> grad_in(grad_out.channels(), grad_out.height(), grad_out.width());
    for (int c = 0; c < grad_out.channels(); ++c) {
        const T* g = grad_out.plane(c);
        const T* xh = normalized_.plane(c);
        const double sg = ordered_sum<double>(n, [g](std::size_t i) { return static_cast<double>(g[i]); });
        const double sgx =
            ordered_sum<double>(n, [g, xh](std::size_t i) { return static_cast<double>(g[i]) * xh[i]; });
        gamma.grad[c] += static_cast<T>(sgx);
        beta.grad[c] += static_cast<T>(sg);
        const double scale = gamma.value[c] * inv_std_[c] / static_cast<double>(n);
        const T a = static_cast<T>(scale * static_cast<double>(n));
        const T b = static_cast<T>(scale * sg);
        const T d = static_cast<T>(scale * sgx);
        T* gi = grad_in.plane(c);
#pragma omp simd
        for (std::size_t i = 0; i < n; ++i)
            gi[i] = a * g[i] - b - d * xh[i];
    }
    return grad_in;
}

// ----------------------------------------------------- pointwise activations

template <typename T>
Grid<T> LeakyRelu<T>::forward(const Grid<T>& in)
{
    output_ = Grid<T>(in.channels(), in.height(), in.width());
    const T* x = in.storage().data();
    T* y = output_.storage().data();
    const std::size_t n = in.size();
    const T slope = slope_;
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i)
        y[i] = x[i] > T(0) ? x[i] : slope * x[i];
    return output_;
}

template <typename T>
Grid<T> LeakyRelu<T>::backward(const Grid<T>& grad_out) const
{
    Grid<T> g(grad_out.channels(), grad_out.height(), grad_out.width());
    const T* go = grad_out.storage().data();
    const T* y = output_.storage().data();
    T* gi = g.storage().data();
    const std::size_t n = g.size();
    const T slope = slope_;
    // The output has the sign of the input because the slope is positive.
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i)
        gi[i] = y[i] > T(0) ? go[i] : slope * go[i];
    return g;
}

template <typename T>
Grid<T> Sigmoid<T>::forward(const Grid<T>& in)
{
    output_ = in;
    for (T& v : output_.storage())
        v = T(1) / (T(1) + std::exp(-v));
    return output_;
}

template <typename T>
Grid<T> Sigmoid<T>::backward(const Grid<T>& grad_out) const
{
    Grid<T> g = grad_out;
    auto& gv = g.storage();
    const auto& s = output_.storage();
    for (std::size_t i = 0; i < gv.size(); ++i)
        gv[i] *= s[i] * (T(1) - s[i]);
    return g;
}

// ------------------------------------------------------- BilinearResize

template <typename T>
std::vector<typename BilinearResize<T>::Tap> BilinearResize<T>::taps(int in, int out)
{
    std::vector<Tap> t(out);
    const double scale = static_cast<double>(in) / out;
    for (int d = 0; d < out; ++d) {
        double src = (d + 0.5) * scale - 0.5;
        if (src < 0)
            src = 0;
        int lo = static_cast<int>(std::floor(src));
        if (lo > in - 1)
            lo = in - 1;
        const int hi = std::min(lo + 1, in - 1);
        t[d] = Tap{lo, hi, static_cast<T>(src - lo)};
    }
    return t;
}

template <typename T>
Grid<T> BilinearResize<T>::forward(const Grid<T>& in, int out_h, int out_w)
{
    in_h_ = in.height();
    in_w_ = in.width();
    rows_ = taps(in_h_, out_h);
    cols_ = taps(in_w_, out_w);
    Grid<T> out(in.channels(), out_h, out_w);
    for (int c = 0; c < in.channels(); ++c)
        for (int i = 0; i < out_h; ++i) {
            const Tap r = rows_[i];
            const T* a = &in(c, r.lo, 0);
            const T* b = &in(c, r.hi, 0);
            T* o = &out(c, i, 0);
            for (int j = 0; j < out_w; ++j) {
                const Tap q = cols_[j];
                const T top = a[q.lo] + q.frac * (a[q.hi] - a[q.lo]);
                const T bot = b[q.lo] + q.frac * (b[q.hi] - b[q.lo]);
                o[j] = top + r.frac * (bot - top);
            }
        }
    return out;
}

template <typename T>
Grid<T> BilinearResize<T>::backward(const Grid<T>& grad_out) const
{
    Grid<T> g(grad_out.channels(), in_h_, in_w_);
    for (int c = 0; c < grad_out.channels(); ++c)
        for (int i = 0; i < grad_out.height(); ++i) {
            const Tap r = rows_[i];
            T* a = &g(c, r.lo, 0);
            T* b = &g(c, r.hi, 0);
            const T* go = &grad_out(c, i, 0);
            for (int j = 0; j < grad_out.width(); ++j) {
                const Tap q = cols_[j];
                const T top = go[j] * (T(1) - r.frac);
                const T bot = go[j] * r.frac;
                a[q.lo] += top * (T(1) - q.frac);
                a[q.hi] += top * q.frac;
                b[q.lo] += bot * (T(1) - q.frac);
                b[q.hi] += bot * q.frac;
            }
        }
    return g;
}

template <typename T>
Grid<T> concat_channels(const Grid<T>& a, const Grid<T>& b)
{
    if (a.height() != b.height() || a.width() != b.width())
        throw DimensionError("concat: spatial size mismatch");
    Grid<T> out(a.channels() + b.channels(), a.height(), a.width());
    std::copy(a.storage().begin(), a.storage().end(), out.storage().begin());
    std::copy(b.storage().begin(), b.storage().end(), out.storage().begin() + static_cast<std::ptrdiff_t>(a.size()));
    return out;
}

template <typename T>
void split_channels(const Grid<T>& g, int first, Grid<T>& a, Grid<T>& b)
{
    a = Grid<T>(first, g.height(), g.width());
    b = Grid<T>(g.channels() - first, g.height(), g.width());
    auto mid = g.storage().begin() + static_cast<std::ptrdiff_t>(a.size());
    std::copy(g.storage().begin(), mid, a.storage().begin());
    std::copy(mid, g.storage().end(), b.storage().begin());
}

// ---------------------------------------------------------------- Linear

template <typename T>
Linear<T>::Linear(std::string name, int in, int out, Init init, T omega, SplitRng& rng)
    : weight(name + ".weight", static_cast<std::size_t>(out) * in), bias(name + ".bias", static_cast<std::size_t>(out)),
      in_(in), out_(out)
{
    const double fan = 1.0 / std::sqrt(static_cast<double>(in));
    switch (init) {
    case Init::uniform_fan_in:
        fill_uniform(weight.value, fan, rng);
        break;
    case Init::siren_first:
        fill_uniform(weight.value, 1.0 / in, rng);
        break;
    case Init::siren_hidden:
        fill_uniform(weight.value, std::sqrt(6.0 / in) / static_cast<double>(omega), rng);
        break;
    }
    fill_uniform(bias.value, fan, rng);
}

template <typename T>
Matrix<T> Linear<T>::forward(const Matrix<T>& in)
{
    if (in.cols != in_)
        throw DimensionError(weight.name + ": feature mismatch");
    input_ = in;
    Matrix<T> out(in.rows, out_);
    Eigen::Map<const MatR<T>> x(in.data.data(), in.rows, in_);
    Eigen::Map<const MatR<T>> w(weight.value.data(), out_, in_);
    Eigen::Map<MatR<T>> y(out.data.data(), in.rows, out_);
    y.noalias() = x * w.transpose();
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.value.data(), out_);
    y.rowwise() += b;
    return out;
}

template <typename T>
Matrix<T> Linear<T>::backward(const Matrix<T>& grad_out)
{
    Eigen::Map<const MatR<T>> g(grad_out.data.data(), grad_out.rows, out_);
    Eigen::Map<const MatR<T>> x(input_.data.data(), input_.rows, in_);
    Eigen::Map<MatR<T>> gw(weight.grad.data(), out_, in_);
    gw.noalias() += g.transpose() * x;
    for (int r = 0; r < grad_out.rows; ++r)
        for (int o = 0; o < out_; ++o)
            bias.grad[o] += grad_out(r, o);
    Matrix<T> gin(grad_out.rows, in_);
    Eigen::Map<const MatR<T>> w(weight.value.data(), out_, in_);
    Eigen::Map<MatR<T>> gi(gin.data.data(), grad_out.rows, in_);
    gi.noalias() = g * w;
    return gin;
}

template <typename T>
Matrix<T> Sine<T>::forward(const Matrix<T>& in)
{
    input_ = in;
    Matrix<T> out = in;
    for (T& v : out.data)
        v = std::sin(omega_ * v);
    return out;
}

template <typename T>
Matrix<T> Sine<T>::backward(const Matrix<T>& grad_out) const
{
    Matrix<T> g = grad_out;
    for (std::size_t i = 0; i < g.data.size(); ++i)
        g.data[i] *= omega_ * std::cos(omega_ * input_.data[i]);
    return g;
}

template <typename T>
Matrix<T> Relu6<T>::forward(const Matrix<T>& in)
{
    input_ = in;
    Matrix<T> out = in;
    for (T& v : out.data)
        v = std::clamp(v, T(0), T(6));
    return out;
}

template <typename T>
Matrix<T> Relu6<T>::backward(const Matrix<T>& grad_out) const
{
    Matrix<T> g = grad_out;
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        const T x = input_.data[i];
        if (!(x > T(0) && x < T(6)))
            g.data[i] = T(0);
    }
    return g;
}

#define DEBLUR_NN_INSTANTIATE(T)                                                   \
    template class Conv2d<T>;                                                      \
    template class BatchNorm<T>;                                                   \
    template class LeakyRelu<T>;                                                   \
    template class Sigmoid<T>;                                                     \
    template class BilinearResize<T>;                                              \
    template class Linear<T>;                                                      \
    template class Sine<T>;                                                        \
    template class Relu6<T>;                                                       \
    template Grid<T> concat_channels(const Grid<T>&, const Grid<T>&);              \
    template void split_channels(const Grid<T>&, int, Grid<T>&, Grid<T>&);

DEBLUR_NN_INSTANTIATE(float)
DEBLUR_NN_INSTANTIATE(double)
#undef DEBLUR_NN_INSTANTIATE

} // namespace deblur::nn
