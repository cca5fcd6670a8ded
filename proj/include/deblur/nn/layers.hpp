#pragma once

// Minimal reverse-mode building blocks for the two generators. Every layer
// caches what its backward pass needs during forward(), and backward()
// accumulates parameter gradients into Param::grad and returns the gradient
// with respect to the layer input. Batch size is always one.

#include <cstdint>
#include <string>
#include <vector>

#include "deblur/grid.hpp"
#include "deblur/rng.hpp"

namespace deblur::nn {

template <typename T>
struct Param {
    std::string name;
    std::vector<T> value;
    std::vector<T> grad;

    Param() = default;
    Param(std::string n, std::size_t count) : name(std::move(n)), value(count, T(0)), grad(count, T(0)) {}
    std::size_t size() const { return value.size(); }
    void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

/// Row-major dense matrix used by the coordinate and fully connected networks.
template <typename T>
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Matrix() = default;
    Matrix(int r, int c, T fill = T(0)) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}
    T& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    const T& operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
};

/// 2-D convolution with reflection padding of (ksize - 1) / 2 and optional stride.
/// Weights and bias follow the usual uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
template <typename T>
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(std::string name, int in_ch, int out_ch, int ksize, int stride, SplitRng& rng);

    Grid<T> forward(const Grid<T>& in);
    Grid<T> backward(const Grid<T>& grad_out);

    static int output_extent(int in, int ksize, int stride);

    int in_channels() const { return in_ch_; }
    int out_channels() const { return out_ch_; }

    Param<T> weight;
    Param<T> bias;

private:
    void build_indices(int h, int w);
    void im2col(const Grid<T>& in, std::vector<T>& col) const;
    void col2im(const std::vector<T>& col, Grid<T>& grad_in) const;

    int in_ch_ = 0, out_ch_ = 0, ksize_ = 1, stride_ = 1, pad_ = 0;
    int in_h_ = 0, in_w_ = 0, out_h_ = 0, out_w_ = 0;
    std::vector<int> row_src_, col_src_; // [k][out] -> reflected input index
    std::vector<int> col_lo_, col_hi_;   // [k] -> output columns read without reflection
    std::vector<T> col_;                 // unfolded input, reused by backward
};

/// Batch normalization with batch statistics (training mode), eps = 1e-5.
template <typename T>
class BatchNorm {
public:
    BatchNorm() = default;
    BatchNorm(std::string name, int channels);

    Grid<T> forward(const Grid<T>& in);
    Grid<T> backward(const Grid<T>& grad_out);

    Param<T> gamma;
    Param<T> beta;

private:
    Grid<T> normalized_;
    std::vector<double> inv_std_;
};

template <typename T>
class LeakyRelu {
public:
    explicit LeakyRelu(T slope = T(0.2)) : slope_(slope) {}
    Grid<T> forward(const Grid<T>& in);
    Grid<T> backward(const Grid<T>& grad_out) const;

private:
    T slope_;
    Grid<T> output_;
};

template <typename T>
class Sigmoid {
public:
    Grid<T> forward(const Grid<T>& in);
    Grid<T> backward(const Grid<T>& grad_out) const;

private:
    Grid<T> output_;
};

/// Bilinear resampling to an explicit output size (half-pixel centers, edge clamped).
template <typename T>
class BilinearResize {
public:
    Grid<T> forward(const Grid<T>& in, int out_h, int out_w);
    Grid<T> backward(const Grid<T>& grad_out) const;

private:
    struct Tap {
        int lo, hi;
        T frac;
    };
    static std::vector<Tap> taps(int in, int out);
    int in_h_ = 0, in_w_ = 0;
    std::vector<Tap> rows_, cols_;
};

template <typename T>
Grid<T> concat_channels(const Grid<T>& a, const Grid<T>& b);

template <typename T>
void split_channels(const Grid<T>& g, int first, Grid<T>& a, Grid<T>& b);

/// Fully connected layer acting on a batch of row vectors.
template <typename T>
class Linear {
public:
    enum class Init { uniform_fan_in, siren_first, siren_hidden };

    Linear() = default;
    Linear(std::string name, int in, int out, Init init, T omega, SplitRng& rng);

    Matrix<T> forward(const Matrix<T>& in);
    Matrix<T> backward(const Matrix<T>& grad_out);

    int in_features() const { return in_; }
    int out_features() const { return out_; }

    Param<T> weight; // out x in
    Param<T> bias;

private:
    int in_ = 0, out_ = 0;
    Matrix<T> input_;
};

/// sin(omega * x), element-wise.
template <typename T>
class Sine {
public:
    explicit Sine(T omega = T(30)) : omega_(omega) {}
    Matrix<T> forward(const Matrix<T>& in);
    Matrix<T> backward(const Matrix<T>& grad_out) const;

private:
    T omega_;
    Matrix<T> input_;
};

/// min(max(x, 0), 6).
template <typename T>
class Relu6 {
public:
    Matrix<T> forward(const Matrix<T>& in);
    Matrix<T> backward(const Matrix<T>& grad_out) const;

private:
    Matrix<T> input_;
};

} // namespace deblur::nn
