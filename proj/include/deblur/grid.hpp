#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "deblur/errors.hpp"

namespace deblur {

/// Channel-planar C x H x W array. Used for observations, estimates and
/// network activations alike; image-level entry points check C in {1, 3}.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int channels, int height, int width, T fill = T(0))
        : channels_(channels), height_(height), width_(width),
          data_(static_cast<std::size_t>(channels) * height * width, fill)
    {
        if (channels < 1 || height < 1 || width < 1)
            throw DimensionError("grid dimensions must be positive");
    }

    int channels() const { return channels_; }
    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int c, int i, int j) { return data_[(c * plane_size()) + static_cast<std::size_t>(i) * width_ + j]; }
    const T& operator()(int c, int i, int j) const { return data_[(c * plane_size()) + static_cast<std::size_t>(i) * width_ + j]; }

    T* plane(int c) { return data_.data() + c * plane_size(); }
    const T* plane(int c) const { return data_.data() + c * plane_size(); }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    bool same_shape(const Grid& o) const
    {
        return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
    }

    template <typename U>
    Grid<U> cast() const
    {
        Grid<U> out(channels_, height_, width_);
        std::transform(data_.begin(), data_.end(), out.storage().begin(),
                       [](T v) { return static_cast<U>(v); });
        return out;
    }

    bool operator==(const Grid&) const = default;

private:
    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<T> data_;
};

using ImageGrid = Grid<double>;

/// Rows x cols point-spread function. Kernels produced by the library are
/// nonnegative and sum to one; the type itself only stores values.
template <typename T>
class BasicKernel {
public:
    BasicKernel() = default;
    BasicKernel(int rows, int cols, T fill = T(0))
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill)
    {
        if (rows < 1 || cols < 1)
            throw DimensionError("kernel dimensions must be positive");
    }

    static BasicKernel delta(int rows, int cols, int r0, int c0)
    {
        BasicKernel k(rows, cols);
        k(r0, c0) = T(1);
        return k;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    const T& operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    T sum() const
    {
        T s = 0;
        for (T v : data_)
            s += v;
        return s;
    }

    /// Nonnegative with unit mass within `tol`.
    bool on_simplex(double tol = 1e-6) const
    {
        for (T v : data_)
            if (!(v >= T(0)))
                return false;
        return std::abs(static_cast<double>(sum()) - 1.0) <= tol;
    }

    template <typename U>
    BasicKernel<U> cast() const
    {
        BasicKernel<U> out(rows_, cols_);
        std::transform(data_.begin(), data_.end(), out.storage().begin(),
                       [](T v) { return static_cast<U>(v); });
        return out;
    }

    bool operator==(const BasicKernel&) const = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

using Kernel = BasicKernel<double>;

struct PixelSize {
    int rows = 0;
    int cols = 0;
    bool operator==(const PixelSize&) const = default;
};

inline void require_image_channels(int c)
{
    if (c != 1 && c != 3)
        throw UnsupportedChannels("images must have 1 or 3 channels, got " + std::to_string(c));
}

template <typename T>
void clip_unit(Grid<T>& g)
{
    for (T& v : g.storage())
        v = std::clamp(v, T(0), T(1));
}

} // namespace deblur
