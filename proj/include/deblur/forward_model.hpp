#pragma once

#include <optional>
#include <utility>

#include "deblur/grid.hpp"

namespace deblur {

/// Observation, kernel and latent-canvas sizes. The canvas is the region of
/// the scene that can reach the observation window through the kernel:
/// x = y + k - 1 along each axis.
struct SizingPlan {
    PixelSize y_size;
    PixelSize k_size;
    PixelSize x_size;
    bool operator==(const SizingPlan&) const = default;
};

/// Without an explicit kernel size the kernel canvas defaults to
/// ceil(y/2) per axis. Throws InvalidSpecification when the kernel exceeds
/// the observation along either axis.
SizingPlan plan_sizes(PixelSize y_size, std::optional<PixelSize> k_size = std::nullopt);

/// Throws DimensionError unless (x, k) and the plan agree.
void check_plan(const SizingPlan& plan);

/// Truncated linear convolution: the "valid" part of k * x.
///
///   y(c, i, j) = sum_{a,b} k(a, b) * x(c, i + nk - 1 - a, j + mk - 1 - b)
///
/// so the output is (nx - nk + 1) x (mx - mk + 1) and every output pixel sees
/// a full kernel footprint. k(nk-1, mk-1) pairs with the top-left sample of
/// each receptive window and k(0, 0) with its bottom-right sample. All
/// channels share the same kernel.
template <typename T>
Grid<T> convolve_truncated(const Grid<T>& x, const BasicKernel<T>& k);

/// Same as above, checking the sizes against `plan`.
template <typename T>
Grid<T> convolve_truncated(const Grid<T>& x, const BasicKernel<T>& k, const SizingPlan& plan);

/// Adjoint of convolve_truncated with respect to x: accumulates into `grad_x`.
template <typename T>
void convolve_truncated_grad_image(const Grid<T>& grad_y, const BasicKernel<T>& k, Grid<T>& grad_x);

/// Adjoint with respect to k: accumulates into `grad_k`.
template <typename T>
void convolve_truncated_grad_kernel(const Grid<T>& grad_y, const Grid<T>& x, BasicKernel<T>& grad_k);

struct Shift {
    int rows = 0;
    int cols = 0;
    bool operator==(const Shift&) const = default;
};

/// Translate a kernel by `s` (content moves from (i, j) to (i + s.rows, j + s.cols)),
/// zero-filling vacated entries. Throws OutOfSupport if nonzero entries would leave the canvas.
template <typename T>
BasicKernel<T> translate(const BasicKernel<T>& k, Shift s);

template <typename T>
Grid<T> translate(const Grid<T>& x, Shift s);

/// The bounded shift ambiguity: returns (k shifted by -tau, x shifted by +tau).
/// Both pairs produce the same truncated convolution as long as no nonzero
/// mass leaves either canvas.
std::pair<Kernel, ImageGrid> shift_pair(const Kernel& k, const ImageGrid& x, Shift tau);

} // namespace deblur
