#pragma once

#include <utility>

#include "deblur/forward_model.hpp"

namespace deblur {

/// SSIM settings. The window is an 11x11 Gaussian (std 1.5) applied in
/// "valid" mode, so only pixels with a full footprint contribute. Images
/// smaller than the window use the largest odd window that fits.
struct SsimParams {
    int radius = 5;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

/// Mean SSIM over the map, averaged over channels. Throws DimensionError on shape mismatch.
double ssim(const ImageGrid& a, const ImageGrid& b, const SsimParams& params = {});

/// Window of the canvas chosen by the template search.
struct Placement {
    Shift offset; ///< top-left of the chosen window within the canvas
    double score = 0.0;
    bool operator==(const Placement&) const = default;
};

/// Scores every stride-1 window of `canvas` with the size of `y` by SSIM
/// against `y` and returns the best window (ties go to the smallest row, then
/// the smallest column). Throws DimensionError if the canvas is smaller than y
/// or the channel counts differ.
std::pair<ImageGrid, Placement> locate_image(const ImageGrid& canvas, const ImageGrid& y,
                                             const SsimParams& params = {});

/// Offset of the centered window: floor((canvas - y) / 2) per axis.
Shift centered_offset(const SizingPlan& plan);

/// Undoes the shift ambiguity on the kernel side. With d = placement.offset -
/// centered_offset(plan), the kernel canvas is translated by d (the image and
/// kernel of an equivalent pair move in opposite directions, so moving the
/// image window back to the center moves the kernel by +d). Vacated entries are
/// zero; mass pushed off the canvas is dropped and the rest renormalized.
Kernel locate_kernel(const Kernel& k_canvas, const Placement& placement, const SizingPlan& plan);

/// Translation that drops whatever leaves the canvas instead of failing.
Kernel translate_clipped(const Kernel& k, Shift s);

/// Pixel where a localized kernel of this size puts a centered point spread:
/// ceil((n - 1) / 2) per axis.
Shift localized_center(PixelSize k_size);

/// Places `k` in a zero canvas of `size` with its middle pixel
/// ((n - 1) / 2, rounded down) on localized_center(size). Used to compare a
/// true kernel with a localized estimate on a larger canvas. Throws
/// DimensionError when `k` does not fit.
Kernel embed_centered(const Kernel& k, PixelSize size);

/// Mass of `k` inside the (2 r + 1)^2 window around localized_center.
double centered_mass(const Kernel& k, int r = 1);

} // namespace deblur
