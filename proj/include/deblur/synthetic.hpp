#pragma once

#include <cstdint>

#include "deblur/grid.hpp"

namespace deblur {

/// Procedural grayscale test scene: shaded background with overlapping
/// polygons, ellipses, strokes and one textured patch, rendered at 4x and
/// area-downsampled so edges are anti-aliased. Values stay in [0.05, 0.95].
ImageGrid procedural_scene(int height, int width, std::uint64_t seed);

/// Camera-shake style kernel: a smooth random trajectory splatted onto a
/// size x size grid, normalized to unit sum and recentered so its centroid is
/// at the middle pixel. Support stays at least one pixel away from the border.
Kernel motion_kernel(int size, std::uint64_t seed, double length = 0.0);

/// Normalized isotropic Gaussian kernel.
Kernel gaussian_kernel(int size, double sigma);

} // namespace deblur
