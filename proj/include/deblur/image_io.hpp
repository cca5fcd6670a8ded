#pragma once

#include <filesystem>

#include "deblur/grid.hpp"

namespace deblur {

/// Reads an 8- or 16-bit PNG (any format OpenCV decodes) as gray or RGB in
/// [0, 1]. Alpha is dropped. Throws IoError on unreadable files.
ImageGrid read_image(const std::filesystem::path& path);

/// Writes a PNG with 8 or 16 bits per sample after clipping to [0, 1].
void write_image(const std::filesystem::path& path, const ImageGrid& x, int bits = 8);

/// Comma-separated rows of exact kernel values.
Kernel read_kernel_csv(const std::filesystem::path& path);
void write_kernel_csv(const std::filesystem::path& path, const Kernel& k);

/// Kernel divided by its maximum and stored as an 8-bit PNG (display only).
void write_kernel_png(const std::filesystem::path& path, const Kernel& k);

/// Reads a kernel from CSV, or from an image normalized to unit sum.
Kernel read_kernel(const std::filesystem::path& path);

} // namespace deblur
