#pragma once

#include <cstdint>

#include "deblur/grid.hpp"
#include "deblur/rng.hpp"

namespace testing {

inline deblur::ImageGrid random_image(int c, int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0)
{
    deblur::SplitRng rng(seed, "test.image");
    deblur::ImageGrid x(c, h, w);
    for (double& v : x.storage())
        v = rng.uniform(lo, hi);
    return x;
}

inline deblur::Kernel random_kernel(int h, int w, std::uint64_t seed)
{
    deblur::SplitRng rng(seed, "test.kernel");
    deblur::Kernel k(h, w);
    double s = 0;
    for (double& v : k.storage()) {
        v = rng.uniform();
        s += v;
    }
    for (double& v : k.storage())
        v /= s;
    return k;
}

inline double max_abs_diff(const deblur::ImageGrid& a, const deblur::ImageGrid& b)
{
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.storage()[i] - b.storage()[i]));
    return m;
}

/// Full linear convolution evaluated at every position, then the part where
/// the kernel lies entirely inside x.
inline deblur::ImageGrid full_then_valid(const deblur::ImageGrid& x, const deblur::Kernel& k)
{
    const int fh = x.height() + k.rows() - 1, fw = x.width() + k.cols() - 1;
    deblur::ImageGrid out(x.channels(), x.height() - k.rows() + 1, x.width() - k.cols() + 1);
    for (int c = 0; c < x.channels(); ++c)
        for (int p = 0; p < fh; ++p)
            for (int q = 0; q < fw; ++q) {
                double s = 0;
                for (int a = 0; a < k.rows(); ++a)
                    for (int b = 0; b < k.cols(); ++b) {
                        const int xi = p - a, xj = q - b;
                        if (xi >= 0 && xi < x.height() && xj >= 0 && xj < x.width())
                            s += k(a, b) * x(c, xi, xj);
                    }
                const int i = p - (k.rows() - 1), j = q - (k.cols() - 1);
                if (i >= 0 && i < out.height() && j >= 0 && j < out.width())
                    out(c, i, j) = s;
            }
    return out;
}

} // namespace testing
