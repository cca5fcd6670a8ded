#pragma once

#include <cstddef>

namespace deblur {

/// Sum of term(0) .. term(n - 1) with a fixed association: sixteen running
/// lanes (index mod 16) folded pairwise at the end. Unlike an unordered SIMD
/// reduction the result does not depend on how the data happens to be aligned,
/// so repeated runs agree bit for bit.
template <typename Acc, typename F>
inline Acc ordered_sum(std::size_t n, F&& term)
{
    constexpr int L = 16;
    Acc acc[L] = {};
    std::size_t i = 0;
    for (; i + L <= n; i += L)
        for (int l = 0; l < L; ++l)
            acc[l] += term(i + l);
    for (int l = 0; i < n; ++i, ++l)
        acc[l] += term(i);
    for (int w = L / 2; w > 0; w /= 2)
        for (int l = 0; l < w; ++l)
            acc[l] += acc[l + w];
    return acc[0];
}

} // namespace deblur
