#pragma once

#include "uwqa/kernels.hpp"

#include <algorithm>

namespace uwqa::kernels {

inline constexpr double luma_weight_r = 0.299;
inline constexpr double luma_weight_g = 0.587;
inline constexpr double luma_weight_b = 0.114;

// Half-sample symmetric border: -1 -> 0, n -> n - 1.
inline int mirror(int i, int n)
{
    if (i < 0)
        return std::min(-i - 1, n - 1);
    if (i >= n)
        return std::max(2 * n - i - 1, 0);
    return i;
}

namespace scalar_impl {
void sobel_rows(const double* src, int width, int height, int y_begin, int y_end,
                int x_begin, int x_end, double* out);
}

} // namespace uwqa::kernels
