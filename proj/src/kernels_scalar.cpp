#include "kernels_impl.hpp"

#include <algorithm>
#include <cmath>

namespace uwqa::kernels {
namespace scalar_impl {

void luma(const std::uint8_t* rgb, double* out, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        const double r = rgb[3 * i];
        const double g = rgb[3 * i + 1];
        const double b = rgb[3 * i + 2];
        out[i] = luma_weight_r * r + luma_weight_g * g + luma_weight_b * b;
    }
}

void opponent(const std::uint8_t* rgb, double* rg, double* yb, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        const double r = rgb[3 * i];
        const double g = rgb[3 * i + 1];
        const double b = rgb[3 * i + 2];
        rg[i] = r - g;
        yb[i] = (r + g) * 0.5 - b;
    }
}

void channel(const std::uint8_t* rgb, int c, double* out, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        out[i] = rgb[3 * i + c];
}

void channel_min(const std::uint8_t* rgb, double* out, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        out[i] = std::min({rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]});
}

void sobel_rows(const double* src, int width, int height, int y_begin, int y_end,
                int x_begin, int x_end, double* out)
{
    for (int y = y_begin; y < y_end; ++y) {
        const double* up = src + static_cast<std::size_t>(mirror(y - 1, height)) * width;
        const double* mid = src + static_cast<std::size_t>(y) * width;
        const double* down = src + static_cast<std::size_t>(mirror(y + 1, height)) * width;
        for (int x = x_begin; x < x_end; ++x) {
            const int xl = mirror(x - 1, width);
            const int xr = mirror(x + 1, width);
            const double gx = (up[xr] + 2.0 * mid[xr] + down[xr]) - (up[xl] + 2.0 * mid[xl] + down[xl]);
            const double gy = (down[xl] + 2.0 * down[x] + down[xr]) - (up[xl] + 2.0 * up[x] + up[xr]);
            out[static_cast<std::size_t>(y) * width + x] = std::sqrt(gx * gx + gy * gy);
        }
    }
}

void sobel_magnitude(const double* src, int width, int height, double* out)
{
    sobel_rows(src, width, height, 0, height, 0, width, out);
}

void multiply(const double* a, const double* b, double* out, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        out[i] = a[i] * b[i];
}

MinMax min_max(const double* v, std::size_t n)
{
    MinMax mm{v[0], v[0]};
    for (std::size_t i = 1; i < n; ++i) {
        mm.min = std::min(mm.min, v[i]);
        mm.max = std::max(mm.max, v[i]);
    }
    return mm;
}

double sum(const double* v, std::size_t n)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        s += v[i];
    return s;
}

double sum_sq_dev(const double* v, std::size_t n, double center)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = v[i] - center;
        s += d * d;
    }
    return s;
}

} // namespace scalar_impl

const KernelSet& scalar()
{
    static const KernelSet set{
        "scalar",
        scalar_impl::luma,
        scalar_impl::opponent,
        scalar_impl::channel,
        scalar_impl::channel_min,
        scalar_impl::sobel_magnitude,
        scalar_impl::multiply,
        scalar_impl::min_max,
        scalar_impl::sum,
        scalar_impl::sum_sq_dev,
    };
    return set;
}

} // namespace uwqa::kernels
