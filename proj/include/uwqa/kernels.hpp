#pragma once

// Pixel kernels shared by the metric implementations.
//
// Every kernel has a scalar reference version. Vector versions are selected at
// runtime from the host CPU and must produce bit-identical output for the
// element-wise kernels; reductions may differ only by summation order.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace uwqa::kernels {

struct MinMax {
    double min;
    double max;
};

struct KernelSet {
    std::string_view name;

    // out[i] = 0.299 r + 0.587 g + 0.114 b for n interleaved pixels.
    void (*luma)(const std::uint8_t* rgb, double* out, std::size_t n);
    // Opponent channels: rg = r - g, yb = (r + g) / 2 - b.
    void (*opponent)(const std::uint8_t* rgb, double* rg, double* yb, std::size_t n);
    // Extract channel c (0..2) as doubles.
    void (*channel)(const std::uint8_t* rgb, int c, double* out, std::size_t n);
    // Per-pixel minimum over the three channels.
    void (*channel_min)(const std::uint8_t* rgb, double* out, std::size_t n);
    // 3x3 Sobel gradient magnitude with mirrored (edge-inclusive) borders.
    void (*sobel_magnitude)(const double* src, int width, int height, double* out);
    void (*multiply)(const double* a, const double* b, double* out, std::size_t n);
    // n must be >= 1.
    MinMax (*min_max)(const double* v, std::size_t n);
    double (*sum)(const double* v, std::size_t n);
    // sum of (v[i] - center)^2
    double (*sum_sq_dev)(const double* v, std::size_t n, double center);
};

const KernelSet& scalar();
// nullptr when not compiled in or not supported by this CPU.
const KernelSet* avx2();
// Best available set, or the one named by UWQA_KERNELS ("scalar" / "avx2").
const KernelSet& active();

} // namespace uwqa::kernels
