#include "kernels_impl.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

namespace uwqa::kernels {
namespace avx2_impl {
namespace {

// Pulls channel c of 4 interleaved pixels out of a 16-byte load as doubles.
inline __m256d load_channel4(const std::uint8_t* rgb, __m128i shuffle)
{
    const __m128i bytes = _mm_loadu_si128(reinterpret_cast<const __m128i*>(rgb));
    const __m128i packed = _mm_shuffle_epi8(bytes, shuffle);
    return _mm256_cvtepi32_pd(_mm_cvtepu8_epi32(packed));
}

inline __m128i channel_shuffle(int c)
{
    return _mm_setr_epi8(static_cast<char>(c), static_cast<char>(c + 3), static_cast<char>(c + 6),
                         static_cast<char>(c + 9), -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1);
}

// Number of leading pixels whose 16-byte loads stay inside the 3n-byte buffer.
inline std::size_t vector_pixels(std::size_t n)
{
    if (n < 6)
        return 0;
    return ((n * 3 - 16) / 3 / 4 + 1) * 4;
}

inline double horizontal_sum(__m256d v)
{
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, v);
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

} // namespace

void luma(const std::uint8_t* rgb, double* out, std::size_t n)
{
    const __m128i sr = channel_shuffle(0), sg = channel_shuffle(1), sb = channel_shuffle(2);
    const __m256d wr = _mm256_set1_pd(luma_weight_r);
    const __m256d wg = _mm256_set1_pd(luma_weight_g);
    const __m256d wb = _mm256_set1_pd(luma_weight_b);
    const std::size_t nv = vector_pixels(n);
    for (std::size_t i = 0; i < nv; i += 4) {
        const std::uint8_t* p = rgb + 3 * i;
        const __m256d r = load_channel4(p, sr);
        const __m256d g = load_channel4(p, sg);
        const __m256d b = load_channel4(p, sb);
        const __m256d y = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(wr, r), _mm256_mul_pd(wg, g)),
                                        _mm256_mul_pd(wb, b));
        _mm256_storeu_pd(out + i, y);
    }
    scalar().luma(rgb + 3 * nv, out + nv, n - nv);
}

void opponent(const std::uint8_t* rgb, double* rg, double* yb, std::size_t n)
{
    const __m128i sr = channel_shuffle(0), sg = channel_shuffle(1), sb = channel_shuffle(2);
    const __m256d half = _mm256_set1_pd(0.5);
    const std::size_t nv = vector_pixels(n);
    for (std::size_t i = 0; i < nv; i += 4) {
        const std::uint8_t* p = rgb + 3 * i;
        const __m256d r = load_channel4(p, sr);
        const __m256d g = load_channel4(p, sg);
        const __m256d b = load_channel4(p, sb);
        _mm256_storeu_pd(rg + i, _mm256_sub_pd(r, g));
        _mm256_storeu_pd(yb + i, _mm256_sub_pd(_mm256_mul_pd(_mm256_add_pd(r, g), half), b));
    }
    scalar().opponent(rgb + 3 * nv, rg + nv, yb + nv, n - nv);
}

void channel(const std::uint8_t* rgb, int c, double* out, std::size_t n)
{
    const __m128i sc = channel_shuffle(c);
    const std::size_t nv = vector_pixels(n);
    for (std::size_t i = 0; i < nv; i += 4)
        _mm256_storeu_pd(out + i, load_channel4(rgb + 3 * i, sc));
    scalar().channel(rgb + 3 * nv, c, out + nv, n - nv);
}

void channel_min(const std::uint8_t* rgb, double* out, std::size_t n)
{
    const __m128i sr = channel_shuffle(0), sg = channel_shuffle(1), sb = channel_shuffle(2);
    const std::size_t nv = vector_pixels(n);
    for (std::size_t i = 0; i < nv; i += 4) {
        const std::uint8_t* p = rgb + 3 * i;
        const __m256d m = _mm256_min_pd(_mm256_min_pd(load_channel4(p, sr), load_channel4(p, sg)),
                                        load_channel4(p, sb));
        _mm256_storeu_pd(out + i, m);
    }
    scalar().channel_min(rgb + 3 * nv, out + nv, n - nv);
}

void sobel_magnitude(const double* src, int width, int height, double* out)
{
    if (width < 3) {
        scalar().sobel_magnitude(src, width, height, out);
        return;
    }
    const __m256d two = _mm256_set1_pd(2.0);
    for (int y = 0; y < height; ++y) {
        const double* up = src + static_cast<std::size_t>(mirror(y - 1, height)) * width;
        const double* mid = src + static_cast<std::size_t>(y) * width;
        const double* down = src + static_cast<std::size_t>(mirror(y + 1, height)) * width;
        double* dst = out + static_cast<std::size_t>(y) * width;

        int x = 1;
        for (; x + 4 <= width - 1; x += 4) {
            const __m256d ul = _mm256_loadu_pd(up + x - 1), uc = _mm256_loadu_pd(up + x),
                          ur = _mm256_loadu_pd(up + x + 1);
            const __m256d ml = _mm256_loadu_pd(mid + x - 1), mr = _mm256_loadu_pd(mid + x + 1);
            const __m256d dl = _mm256_loadu_pd(down + x - 1), dc = _mm256_loadu_pd(down + x),
                          dr = _mm256_loadu_pd(down + x + 1);
            const __m256d right = _mm256_add_pd(_mm256_add_pd(ur, _mm256_mul_pd(two, mr)), dr);
            const __m256d left = _mm256_add_pd(_mm256_add_pd(ul, _mm256_mul_pd(two, ml)), dl);
            const __m256d gx = _mm256_sub_pd(right, left);
            const __m256d bottom = _mm256_add_pd(_mm256_add_pd(dl, _mm256_mul_pd(two, dc)), dr);
            const __m256d top = _mm256_add_pd(_mm256_add_pd(ul, _mm256_mul_pd(two, uc)), ur);
            const __m256d gy = _mm256_sub_pd(bottom, top);
            const __m256d mag = _mm256_sqrt_pd(_mm256_add_pd(_mm256_mul_pd(gx, gx), _mm256_mul_pd(gy, gy)));
            _mm256_storeu_pd(dst + x, mag);
        }
        scalar_impl::sobel_rows(src, width, height, y, y + 1, 0, 1, out);
        scalar_impl::sobel_rows(src, width, height, y, y + 1, x, width, out);
    }
}

void multiply(const double* a, const double* b, double* out, std::size_t n)
{
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    scalar().multiply(a + i, b + i, out + i, n - i);
}

MinMax min_max(const double* v, std::size_t n)
{
    if (n < 8)
        return scalar().min_max(v, n);
    __m256d lo = _mm256_loadu_pd(v);
    __m256d hi = lo;
    std::size_t i = 4;
    for (; i + 4 <= n; i += 4) {
        const __m256d x = _mm256_loadu_pd(v + i);
        lo = _mm256_min_pd(lo, x);
        hi = _mm256_max_pd(hi, x);
    }
    alignas(32) double l[4], h[4];
    _mm256_store_pd(l, lo);
    _mm256_store_pd(h, hi);
    MinMax mm{l[0], h[0]};
    for (int k = 1; k < 4; ++k) {
        mm.min = std::min(mm.min, l[k]);
        mm.max = std::max(mm.max, h[k]);
    }
    for (; i < n; ++i) {
        mm.min = std::min(mm.min, v[i]);
        mm.max = std::max(mm.max, v[i]);
    }
    return mm;
}

double sum(const double* v, std::size_t n)
{
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(v + i));
    double s = horizontal_sum(acc);
    for (; i < n; ++i)
        s += v[i];
    return s;
}

double sum_sq_dev(const double* v, std::size_t n, double center)
{
    const __m256d c = _mm256_set1_pd(center);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(v + i), c);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double s = horizontal_sum(acc);
    for (; i < n; ++i) {
        const double d = v[i] - center;
        s += d * d;
    }
    return s;
}

} // namespace avx2_impl

const KernelSet* avx2()
{
    static const KernelSet set{
        "avx2",
        avx2_impl::luma,
        avx2_impl::opponent,
        avx2_impl::channel,
        avx2_impl::channel_min,
        avx2_impl::sobel_magnitude,
        avx2_impl::multiply,
        avx2_impl::min_max,
        avx2_impl::sum,
        avx2_impl::sum_sq_dev,
    };
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &set : nullptr;
}

} // namespace uwqa::kernels

#else

namespace uwqa::kernels {
const KernelSet* avx2() { return nullptr; }
} // namespace uwqa::kernels

#endif
