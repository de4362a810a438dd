#pragma once

#include "oracles/metric_oracle.hpp"

#include "uwqa/image.hpp"
#include "uwqa/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testing {

inline std::filesystem::path fixture(const std::string& rel)
{
    return std::filesystem::path(UWQA_FIXTURE_DIR) / rel;
}

inline std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::uint8_t> bytes_of(const std::filesystem::path& p)
{
    const std::string s = slurp(p);
    return {s.begin(), s.end()};
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("uwqa-" + tag + "-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

inline bool rel_close(double a, double b, double rel, double abs_floor = 1e-12)
{
    const double d = std::abs(a - b);
    return d <= abs_floor || d <= rel * std::max(std::abs(a), std::abs(b));
}

inline uwqa::ImageBuffer solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b)
{
    uwqa::ImageBuffer img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.set(x, y, r, g, b);
    return img;
}

inline uwqa::ImageBuffer checkerboard(int w, int h, int cell, std::array<std::uint8_t, 3> a, std::array<std::uint8_t, 3> b)
{
    uwqa::ImageBuffer img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto& c = ((x / cell) + (y / cell)) % 2 == 0 ? a : b;
            img.set(x, y, c[0], c[1], c[2]);
        }
    return img;
}

inline oracle::Rgb to_oracle(const uwqa::ImageBuffer& img)
{
    oracle::Rgb o;
    o.w = img.width();
    o.h = img.height();
    o.px.assign(img.rgb().begin(), img.rgb().end());
    return o;
}

// Twenty varied synthetic images: noise, gradients, checkerboards, tinted
// scenes, dark and saturated patches, sizes that do and do not divide the grid.
inline std::vector<uwqa::ImageBuffer> synthetic_corpus(std::uint64_t seed = 20240611)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> byte(0, 255);
    std::vector<uwqa::ImageBuffer> out;
    const int sizes[][2] = {{64, 64}, {40, 30}, {97, 61}, {10, 10}, {33, 47}, {80, 60}, {128, 20}, {21, 90},
                            {50, 50}, {73, 41}, {64, 48}, {11, 13}, {100, 75}, {45, 45}, {60, 32},
                            {37, 29}, {88, 66}, {16, 16}, {55, 70}, {31, 31}};
    for (int n = 0; n < 20; ++n) {
        const int w = sizes[n][0], h = sizes[n][1];
        uwqa::ImageBuffer img(w, h);
        const int kind = n % 5;
        const double tint[3] = {0.4 + 0.03 * n, 0.8, 1.0 - 0.02 * n};
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                int c[3];
                for (int k = 0; k < 3; ++k) {
                    double v = 0;
                    switch (kind) {
                    case 0: v = byte(rng); break;
                    case 1: v = 255.0 * (x + y) / (w + h) * tint[k] + (byte(rng) % 9); break;
                    case 2: v = ((x / 4 + y / 3) % 2 ? 200.0 : 30.0) * tint[k]; break;
                    case 3: v = (x < w / 2 ? 0.0 : 120.0 + 0.5 * byte(rng)) * tint[k]; break;
                    default: v = 128.0 + 100.0 * std::sin(0.3 * x + k) * std::cos(0.2 * y) * tint[k]; break;
                    }
                    c[k] = std::clamp(static_cast<int>(v), 0, 255);
                }
                img.set(x, y, static_cast<std::uint8_t>(c[0]), static_cast<std::uint8_t>(c[1]),
                        static_cast<std::uint8_t>(c[2]));
            }
        out.push_back(std::move(img));
    }
    return out;
}

} // namespace testing
