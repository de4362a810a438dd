#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace uwqa {

// Decoded 8-bit RGB raster, row-major, interleaved r,g,b.
class ImageBuffer {
public:
    ImageBuffer() = default;
    ImageBuffer(int width, int height);
    ImageBuffer(int width, int height, std::vector<std::uint8_t> rgb);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }

    std::span<const std::uint8_t> rgb() const noexcept { return rgb_; }
    std::span<std::uint8_t> rgb() noexcept { return rgb_; }

    std::uint8_t r(int x, int y) const { return rgb_[index(x, y)]; }
    std::uint8_t g(int x, int y) const { return rgb_[index(x, y) + 1]; }
    std::uint8_t b(int x, int y) const { return rgb_[index(x, y) + 2]; }
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);

    bool operator==(const ImageBuffer&) const = default;

private:
    std::size_t index(int x, int y) const noexcept
    {
        return (static_cast<std::size_t>(y) * width_ + x) * 3;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> rgb_;
};

// Real-valued scalar field, one value per pixel.
class Plane {
public:
    Plane() = default;
    Plane(int width, int height, double fill = 0.0);
    Plane(int width, int height, std::vector<double> values);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return values_.size(); }

    double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    double& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    std::span<const double> row(int y) const
    {
        return std::span<const double>(values_).subspan(static_cast<std::size_t>(y) * width_, width_);
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

// Non-owning rectangular window into a Plane.
struct PlaneView {
    const Plane* plane = nullptr;
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;

    double at(int x, int y) const { return plane->at(x0 + x, y0 + y); }
    std::span<const double> row(int y) const { return plane->row(y0 + y).subspan(x0, width); }
    std::size_t size() const noexcept { return static_cast<std::size_t>(width) * height; }
};

// Planar CIELAB image; L in [0, 100].
struct LabImage {
    int width = 0;
    int height = 0;
    std::vector<double> l;
    std::vector<double> a;
    std::vector<double> b;
};

// Throws Error{Decode} on malformed streams or formats other than PNG/JPEG.
ImageBuffer decode_image(std::span<const std::uint8_t> bytes);
ImageBuffer read_image(const std::string& path);
// Lossless PNG encoding; used for fixtures and the review service.
std::vector<std::uint8_t> encode_png(const ImageBuffer& img);

// BT.601 luma: 0.299 R + 0.587 G + 0.114 B.
Plane to_grayscale(const ImageBuffer& img);

// sRGB (D65) -> linear RGB -> XYZ -> CIELAB.
LabImage rgb_to_lab(const ImageBuffer& img);

// Tiles the plane into k1 (along width) x k2 (along height) equal blocks.
// Remainder pixels on the right and bottom edges are dropped.
std::vector<PlaneView> partition_blocks(const Plane& plane, int k1, int k2);

} // namespace uwqa
