#include "uwqa/image.hpp"

#include "uwqa/error.hpp"
#include "uwqa/kernels.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>

namespace uwqa {

ImageBuffer::ImageBuffer(int width, int height)
    : ImageBuffer(width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height * 3))
{
}

ImageBuffer::ImageBuffer(int width, int height, std::vector<std::uint8_t> rgb)
    : width_(width), height_(height), rgb_(std::move(rgb))
{
    if (width < 1 || height < 1)
        throw Error(ErrorKind::Decode, "image dimensions must be >= 1");
    if (rgb_.size() != static_cast<std::size_t>(width) * height * 3)
        throw Error(ErrorKind::Decode, "pixel array length does not match dimensions");
}

void ImageBuffer::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b)
{
    const std::size_t i = index(x, y);
    rgb_[i] = r;
    rgb_[i + 1] = g;
    rgb_[i + 2] = b;
}

Plane::Plane(int width, int height, double fill)
    : width_(width), height_(height), values_(static_cast<std::size_t>(width) * height, fill)
{
}

Plane::Plane(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values))
{
}

namespace {

bool is_png(std::span<const std::uint8_t> bytes)
{
    static constexpr std::array<std::uint8_t, 8> sig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    return bytes.size() >= sig.size() && std::equal(sig.begin(), sig.end(), bytes.begin());
}

bool is_jpeg(std::span<const std::uint8_t> bytes)
{
    return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

// PNG streams must end with an IEND chunk; libpng otherwise hands back
// partially decoded rows without signalling an error.
bool png_has_iend(std::span<const std::uint8_t> bytes)
{
    static constexpr std::array<std::uint8_t, 4> iend{'I', 'E', 'N', 'D'};
    return bytes.size() >= 20 &&
           std::search(bytes.end() - 12, bytes.end(), iend.begin(), iend.end()) != bytes.end();
}

} // namespace

ImageBuffer decode_image(std::span<const std::uint8_t> bytes)
{
    const bool png = is_png(bytes);
    if (!png && !is_jpeg(bytes))
        throw Error(ErrorKind::Decode, "unsupported image format (expected PNG or JPEG)");
    if (png && !png_has_iend(bytes))
        throw Error(ErrorKind::Decode, "truncated PNG stream");

    cv::Mat encoded(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat bgr;
    try {
        // IMREAD_COLOR drops alpha and reduces 16-bit samples to 8-bit.
        bgr = cv::imdecode(encoded, cv::IMREAD_COLOR);
    } catch (const cv::Exception& e) {
        throw Error(ErrorKind::Decode, std::string("decode failed: ") + e.what());
    }
    if (bgr.empty())
        throw Error(ErrorKind::Decode, "malformed image stream");

    ImageBuffer img(bgr.cols, bgr.rows);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x)
            img.set(x, y, row[x][2], row[x][1], row[x][0]);
    }
    return img;
}

ImageBuffer read_image(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Io, "cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_image(bytes);
    } catch (const Error& e) {
        throw Error(e.kind(), path + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& img)
{
    cv::Mat bgr(img.height(), img.width(), CV_8UC3);
    for (int y = 0; y < img.height(); ++y) {
        auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < img.width(); ++x)
            row[x] = cv::Vec3b(img.b(x, y), img.g(x, y), img.r(x, y));
    }
    std::vector<std::uint8_t> out;
    if (!cv::imencode(".png", bgr, out))
        throw Error(ErrorKind::Io, "PNG encoding failed");
    return out;
}

Plane to_grayscale(const ImageBuffer& img)
{
    Plane gray(img.width(), img.height());
    kernels::active().luma(img.rgb().data(), gray.values().data(), img.pixel_count());
    return gray;
}

namespace {

// sRGB -> XYZ (D65). Reference white is the image of (1, 1, 1) so white maps to L = 100 exactly.
constexpr double m_xr = 0.4124564, m_xg = 0.3575761, m_xb = 0.1804375;
constexpr double m_yr = 0.2126729, m_yg = 0.7151522, m_yb = 0.0721750;
constexpr double m_zr = 0.0193339, m_zg = 0.1191920, m_zb = 0.9503041;
constexpr double white_x = m_xr + m_xg + m_xb;
constexpr double white_y = m_yr + m_yg + m_yb;
constexpr double white_z = m_zr + m_zg + m_zb;

const std::array<double, 256>& srgb_to_linear_table()
{
    static const std::array<double, 256> table = [] {
        std::array<double, 256> t{};
        for (int i = 0; i < 256; ++i) {
            const double c = i / 255.0;
            t[i] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
        }
        return t;
    }();
    return table;
}

double lab_f(double t)
{
    constexpr double delta = 6.0 / 29.0;
    if (t > delta * delta * delta)
        return std::cbrt(t);
    return t / (3.0 * delta * delta) + 4.0 / 29.0;
}

} // namespace

LabImage rgb_to_lab(const ImageBuffer& img)
{
    const auto& lin = srgb_to_linear_table();
    const std::size_t n = img.pixel_count();
    LabImage lab{img.width(), img.height(), std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
    const auto rgb = img.rgb();
    for (std::size_t i = 0; i < n; ++i) {
        const double r = lin[rgb[3 * i]];
        const double g = lin[rgb[3 * i + 1]];
        const double b = lin[rgb[3 * i + 2]];
        const double fx = lab_f((m_xr * r + m_xg * g + m_xb * b) / white_x);
        const double fy = lab_f((m_yr * r + m_yg * g + m_yb * b) / white_y);
        const double fz = lab_f((m_zr * r + m_zg * g + m_zb * b) / white_z);
        lab.l[i] = std::clamp(116.0 * fy - 16.0, 0.0, 100.0);
        lab.a[i] = 500.0 * (fx - fy);
        lab.b[i] = 200.0 * (fy - fz);
    }
    return lab;
}

std::vector<PlaneView> partition_blocks(const Plane& plane, int k1, int k2)
{
    if (k1 < 1 || k2 < 1)
        throw Error(ErrorKind::InvalidPartition, "block counts must be >= 1");
    if (k1 > plane.width() || k2 > plane.height())
        throw Error(ErrorKind::InvalidPartition,
                    "block grid " + std::to_string(k1) + "x" + std::to_string(k2) + " exceeds plane " +
                        std::to_string(plane.width()) + "x" + std::to_string(plane.height()));
    const int bw = plane.width() / k1;
    const int bh = plane.height() / k2;
    std::vector<PlaneView> blocks;
    blocks.reserve(static_cast<std::size_t>(k1) * k2);
    for (int j = 0; j < k2; ++j)
        for (int i = 0; i < k1; ++i)
            blocks.push_back(PlaneView{&plane, i * bw, j * bh, bw, bh});
    return blocks;
}

} // namespace uwqa
