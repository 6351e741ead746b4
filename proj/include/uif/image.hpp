#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "uif/error.hpp"

namespace uif {

enum class ColorSpace { Srgb8BitScaled, Gray, Cielab };

/// Per-channel double raster, row-major. Sample (x, y) of channel c lives at
/// plane(c)[y * width + x].
class PlanarImage {
public:
    PlanarImage() = default;

    PlanarImage(int width, int height, int channels, ColorSpace space)
        : width_(width), height_(height), space_(space) {
        if (width <= 0 || height <= 0) throw Error(ErrorKind::Shape, "image dimensions must be positive");
        if (channels != 1 && channels != 3) throw Error(ErrorKind::Shape, "channel count must be 1 or 3");
        if ((space == ColorSpace::Gray) != (channels == 1))
            throw Error(ErrorKind::Shape, "color space does not match channel count");
        planes_.assign(static_cast<std::size_t>(channels),
                       std::vector<double>(static_cast<std::size_t>(width) * height, 0.0));
    }

    static PlanarImage filled(int width, int height, std::array<double, 3> rgb) {
        PlanarImage img(width, height, 3, ColorSpace::Srgb8BitScaled);
        for (int c = 0; c < 3; ++c) std::fill(img.planes_[c].begin(), img.planes_[c].end(), rgb[c]);
        return img;
    }

    static PlanarImage filled_gray(int width, int height, double value) {
        PlanarImage img(width, height, 1, ColorSpace::Gray);
        std::fill(img.planes_[0].begin(), img.planes_[0].end(), value);
        return img;
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return static_cast<int>(planes_.size()); }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
    ColorSpace space() const noexcept { return space_; }
    bool empty() const noexcept { return planes_.empty(); }

    std::span<const double> plane(int c) const { return planes_.at(static_cast<std::size_t>(c)); }
    std::span<double> plane(int c) { return planes_.at(static_cast<std::size_t>(c)); }

    double at(int c, int x, int y) const { return planes_[c][static_cast<std::size_t>(y) * width_ + x]; }
    double& at(int c, int x, int y) { return planes_[c][static_cast<std::size_t>(y) * width_ + x]; }

    bool same_size(const PlanarImage& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    friend bool operator==(const PlanarImage&, const PlanarImage&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    ColorSpace space_ = ColorSpace::Gray;
    std::vector<std::vector<double>> planes_;
};

namespace detail {

inline void require_rgb(const PlanarImage& img, const char* who) {
    if (img.channels() != 3 || img.space() != ColorSpace::Srgb8BitScaled)
        throw Error(ErrorKind::Shape, std::string(who) + " expects a 3-channel sRGB image");
}

inline void require_gray(const PlanarImage& img, const char* who) {
    if (img.channels() != 1) throw Error(ErrorKind::Shape, std::string(who) + " expects a grayscale image");
}

inline bool has_image_signature(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::array<unsigned char, 8> head{};
    in.read(reinterpret_cast<char*>(head.data()), head.size());
    const auto got = in.gcount();
    static constexpr std::array<unsigned char, 8> png{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (got >= 8 && std::equal(png.begin(), png.end(), head.begin())) return true;
    return got >= 3 && head[0] == 0xff && head[1] == 0xd8 && head[2] == 0xff;
}

// sRGB electro-optical transfer function, input in [0, 1].
inline double srgb_to_linear(double v) {
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

inline double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace detail

/// Decodes an 8-bit PNG or JPEG. Samples keep their 0..255 levels.
inline PlanarImage load_image(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec))
        throw Error(ErrorKind::Io, "cannot read '" + path.string() + "'");
    {
        std::ifstream probe(path, std::ios::binary);
        if (!probe) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
    }
    if (!detail::has_image_signature(path))
        throw Error(ErrorKind::Decode, "'" + path.string() + "' is not a PNG or JPEG file");

    cv::Mat bgr;
    try {
        bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    } catch (const cv::Exception& e) {
        throw Error(ErrorKind::Decode, "'" + path.string() + "': " + e.what());
    }
    if (bgr.empty() || bgr.depth() != CV_8U)
        throw Error(ErrorKind::Decode, "failed to decode '" + path.string() + "'");

    PlanarImage img(bgr.cols, bgr.rows, 3, ColorSpace::Srgb8BitScaled);
    auto r = img.plane(0);
    auto g = img.plane(1);
    auto b = img.plane(2);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * bgr.cols + x;
            b[i] = row[x][0];
            g[i] = row[x][1];
            r[i] = row[x][2];
        }
    }
    return img;
}

/// Writes an sRGB image as 8-bit PNG (values rounded and clamped to 0..255).
inline void save_png(const PlanarImage& img, const std::filesystem::path& path) {
    const bool gray = img.channels() == 1;
    cv::Mat out(img.height(), img.width(), gray ? CV_8UC1 : CV_8UC3);
    auto to8 = [](double v) { return static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L)); };
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            if (gray) {
                out.at<unsigned char>(y, x) = to8(img.at(0, x, y));
            } else {
                out.at<cv::Vec3b>(y, x) = {to8(img.at(2, x, y)), to8(img.at(1, x, y)), to8(img.at(0, x, y))};
            }
        }
    }
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), out);
    } catch (const cv::Exception&) {
        ok = false;
    }
    if (!ok) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
}

/// ITU-R BT.601 luma.
inline PlanarImage to_grayscale(const PlanarImage& img) {
    detail::require_rgb(img, "to_grayscale");
    PlanarImage gray(img.width(), img.height(), 1, ColorSpace::Gray);
    const auto r = img.plane(0);
    const auto g = img.plane(1);
    const auto b = img.plane(2);
    auto out = gray.plane(0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::clamp(0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i], 0.0, 255.0);
    }
    return gray;
}

/// sRGB -> linear RGB -> XYZ (D65) -> CIELab.
inline std::array<double, 3> srgb_to_lab(double r8, double g8, double b8) {
    const double r = detail::srgb_to_linear(r8 / 255.0);
    const double g = detail::srgb_to_linear(g8 / 255.0);
    const double b = detail::srgb_to_linear(b8 / 255.0);

    const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;

    constexpr double xn = 0.95047;
    constexpr double yn = 1.0;
    constexpr double zn = 1.08883;
    const double fx = detail::lab_f(x / xn);
    const double fy = detail::lab_f(y / yn);
    const double fz = detail::lab_f(z / zn);

    const double lightness = std::clamp(116.0 * fy - 16.0, 0.0, 100.0);
    const double a = std::clamp(500.0 * (fx - fy), -128.0, 127.0);
    const double bb = std::clamp(200.0 * (fy - fz), -128.0, 127.0);
    return {lightness, a, bb};
}

inline PlanarImage to_cielab(const PlanarImage& img) {
    detail::require_rgb(img, "to_cielab");
    PlanarImage lab(img.width(), img.height(), 3, ColorSpace::Cielab);
    const auto r = img.plane(0);
    const auto g = img.plane(1);
    const auto b = img.plane(2);
    auto l_out = lab.plane(0);
    auto a_out = lab.plane(1);
    auto b_out = lab.plane(2);
    for (std::size_t i = 0; i < r.size(); ++i) {
        const auto px = srgb_to_lab(r[i], g[i], b[i]);
        l_out[i] = px[0];
        a_out[i] = px[1];
        b_out[i] = px[2];
    }
    return lab;
}

/// Linearly maps a real plane [min, max] onto [0, 255] and writes it as PNG.
/// A constant plane is written as mid-gray.
inline void save_map_png(std::span<const double> values, int width, int height, const std::filesystem::path& path) {
    if (values.size() != static_cast<std::size_t>(width) * height)
        throw Error(ErrorKind::ShapeMismatch, "map size does not match dimensions");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double span = *hi - *lo;
    PlanarImage gray(width, height, 1, ColorSpace::Gray);
    auto out = gray.plane(0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = span > 0.0 ? 255.0 * (values[i] - *lo) / span : 127.5;
    }
    save_png(gray, path);
}

}  // namespace uif
