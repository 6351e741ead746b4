#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "uif/error.hpp"

namespace uif {

struct EdgeMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> mask;  // 1 = edge pixel

    bool at(int x, int y) const { return mask[static_cast<std::size_t>(y) * width + x] != 0; }
    std::size_t count() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1)); }
};

/// Thresholds are relative: high is a quantile of the nonzero gradient
/// magnitudes, low is a fraction of high.
struct CannyParams {
    double sigma = std::numbers::sqrt2;
    double high_quantile = 0.7;
    double low_ratio = 0.4;
};

namespace detail {

// Symmetric ("half-sample") reflection: -1 -> 0, n -> n-1.
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - i - 1;
    }
    return i;
}

inline std::vector<double> gaussian_kernel(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = w;
        sum += w;
    }
    for (auto& w : k) w /= sum;
    return k;
}

inline std::vector<double> separable_blur(std::span<const double> src, int width, int height,
                                          const std::vector<double>& kernel) {
    const int radius = static_cast<int>(kernel.size() / 2);
    std::vector<double> tmp(src.size());
    std::vector<double> dst(src.size());
    for (int y = 0; y < height; ++y) {
        const double* row = src.data() + static_cast<std::size_t>(y) * width;
        for (int x = 0; x < width; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                acc += kernel[static_cast<std::size_t>(k + radius)] * row[reflect_index(x + k, width)];
            }
            tmp[static_cast<std::size_t>(y) * width + x] = acc;
        }
    }
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                acc += kernel[static_cast<std::size_t>(k + radius)] *
                       tmp[static_cast<std::size_t>(reflect_index(y + k, height)) * width + x];
            }
            dst[static_cast<std::size_t>(y) * width + x] = acc;
        }
    }
    return dst;
}

}  // namespace detail

/// Canny edge detector on a single real-valued plane: Gaussian smoothing,
/// Sobel gradients, non-maximum suppression and 8-connected hysteresis.
inline EdgeMap canny(std::span<const double> plane, int width, int height, const CannyParams& params = {}) {
    if (width <= 0 || height <= 0 || plane.size() != static_cast<std::size_t>(width) * height)
        throw Error(ErrorKind::Shape, "canny: plane size does not match dimensions");

    const auto smooth = detail::separable_blur(plane, width, height, detail::gaussian_kernel(params.sigma));
    auto px = [&](int x, int y) {
        return smooth[static_cast<std::size_t>(detail::reflect_index(y, height)) * width +
                      detail::reflect_index(x, width)];
    };

    const std::size_t n = plane.size();
    std::vector<double> gx(n), gy(n), mag(n);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double dx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)) -
                              (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
            const double dy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)) -
                              (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            gx[i] = dx;
            gy[i] = dy;
            mag[i] = std::hypot(dx, dy);
        }
    }

    EdgeMap edges{width, height, std::vector<std::uint8_t>(n, 0)};

    std::vector<double> nonzero;
    nonzero.reserve(n);
    for (double m : mag) {
        if (m > 0.0) nonzero.push_back(m);
    }
    if (nonzero.empty()) return edges;
    std::sort(nonzero.begin(), nonzero.end());
    // nearest-rank quantile
    const auto rank = static_cast<std::size_t>(std::ceil(params.high_quantile * static_cast<double>(nonzero.size())));
    const double high = nonzero[std::clamp<std::size_t>(rank, 1, nonzero.size()) - 1];
    const double low = params.low_ratio * high;

    auto mag_at = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= width || y >= height) return 0.0;
        return mag[static_cast<std::size_t>(y) * width + x];
    };

    const double tan22 = std::tan(std::numbers::pi / 8.0);
    const double tan67 = std::tan(3.0 * std::numbers::pi / 8.0);
    std::vector<std::uint8_t> candidate(n, 0);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            const double m = mag[i];
            if (m <= 0.0 || m < low) continue;
            const double ax = std::abs(gx[i]);
            const double ay = std::abs(gy[i]);
            int dx = 0;
            int dy = 0;
            if (ay <= ax * tan22) {
                dx = 1;
            } else if (ay > ax * tan67) {
                dy = 1;
            } else {
                dx = 1;
                dy = (gx[i] * gy[i] > 0.0) ? 1 : -1;
            }
            // ties along a ridge resolve towards the positive neighbour
            if (m >= mag_at(x - dx, y - dy) && m > mag_at(x + dx, y + dy)) candidate[i] = 1;
        }
    }

    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < n; ++i) {
        if (candidate[i] && mag[i] >= high) {
            edges.mask[i] = 1;
            stack.push_back(i);
        }
    }
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const int x = static_cast<int>(i % width);
        const int y = static_cast<int>(i / width);
        for (int oy = -1; oy <= 1; ++oy) {
            for (int ox = -1; ox <= 1; ++ox) {
                const int nx = x + ox;
                const int ny = y + oy;
                if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
                const std::size_t j = static_cast<std::size_t>(ny) * width + nx;
                if (candidate[j] && !edges.mask[j]) {
                    edges.mask[j] = 1;
                    stack.push_back(j);
                }
            }
        }
    }
    return edges;
}

}  // namespace uif
