#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>

#include "uif/canny.hpp"
#include "uif/error.hpp"
#include "uif/image.hpp"

namespace uif {

inline constexpr int kTexturePatchSize = 64;
inline constexpr double kTextureEdgeDensity = 0.002;
inline constexpr int kEdgeBlockSize = 5;
inline constexpr std::array<double, 3> kChannelWeights{0.299, 0.587, 0.114};

/// Mean of the per-pixel minimum over R, G, B (no spatial window).
inline double dark_channel_mean(const PlanarImage& enhanced) {
    detail::require_rgb(enhanced, "dark_channel_mean");
    const auto r = enhanced.plane(0);
    const auto g = enhanced.plane(1);
    const auto b = enhanced.plane(2);
    double sum = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) sum += std::min({r[i], g[i], b[i]});
    return sum / static_cast<double>(r.size());
}

/// Sum of the standard deviations of textured 64x64 patches. Partial border
/// patches are dropped; a patch is textured when its Canny edge density
/// exceeds 0.2%.
inline double textured_patch_contrast(const PlanarImage& gray) {
    detail::require_gray(gray, "textured_patch_contrast");
    const int w = gray.width();
    const int h = gray.height();
    const int cols = w / kTexturePatchSize;
    const int rows = h / kTexturePatchSize;
    if (cols == 0 || rows == 0)
        throw Error(ErrorKind::TooSmall, "textured_patch_contrast needs at least one 64x64 patch");

    const auto plane = gray.plane(0);
    const auto edges = canny(plane, w, h);
    constexpr double patch_area = kTexturePatchSize * kTexturePatchSize;

    double total = 0.0;
    for (int py = 0; py < rows; ++py) {
        for (int px = 0; px < cols; ++px) {
            const int x0 = px * kTexturePatchSize;
            const int y0 = py * kTexturePatchSize;
            std::size_t edge_count = 0;
            double mean = 0.0;
            for (int y = y0; y < y0 + kTexturePatchSize; ++y) {
                for (int x = x0; x < x0 + kTexturePatchSize; ++x) {
                    edge_count += edges.at(x, y) ? 1 : 0;
                    mean += plane[static_cast<std::size_t>(y) * w + x];
                }
            }
            if (static_cast<double>(edge_count) / patch_area <= kTextureEdgeDensity) continue;
            mean /= patch_area;
            double var = 0.0;
            for (int y = y0; y < y0 + kTexturePatchSize; ++y) {
                for (int x = x0; x < x0 + kTexturePatchSize; ++x) {
                    const double d = plane[static_cast<std::size_t>(y) * w + x] - mean;
                    var += d * d;
                }
            }
            total += std::sqrt(var / patch_area);
        }
    }
    return total;
}

/// Single-channel edge block term: (2 / count) * sum over edge-containing
/// 5x5 blocks of ln(max / max(min, 1)). Zero when no block holds an edge.
/// Both extremes are floored at 1 so every log term is >= 0.
inline double edge_block_term(std::span<const double> plane, const EdgeMap& edges) {
    const int w = edges.width;
    const int h = edges.height;
    if (plane.size() != static_cast<std::size_t>(w) * h)
        throw Error(ErrorKind::ShapeMismatch, "edge_block_term: plane and edge map differ in size");
    const int cols = w / kEdgeBlockSize;
    const int rows = h / kEdgeBlockSize;
    if (cols == 0 || rows == 0) throw Error(ErrorKind::TooSmall, "edge_block_term needs at least one 5x5 block");

    double sum = 0.0;
    std::size_t blocks = 0;
    for (int by = 0; by < rows; ++by) {
        for (int bx = 0; bx < cols; ++bx) {
            bool has_edge = false;
            double lo = plane[static_cast<std::size_t>(by * kEdgeBlockSize) * w + bx * kEdgeBlockSize];
            double hi = lo;
            for (int y = by * kEdgeBlockSize; y < (by + 1) * kEdgeBlockSize; ++y) {
                for (int x = bx * kEdgeBlockSize; x < (bx + 1) * kEdgeBlockSize; ++x) {
                    const double v = plane[static_cast<std::size_t>(y) * w + x];
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                    has_edge = has_edge || edges.at(x, y);
                }
            }
            if (!has_edge) continue;
            ++blocks;
            sum += std::log(std::max(hi, 1.0) / std::max(lo, 1.0));
        }
    }
    return blocks == 0 ? 0.0 : 2.0 * sum / static_cast<double>(blocks);
}

/// Luma-weighted sum of per-channel edge block terms, each channel using its
/// own Canny edge map.
inline double edge_block_contrast(const PlanarImage& enhanced) {
    detail::require_rgb(enhanced, "edge_block_contrast");
    if (enhanced.width() < kEdgeBlockSize || enhanced.height() < kEdgeBlockSize)
        throw Error(ErrorKind::TooSmall, "edge_block_contrast needs at least one 5x5 block");
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        const auto plane = enhanced.plane(c);
        const auto edges = canny(plane, enhanced.width(), enhanced.height());
        total += kChannelWeights[static_cast<std::size_t>(c)] * edge_block_term(plane, edges);
    }
    return total;
}

/// Shannon entropy in bits of the 256-bin histogram of rounded brightness.
inline double entropy(const PlanarImage& gray) {
    detail::require_gray(gray, "entropy");
    std::array<std::size_t, 256> hist{};
    for (double v : gray.plane(0)) {
        const long level = std::clamp(std::lround(v), 0L, 255L);
        ++hist[static_cast<std::size_t>(level)];
    }
    const double n = static_cast<double>(gray.pixel_count());
    double e = 0.0;
    for (std::size_t count : hist) {
        if (count == 0) continue;
        const double p = static_cast<double>(count) / n;
        e -= p * std::log2(p);
    }
    return e;
}

struct SharpnessFeatures {
    double mu_dark = 0.0;
    double c = 0.0;
    double c_edge = 0.0;
    double e = 0.0;
};

inline SharpnessFeatures sharpness_features(const PlanarImage& enhanced) {
    detail::require_rgb(enhanced, "sharpness_features");
    const auto gray = to_grayscale(enhanced);
    return {dark_channel_mean(enhanced), textured_patch_contrast(gray), edge_block_contrast(enhanced), entropy(gray)};
}

}  // namespace uif
