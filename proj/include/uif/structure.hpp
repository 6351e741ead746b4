#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "uif/canny.hpp"
#include "uif/error.hpp"
#include "uif/image.hpp"

namespace uif {

inline constexpr int kLocalWindow = 7;
inline constexpr double kVarianceConstant = (0.03 * 255.0) * (0.03 * 255.0);
inline constexpr double kMeanConstant = (0.01 * 255.0) * (0.01 * 255.0);
inline constexpr double kNormalizedConstant = 0.5;
inline constexpr double kNormalizeFloor = 1.0;

struct SimilarityMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    double mean() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s / static_cast<double>(values.size());
    }
};

struct LocalStats {
    int width = 0;
    int height = 0;
    std::vector<double> mean;
    std::vector<double> stddev;
};

/// Box-window mean and (population) standard deviation with symmetric border
/// padding. Two-pass per window so flat neighbourhoods give exactly zero.
inline LocalStats local_stats(const PlanarImage& gray, int window = kLocalWindow) {
    detail::require_gray(gray, "local_stats");
    if (window < 1 || window % 2 == 0) throw Error(ErrorKind::Shape, "local_stats window must be odd");
    const int w = gray.width();
    const int h = gray.height();
    if (w < window || h < window) throw Error(ErrorKind::TooSmall, "image smaller than the local window");

    const int r = window / 2;
    const auto plane = gray.plane(0);
    const double area = static_cast<double>(window) * window;
    LocalStats out{w, h, std::vector<double>(plane.size()), std::vector<double>(plane.size())};
    std::vector<double> patch(static_cast<std::size_t>(window) * window);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::size_t k = 0;
            double sum = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                const std::size_t row = static_cast<std::size_t>(detail::reflect_index(y + dy, h)) * w;
                for (int dx = -r; dx <= r; ++dx) {
                    const double v = plane[row + detail::reflect_index(x + dx, w)];
                    patch[k++] = v;
                    sum += v;
                }
            }
            const double mu = sum / area;
            double ss = 0.0;
            for (double v : patch) ss += (v - mu) * (v - mu);
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            out.mean[i] = mu;
            out.stddev[i] = std::sqrt(ss / area);
        }
    }
    return out;
}

/// (2ab + c) / (a^2 + b^2 + c), written so that a == b gives exactly 1.
inline double similarity_ratio(double a, double b, double c) {
    return (2.0 * a * b + c) / (a * a + b * b + c);
}

namespace detail {

inline void require_pair(const PlanarImage& enh, const PlanarImage& orig) {
    require_gray(enh, "structure similarity");
    require_gray(orig, "structure similarity");
    if (!enh.same_size(orig)) throw Error(ErrorKind::ShapeMismatch, "enhanced and original sizes differ");
}

inline SimilarityMap combine(const std::vector<double>& a, const std::vector<double>& b, int w, int h, double c,
                             bool bounded) {
    SimilarityMap map{w, h, std::vector<double>(a.size())};
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double s = similarity_ratio(a[i], b[i], c);
        map.values[i] = bounded ? std::min(s, 1.0) : s;
    }
    return map;
}

inline std::vector<double> normalized_plane(const PlanarImage& gray, const LocalStats& stats) {
    const auto plane = gray.plane(0);
    std::vector<double> out(plane.size());
    for (std::size_t i = 0; i < plane.size(); ++i) {
        out[i] = (plane[i] - stats.mean[i]) / (stats.stddev[i] + kNormalizeFloor);
    }
    return out;
}

}  // namespace detail

inline SimilarityMap variance_similarity(const LocalStats& enh, const LocalStats& orig) {
    return detail::combine(enh.stddev, orig.stddev, enh.width, enh.height, kVarianceConstant, true);
}

inline SimilarityMap mean_similarity(const LocalStats& enh, const LocalStats& orig) {
    return detail::combine(enh.mean, orig.mean, enh.width, enh.height, kMeanConstant, true);
}

inline SimilarityMap variance_similarity(const PlanarImage& enh, const PlanarImage& orig) {
    detail::require_pair(enh, orig);
    return variance_similarity(local_stats(enh), local_stats(orig));
}

inline SimilarityMap mean_similarity(const PlanarImage& enh, const PlanarImage& orig) {
    detail::require_pair(enh, orig);
    return mean_similarity(local_stats(enh), local_stats(orig));
}

// Not clamped: anticorrelated normalized planes give negative values.
inline SimilarityMap normalized_similarity(const PlanarImage& enh, const PlanarImage& orig) {
    detail::require_pair(enh, orig);
    const auto se = local_stats(enh);
    const auto so = local_stats(orig);
    return detail::combine(detail::normalized_plane(enh, se), detail::normalized_plane(orig, so), enh.width(),
                           enh.height(), kNormalizedConstant, false);
}

struct StructureFeatures {
    double s_sigma = 0.0;
    double s_mu = 0.0;
    double s_ibar = 0.0;
};

struct StructureMaps {
    SimilarityMap variance;
    SimilarityMap mean;
    SimilarityMap normalized;
};

/// Accepts sRGB or grayscale inputs; sRGB is converted with BT.601 luma.
inline StructureMaps structure_maps(const PlanarImage& enh, const PlanarImage& orig) {
    if (!enh.same_size(orig)) throw Error(ErrorKind::ShapeMismatch, "enhanced and original sizes differ");
    const auto ge = enh.channels() == 3 ? to_grayscale(enh) : enh;
    const auto go = orig.channels() == 3 ? to_grayscale(orig) : orig;
    detail::require_pair(ge, go);
    const auto se = local_stats(ge);
    const auto so = local_stats(go);
    return {variance_similarity(se, so), mean_similarity(se, so),
            detail::combine(detail::normalized_plane(ge, se), detail::normalized_plane(go, so), ge.width(),
                            ge.height(), kNormalizedConstant, false)};
}

inline StructureFeatures structure_features(const PlanarImage& enh, const PlanarImage& orig) {
    const auto maps = structure_maps(enh, orig);
    return {maps.variance.mean(), maps.mean.mean(), maps.normalized.mean()};
}

}  // namespace uif
