#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "uif/error.hpp"
#include "uif/image.hpp"

namespace uif {

struct GgdFit {
    double nu = 2.0;      // shape
    double sigma2 = 0.0;  // variance
};

/// Shape grid used by the moment-matching estimator: nu = 0.1, 0.101, ..., 10.
struct GgdShapeGrid {
    static constexpr int kFirst = 100;  // nu * 1000
    static constexpr int kLast = 10000;

    static constexpr double shape(int k) noexcept { return (kFirst + k) / 1000.0; }
    static constexpr int size() noexcept { return kLast - kFirst + 1; }
};

/// Generalized Gaussian moment ratio r(nu) = Gamma(2/nu)^2 / (Gamma(1/nu) Gamma(3/nu)),
/// which equals E[|x|]^2 / E[x^2] for a zero-mean GGD of shape nu.
inline double ggd_moment_ratio(double nu) {
    return std::exp(2.0 * std::lgamma(2.0 / nu) - std::lgamma(1.0 / nu) - std::lgamma(3.0 / nu));
}

namespace detail {

inline const std::vector<double>& ggd_ratio_table() {
    static const std::vector<double> table = [] {
        std::vector<double> t(GgdShapeGrid::size());
        for (int k = 0; k < GgdShapeGrid::size(); ++k) t[k] = ggd_moment_ratio(GgdShapeGrid::shape(k));
        return t;
    }();
    return table;
}

}  // namespace detail

/// Grid point whose moment ratio is closest to rho (first one on ties).
inline double ggd_shape_for_ratio(double rho) {
    const auto& table = detail::ggd_ratio_table();
    // r(nu) is increasing, so the closest point is adjacent to the lower bound
    const auto it = std::lower_bound(table.begin(), table.end(), rho);
    auto best = static_cast<int>(it - table.begin());
    if (best >= GgdShapeGrid::size()) {
        best = GgdShapeGrid::size() - 1;
    } else if (best > 0 && std::abs(table[best - 1] - rho) <= std::abs(table[best] - rho)) {
        best -= 1;
    }
    return GgdShapeGrid::shape(best);
}

/// Moment-matching GGD fit: rho = (mean |x - mean|)^2 / var, nu from the grid,
/// sigma2 = population variance about the mean.
inline GgdFit fit_ggd(std::span<const double> samples) {
    if (samples.empty()) throw Error(ErrorKind::DegenerateInput, "fit_ggd: no samples");
    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= n;
    double abs_dev = 0.0;
    double var = 0.0;
    for (double v : samples) {
        const double d = v - mean;
        abs_dev += std::abs(d);
        var += d * d;
    }
    abs_dev /= n;
    var /= n;
    if (!(var > 0.0)) throw Error(ErrorKind::DegenerateInput, "fit_ggd: zero variance");
    const double rho = abs_dev * abs_dev / var;
    return {ggd_shape_for_ratio(rho), var};
}

struct NaturalnessFeatures {
    double nu = 0.0;
    double sigma2 = 0.0;
    double c_cie = 0.0;
    double sigma_cie = 0.0;
};

/// Lightness floor applied wherever L appears in a denominator.
inline constexpr double kLightnessFloor = 1.0;

/// Shape reported for a flat brightness plane (zero variance), where the
/// moment ratio is undefined.
inline constexpr double kFlatPlaneShape = 2.0;

/// L_max / max(L_min, 1) over the L plane of a CIELab image.
inline double luminance_contrast(const PlanarImage& lab) {
    if (lab.channels() != 3 || lab.space() != ColorSpace::Cielab)
        throw Error(ErrorKind::Shape, "luminance_contrast expects a CIELab image");
    const auto l = lab.plane(0);
    const auto [lo, hi] = std::minmax_element(l.begin(), l.end());
    return *hi / std::max(*lo, kLightnessFloor);
}

/// Mean chroma-to-lightness ratio sqrt(a^2 + b^2) / max(L, 1).
inline double chroma_variance(const PlanarImage& lab) {
    if (lab.channels() != 3 || lab.space() != ColorSpace::Cielab)
        throw Error(ErrorKind::Shape, "chroma_variance expects a CIELab image");
    const auto l = lab.plane(0);
    const auto a = lab.plane(1);
    const auto b = lab.plane(2);
    double sum = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) {
        sum += std::sqrt(a[i] * a[i] + b[i] * b[i]) / std::max(l[i], kLightnessFloor);
    }
    return sum / static_cast<double>(l.size());
}

/// Naturalness features of an enhanced sRGB image. The GGD is fitted to the
/// mean-subtracted grayscale brightness; a flat image yields
/// {kFlatPlaneShape, 0}.
inline NaturalnessFeatures naturalness_features(const PlanarImage& enhanced) {
    detail::require_rgb(enhanced, "naturalness_features");
    const auto gray = to_grayscale(enhanced);
    const auto plane = gray.plane(0);
    double mean = 0.0;
    for (double v : plane) mean += v;
    mean /= static_cast<double>(plane.size());
    std::vector<double> centred(plane.begin(), plane.end());
    bool flat = true;
    for (auto& v : centred) {
        if (v != plane.front()) flat = false;
        v -= mean;
    }

    NaturalnessFeatures f;
    if (flat) {
        f.nu = kFlatPlaneShape;
        f.sigma2 = 0.0;
    } else {
        const auto fit = fit_ggd(centred);
        f.nu = fit.nu;
        f.sigma2 = fit.sigma2;
    }
    const auto lab = to_cielab(enhanced);
    f.c_cie = luminance_contrast(lab);
    f.sigma_cie = chroma_variance(lab);
    return f;
}

}  // namespace uif
