#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uif/csv.hpp"
#include "uif/error.hpp"
#include "uif/image.hpp"
#include "uif/naturalness.hpp"
#include "uif/sharpness.hpp"
#include "uif/structure.hpp"

namespace uif {

inline constexpr std::size_t kFeatureCount = 11;

// Frozen order; serialized headers and model files depend on it.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "nu", "sigma2", "c_cie", "sigma_cie",       // naturalness
    "mu_dark", "contrast", "c_edge", "entropy",  // sharpness
    "s_sigma", "s_mu", "s_ibar",                 // structure
};

struct FeatureVector {
    std::array<double, kFeatureCount> values{};

    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
    bool all_finite() const {
        for (double v : values) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }
    std::vector<double> to_vector() const { return {values.begin(), values.end()}; }

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

inline FeatureVector assemble_features(const NaturalnessFeatures& n, const SharpnessFeatures& s,
                                       const StructureFeatures& st) {
    return {{n.nu, n.sigma2, n.c_cie, n.sigma_cie, s.mu_dark, s.c, s.c_edge, s.e, st.s_sigma, st.s_mu, st.s_ibar}};
}

/// Naturalness and sharpness look at the enhanced image only; structure
/// compares it with the original.
inline FeatureVector extract_features(const PlanarImage& original, const PlanarImage& enhanced) {
    detail::require_rgb(original, "extract_features");
    detail::require_rgb(enhanced, "extract_features");
    if (!original.same_size(enhanced))
        throw Error(ErrorKind::ShapeMismatch, "original is " + std::to_string(original.width()) + "x" +
                                                  std::to_string(original.height()) + ", enhanced is " +
                                                  std::to_string(enhanced.width()) + "x" +
                                                  std::to_string(enhanced.height()));
    if (enhanced.width() < kTexturePatchSize || enhanced.height() < kTexturePatchSize)
        throw Error(ErrorKind::TooSmall, "enhanced image must be at least 64x64");
    auto fv = assemble_features(naturalness_features(enhanced), sharpness_features(enhanced),
                                structure_features(enhanced, original));
    if (!fv.all_finite()) throw Error(ErrorKind::NonFinite, "extracted a non-finite feature");
    return fv;
}

// ---------------------------------------------------------------------------
// Feature groups

enum class FeatureGroup : unsigned { Naturalness = 1u, Sharpness = 2u, Structure = 4u };

/// Subset of the three feature groups. Method numbers 1..7 follow the
/// ablation table: N, Sh, St, N+Sh, Sh+St, N+St, all.
class FeatureMask {
public:
    constexpr FeatureMask() = default;
    constexpr explicit FeatureMask(unsigned bits) : bits_(bits & 7u) {}

    static constexpr FeatureMask all() { return FeatureMask(7u); }

    static FeatureMask from_method(int method) {
        static constexpr std::array<unsigned, 7> table{1u, 2u, 4u, 3u, 6u, 5u, 7u};
        if (method < 1 || method > 7) throw Error(ErrorKind::InvalidMask, "method must be 1..7");
        return FeatureMask(table[static_cast<std::size_t>(method - 1)]);
    }

    /// Accepts "all", "method<N>", or group names joined by '+' or ','.
    static FeatureMask parse(std::string_view text) {
        const std::string s = csv::trim(text);
        if (s == "all") return all();
        if (s.starts_with("method")) {
            const auto n = csv::parse_int(std::string_view(s).substr(6));
            if (!n) throw Error(ErrorKind::InvalidMask, "bad method '" + s + "'");
            return from_method(static_cast<int>(*n));
        }
        unsigned bits = 0;
        std::size_t start = 0;
        while (start <= s.size()) {
            auto end = s.find_first_of("+,", start);
            if (end == std::string::npos) end = s.size();
            const std::string tok = csv::trim(std::string_view(s).substr(start, end - start));
            if (tok == "naturalness") {
                bits |= 1u;
            } else if (tok == "sharpness") {
                bits |= 2u;
            } else if (tok == "structure") {
                bits |= 4u;
            } else if (!tok.empty()) {
                throw Error(ErrorKind::InvalidMask, "unknown feature group '" + tok + "'");
            }
            start = end + 1;
        }
        FeatureMask m(bits);
        m.validate();
        return m;
    }

    constexpr bool has(FeatureGroup g) const { return (bits_ & static_cast<unsigned>(g)) != 0; }
    constexpr unsigned bits() const { return bits_; }
    constexpr bool empty() const { return bits_ == 0; }

    void validate() const {
        if (empty()) throw Error(ErrorKind::InvalidMask, "feature mask selects no feature group");
    }

    int method() const {
        validate();
        static constexpr std::array<int, 8> table{0, 1, 2, 4, 3, 6, 5, 7};
        return table[bits_];
    }

    std::string label() const {
        validate();
        std::string out;
        for (auto [g, name] : {std::pair{FeatureGroup::Naturalness, "naturalness"},
                               std::pair{FeatureGroup::Sharpness, "sharpness"},
                               std::pair{FeatureGroup::Structure, "structure"}}) {
            if (!has(g)) continue;
            if (!out.empty()) out += "+";
            out += name;
        }
        return out;
    }

    std::vector<std::size_t> indices() const {
        std::vector<std::size_t> idx;
        if (has(FeatureGroup::Naturalness)) idx.insert(idx.end(), {0, 1, 2, 3});
        if (has(FeatureGroup::Sharpness)) idx.insert(idx.end(), {4, 5, 6, 7});
        if (has(FeatureGroup::Structure)) idx.insert(idx.end(), {8, 9, 10});
        return idx;
    }

    std::vector<double> select(const FeatureVector& fv) const {
        std::vector<double> out;
        for (auto i : indices()) out.push_back(fv[i]);
        return out;
    }

    friend constexpr bool operator==(FeatureMask, FeatureMask) = default;

private:
    unsigned bits_ = 0;
};

// ---------------------------------------------------------------------------
// Scaling

/// Per-feature min-max map onto [-1, 1]. Constant training columns map to 0;
/// test values outside the training range extrapolate linearly.
class FeatureScaler {
public:
    FeatureScaler() = default;
    FeatureScaler(std::vector<double> mins, std::vector<double> maxs) : min_(std::move(mins)), max_(std::move(maxs)) {
        if (min_.size() != max_.size()) throw Error(ErrorKind::Shape, "scaler min/max size mismatch");
        for (std::size_t i = 0; i < min_.size(); ++i) {
            if (!(max_[i] >= min_[i])) throw Error(ErrorKind::Format, "scaler max < min");
        }
    }

    static FeatureScaler fit(std::span<const std::vector<double>> rows) {
        if (rows.size() < 2) throw Error(ErrorKind::InsufficientData, "scaler needs at least two vectors");
        const std::size_t dim = rows.front().size();
        std::vector<double> lo(rows.front()), hi(rows.front());
        for (const auto& r : rows) {
            if (r.size() != dim) throw Error(ErrorKind::Shape, "ragged feature matrix");
            for (std::size_t j = 0; j < dim; ++j) {
                if (!std::isfinite(r[j])) throw Error(ErrorKind::NonFinite, "non-finite feature value");
                lo[j] = std::min(lo[j], r[j]);
                hi[j] = std::max(hi[j], r[j]);
            }
        }
        return {std::move(lo), std::move(hi)};
    }

    static FeatureScaler fit(std::span<const FeatureVector> vectors) {
        std::vector<std::vector<double>> rows;
        rows.reserve(vectors.size());
        for (const auto& v : vectors) rows.push_back(v.to_vector());
        return fit(std::span<const std::vector<double>>(rows));
    }

    std::size_t dimension() const noexcept { return min_.size(); }
    const std::vector<double>& mins() const noexcept { return min_; }
    const std::vector<double>& maxs() const noexcept { return max_; }

    std::vector<double> apply(std::span<const double> x) const {
        check(x.size());
        std::vector<double> out(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double range = max_[j] - min_[j];
            out[j] = range > 0.0 ? -1.0 + 2.0 * (x[j] - min_[j]) / range : 0.0;
        }
        return out;
    }

    FeatureVector apply(const FeatureVector& v) const {
        const auto scaled = apply(std::span<const double>(v.values));
        FeatureVector out;
        std::copy(scaled.begin(), scaled.end(), out.values.begin());
        return out;
    }

    /// Inverse map; constant columns return their single training value.
    std::vector<double> invert(std::span<const double> z) const {
        check(z.size());
        std::vector<double> out(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) {
            const double range = max_[j] - min_[j];
            out[j] = range > 0.0 ? min_[j] + (z[j] + 1.0) * range / 2.0 : min_[j];
        }
        return out;
    }

    friend bool operator==(const FeatureScaler&, const FeatureScaler&) = default;

private:
    void check(std::size_t n) const {
        if (n != min_.size()) throw Error(ErrorKind::Shape, "feature dimension does not match scaler");
    }

    std::vector<double> min_;
    std::vector<double> max_;
};

// ---------------------------------------------------------------------------
// CSV dump

inline std::string feature_csv_header(bool with_mos) {
    std::string h = "id";
    for (auto name : kFeatureNames) {
        h += ",";
        h += name;
    }
    if (with_mos) h += ",mos";
    return h;
}

inline void write_feature_row(std::ostream& out, std::string_view id, const FeatureVector& fv,
                              std::optional<double> mos) {
    out << csv::quote(id);
    for (double v : fv.values) out << ',' << csv::format_double(v);
    if (mos) out << ',' << csv::format_double(*mos);
    out << '\n';
}

}  // namespace uif
