#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "uif/error.hpp"

namespace uif {

namespace detail {

inline void require_pairable(std::span<const double> a, std::span<const double> b, const char* who) {
    if (a.size() != b.size()) throw Error(ErrorKind::Shape, std::string(who) + ": lengths differ");
    if (a.size() < 2) throw Error(ErrorKind::InsufficientData, std::string(who) + ": need at least two values");
}

inline bool is_constant(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace detail

/// 1-based ranks, ties share the average of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
        const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
        i = j;
    }
    return ranks;
}

inline double plcc(std::span<const double> pred, std::span<const double> truth) {
    detail::require_pairable(pred, truth, "plcc");
    if (detail::is_constant(pred) || detail::is_constant(truth))
        throw Error(ErrorKind::DegenerateInput, "plcc: constant input");
    const double n = static_cast<double>(pred.size());
    const double mp = std::accumulate(pred.begin(), pred.end(), 0.0) / n;
    const double mt = std::accumulate(truth.begin(), truth.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double dx = pred[i] - mp;
        const double dy = truth[i] - mt;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Spearman correlation: Pearson correlation of average ranks.
inline double srcc(std::span<const double> pred, std::span<const double> truth) {
    detail::require_pairable(pred, truth, "srcc");
    if (detail::is_constant(pred) || detail::is_constant(truth))
        throw Error(ErrorKind::DegenerateInput, "srcc: constant input");
    const auto rp = average_ranks(pred);
    const auto rt = average_ranks(truth);
    return plcc(rp, rt);
}

// ---------------------------------------------------------------------------
// Five-parameter logistic mapping, optional before PLCC.

struct Logistic5 {
    std::array<double, 5> beta{0.0, 0.0, 0.0, 1.0, 0.0};  // identity by default

    double operator()(double x) const {
        const double s = 1.0 / (1.0 + std::exp(beta[1] * (x - beta[2])));
        return beta[0] * (0.5 - s) + beta[3] * x + beta[4];
    }
};

namespace detail {

// Gaussian elimination with partial pivoting; false if singular.
template <std::size_t N>
bool solve_linear(std::array<std::array<double, N>, N> a, std::array<double, N> b, std::array<double, N>& x) {
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < N; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        if (std::abs(a[piv][col]) < 1e-300) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < N; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < N; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t r = N; r-- > 0;) {
        double s = b[r];
        for (std::size_t c = r + 1; c < N; ++c) s -= a[r][c] * x[c];
        x[r] = s / a[r][r];
    }
    return true;
}

}  // namespace detail

/// Least-squares fit by Levenberg-Marquardt. Falls back to the identity map
/// when the fit does not improve on it.
inline Logistic5 fit_logistic5(std::span<const double> x, std::span<const double> y) {
    detail::require_pairable(x, y, "fit_logistic5");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sx = 0.0;
    for (double v : x) sx += (v - mx) * (v - mx);
    sx = std::sqrt(sx / n);
    const auto [ylo, yhi] = std::minmax_element(y.begin(), y.end());

    auto sse = [&](const Logistic5& f) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += (y[i] - f(x[i])) * (y[i] - f(x[i]));
        return s;
    };

    Logistic5 identity;
    Logistic5 cur;
    cur.beta = {*yhi - *ylo, sx > 0.0 ? 1.0 / sx : 1.0, mx, 0.0, my};
    double err = sse(cur);
    double lambda = 1e-3;
    for (int iter = 0; iter < 200; ++iter) {
        std::array<std::array<double, 5>, 5> jtj{};
        std::array<double, 5> jtr{};
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto& b = cur.beta;
            const double s = 1.0 / (1.0 + std::exp(b[1] * (x[i] - b[2])));
            const double ds = s * (1.0 - s);
            const std::array<double, 5> jac{0.5 - s, b[0] * ds * (x[i] - b[2]), -b[0] * ds * b[1], x[i], 1.0};
            const double r = y[i] - cur(x[i]);
            for (std::size_t p = 0; p < 5; ++p) {
                jtr[p] += jac[p] * r;
                for (std::size_t q = 0; q < 5; ++q) jtj[p][q] += jac[p] * jac[q];
            }
        }
        bool improved = false;
        while (lambda < 1e12) {
            auto a = jtj;
            for (std::size_t p = 0; p < 5; ++p) a[p][p] += lambda * std::max(jtj[p][p], 1e-12);
            std::array<double, 5> step{};
            if (detail::solve_linear(a, jtr, step)) {
                Logistic5 trial = cur;
                for (std::size_t p = 0; p < 5; ++p) trial.beta[p] += step[p];
                const double e = sse(trial);
                if (std::isfinite(e) && e < err) {
                    const double gain = err - e;
                    cur = trial;
                    err = e;
                    lambda = std::max(lambda / 10.0, 1e-12);
                    improved = gain > 1e-12 * (1.0 + err);
                    break;
                }
            }
            lambda *= 10.0;
        }
        if (!improved) break;
    }
    return err <= sse(identity) ? cur : identity;
}

}  // namespace uif
