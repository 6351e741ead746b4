#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <list>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "uif/csv.hpp"
#include "uif/error.hpp"
#include "uif/features.hpp"

namespace uif {

struct SvrParams {
    double c = 0.1;        // penalty
    double epsilon = 0.01; // tube half-width
    double gamma = 1.0;    // RBF k(x, y) = exp(-gamma |x - y|^2)
    double tolerance = 1e-3;
    std::size_t max_iterations = 10'000'000;

    friend bool operator==(const SvrParams&, const SvrParams&) = default;
};

inline double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

namespace detail {

/// Kernel rows K(i, .) over the training set. Up to kFullGramLimit samples the
/// whole Gram matrix is stored; beyond that rows live in an LRU cache.
class KernelRows {
public:
    static constexpr std::size_t kFullGramLimit = 4096;

    KernelRows(const std::vector<std::vector<double>>& x, double gamma, std::size_t cache_bytes = 256u << 20,
               std::size_t full_limit = kFullGramLimit)
        : x_(x), gamma_(gamma), n_(x.size()) {
        if (n_ <= full_limit) {
            full_.resize(n_ * n_);
            for (std::size_t i = 0; i < n_; ++i) {
                full_[i * n_ + i] = 1.0;
                for (std::size_t j = i + 1; j < n_; ++j) {
                    const double k = rbf_kernel(x_[i], x_[j], gamma_);
                    full_[i * n_ + j] = k;
                    full_[j * n_ + i] = k;
                }
            }
        } else {
            capacity_ = std::max<std::size_t>(2, cache_bytes / (n_ * sizeof(double)));
        }
    }

    std::span<const double> row(std::size_t i) {
        if (!full_.empty()) return {full_.data() + i * n_, n_};
        if (auto it = index_.find(i); it != index_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);
            return it->second->second;
        }
        if (lru_.size() >= capacity_) {
            index_.erase(lru_.back().first);
            lru_.pop_back();
        }
        std::vector<double> r(n_);
        for (std::size_t j = 0; j < n_; ++j) r[j] = rbf_kernel(x_[i], x_[j], gamma_);
        lru_.emplace_front(i, std::move(r));
        index_[i] = lru_.begin();
        return lru_.front().second;
    }

    bool is_full_matrix() const noexcept { return !full_.empty(); }

private:
    const std::vector<std::vector<double>>& x_;
    double gamma_;
    std::size_t n_;
    std::vector<double> full_;
    std::size_t capacity_ = 0;
    std::list<std::pair<std::size_t, std::vector<double>>> lru_;
    std::unordered_map<std::size_t, decltype(lru_)::iterator> index_;
};

}  // namespace detail

/// Raw dual solution. alpha has 2n entries: alpha_i for i < n, alpha*_i at
/// n + i. coefs[i] = alpha_i - alpha*_i.
struct SvrDualSolution {
    std::vector<double> alpha;
    std::vector<double> coefs;
    double bias = 0.0;
    double objective = 0.0;  // 1/2 b'Qb + p'b in the 2n-variable form
    std::size_t iterations = 0;
    bool converged = false;
};

/// epsilon-SVR dual by SMO with the maximal-violating-pair working set and no
/// shrinking. Inputs are taken as already scaled.
inline SvrDualSolution solve_svr_dual(const std::vector<std::vector<double>>& x, std::span<const double> y,
                                      const SvrParams& params) {
    const std::size_t n = x.size();
    if (n == 0 || y.size() != n) throw Error(ErrorKind::InsufficientData, "solve_svr_dual: empty or mismatched data");
    const std::size_t l = 2 * n;
    const double cap = params.c;

    detail::KernelRows kernel(x, params.gamma);
    auto sign = [n](std::size_t t) { return t < n ? 1.0 : -1.0; };
    auto sample = [n](std::size_t t) { return t < n ? t : t - n; };

    std::vector<double> alpha(l, 0.0);
    std::vector<double> p(l), grad(l);
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = params.epsilon - y[i];
        p[i + n] = params.epsilon + y[i];
    }
    grad = p;

    SvrDualSolution sol;
    const std::size_t max_iter = std::max(params.max_iterations, 100 * l);
    for (;;) {
        // I_up: y=+1 below C, y=-1 above 0. I_low: the mirror sets.
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        std::size_t i = l;
        std::size_t j = l;
        for (std::size_t t = 0; t < l; ++t) {
            const double v = -sign(t) * grad[t];
            const bool up = sign(t) > 0 ? alpha[t] < cap : alpha[t] > 0.0;
            const bool low = sign(t) > 0 ? alpha[t] > 0.0 : alpha[t] < cap;
            if (up && v > gmax) {
                gmax = v;
                i = t;
            }
            if (low && v < gmin) {
                gmin = v;
                j = t;
            }
        }
        if (i == l || j == l || gmax - gmin < params.tolerance) {
            sol.converged = true;
            break;
        }
        if (sol.iterations >= max_iter) break;
        ++sol.iterations;

        const auto ki = kernel.row(sample(i));
        const double qij_kernel = ki[sample(j)];
        const double si = sign(i);
        const double sj = sign(j);
        const double q_ij = si * sj * qij_kernel;
        const double old_ai = alpha[i];
        const double old_aj = alpha[j];
        constexpr double tau = 1e-12;

        if (si != sj) {
            double quad = 2.0 + 2.0 * q_ij;  // Q_ii = Q_jj = 1 for RBF
            if (quad <= 0.0) quad = tau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if (diff > 0.0) {
                if (alpha[i] > cap) {
                    alpha[i] = cap;
                    alpha[j] = cap - diff;
                }
            } else if (alpha[j] > cap) {
                alpha[j] = cap;
                alpha[i] = cap + diff;
            }
        } else {
            double quad = 2.0 - 2.0 * q_ij;
            if (quad <= 0.0) quad = tau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > cap) {
                if (alpha[i] > cap) {
                    alpha[i] = cap;
                    alpha[j] = sum - cap;
                }
            } else if (alpha[j] < 0.0) {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if (sum > cap) {
                if (alpha[j] > cap) {
                    alpha[j] = cap;
                    alpha[i] = sum - cap;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        const double dai = alpha[i] - old_ai;
        const double daj = alpha[j] - old_aj;
        // row i sits at the LRU front, so fetching row j cannot evict it
        const auto kj = kernel.row(sample(j));
        for (std::size_t t = 0; t < l; ++t) {
            const double st = sign(t);
            const std::size_t s = sample(t);
            grad[t] += st * (si * ki[s] * dai + sj * kj[s] * daj);
        }
    }

    // bias from free variables, else the midpoint of the feasible interval
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t free_count = 0;
    for (std::size_t t = 0; t < l; ++t) {
        const double yg = sign(t) * grad[t];
        if (alpha[t] >= cap) {
            if (sign(t) < 0) {
                ub = std::min(ub, yg);
            } else {
                lb = std::max(lb, yg);
            }
        } else if (alpha[t] <= 0.0) {
            if (sign(t) > 0) {
                ub = std::min(ub, yg);
            } else {
                lb = std::max(lb, yg);
            }
        } else {
            ++free_count;
            sum_free += yg;
        }
    }
    const double rho = free_count > 0 ? sum_free / static_cast<double>(free_count) : (ub + lb) / 2.0;
    sol.bias = -rho;

    double obj = 0.0;
    for (std::size_t t = 0; t < l; ++t) obj += alpha[t] * (grad[t] + p[t]);
    sol.objective = obj / 2.0;

    sol.coefs.resize(n);
    for (std::size_t i = 0; i < n; ++i) sol.coefs[i] = alpha[i] - alpha[i + n];
    sol.alpha = std::move(alpha);
    return sol;
}

/// Trained regressor. Support vectors are stored in scaled space; the scaler
/// maps raw features (in feature_names order) into that space.
struct SvrModel {
    SvrParams params;
    double bias = 0.0;
    FeatureScaler scaler;
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> dual_coefs;

    std::size_t dimension() const noexcept { return scaler.dimension(); }

    double predict_scaled(std::span<const double> z) const {
        double q = bias;
        for (std::size_t i = 0; i < support_vectors.size(); ++i) {
            q += dual_coefs[i] * rbf_kernel(support_vectors[i], z, params.gamma);
        }
        return q;
    }

    double predict(std::span<const double> raw) const { return predict_scaled(scaler.apply(raw)); }

    double predict(const FeatureVector& fv) const {
        std::vector<double> raw;
        raw.reserve(feature_names.size());
        for (const auto& name : feature_names) {
            const auto it = std::find(kFeatureNames.begin(), kFeatureNames.end(), name);
            if (it == kFeatureNames.end()) throw Error(ErrorKind::Format, "model uses unknown feature '" + name + "'");
            raw.push_back(fv[static_cast<std::size_t>(it - kFeatureNames.begin())]);
        }
        return predict(raw);
    }

    friend bool operator==(const SvrModel&, const SvrModel&) = default;
};

/// Fits the scaler on the training rows, then solves the dual. Rows are raw
/// feature values; names label the columns in the model file.
inline SvrModel train_svr(const std::vector<std::vector<double>>& rows, std::span<const double> labels,
                          const SvrParams& params = {}, std::vector<std::string> names = {}) {
    if (rows.size() != labels.size()) throw Error(ErrorKind::Shape, "feature and label counts differ");
    if (rows.size() < 2) throw Error(ErrorKind::InsufficientData, "training needs at least two samples");
    if (!(params.c > 0.0) || !(params.epsilon >= 0.0) || !(params.gamma > 0.0) || !(params.tolerance > 0.0))
        throw Error(ErrorKind::Usage, "SVR hyperparameters must be positive");
    for (double v : labels) {
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "non-finite label");
    }
    const auto scaler = FeatureScaler::fit(std::span<const std::vector<double>>(rows));
    std::vector<std::vector<double>> scaled;
    scaled.reserve(rows.size());
    for (const auto& r : rows) scaled.push_back(scaler.apply(r));

    const auto sol = solve_svr_dual(scaled, labels, params);

    SvrModel model;
    model.params = params;
    model.bias = sol.bias;
    model.scaler = scaler;
    if (names.empty()) {
        for (std::size_t j = 0; j < scaler.dimension(); ++j) names.push_back("x" + std::to_string(j));
    }
    if (names.size() != scaler.dimension()) throw Error(ErrorKind::Shape, "feature name count mismatch");
    model.feature_names = std::move(names);
    for (std::size_t i = 0; i < scaled.size(); ++i) {
        if (sol.coefs[i] == 0.0) continue;
        model.support_vectors.push_back(scaled[i]);
        model.dual_coefs.push_back(sol.coefs[i]);
    }
    return model;
}

/// Trains on the feature groups selected by mask.
inline SvrModel train_svr(std::span<const FeatureVector> features, std::span<const double> labels,
                          const SvrParams& params = {}, FeatureMask mask = FeatureMask::all()) {
    mask.validate();
    std::vector<std::vector<double>> rows;
    rows.reserve(features.size());
    for (const auto& fv : features) rows.push_back(mask.select(fv));
    std::vector<std::string> names;
    for (auto i : mask.indices()) names.emplace_back(kFeatureNames[i]);
    return train_svr(rows, labels, params, std::move(names));
}

inline double predict(const SvrModel& model, const PlanarImage& original, const PlanarImage& enhanced) {
    return model.predict(extract_features(original, enhanced));
}

// ---------------------------------------------------------------------------
// .uifmodel text format

inline constexpr int kModelFormatVersion = 1;

inline std::string serialize_model(const SvrModel& m) {
    using csv::format_double;
    std::ostringstream out;
    out << "uifmodel " << kModelFormatVersion << '\n';
    out << "kernel rbf\n";
    out << "c " << format_double(m.params.c) << '\n';
    out << "epsilon " << format_double(m.params.epsilon) << '\n';
    out << "gamma " << format_double(m.params.gamma) << '\n';
    out << "tolerance " << format_double(m.params.tolerance) << '\n';
    out << "bias " << format_double(m.bias) << '\n';
    out << "features";
    for (const auto& n : m.feature_names) out << ' ' << n;
    out << "\nscaler_min";
    for (double v : m.scaler.mins()) out << ' ' << format_double(v);
    out << "\nscaler_max";
    for (double v : m.scaler.maxs()) out << ' ' << format_double(v);
    out << "\nsupport_vectors " << m.support_vectors.size() << '\n';
    for (std::size_t i = 0; i < m.support_vectors.size(); ++i) {
        out << format_double(m.dual_coefs[i]);
        for (double v : m.support_vectors[i]) out << ' ' << format_double(v);
        out << '\n';
    }
    out << "end\n";
    return out.str();
}

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

inline double model_number(const std::string& tok) {
    const auto v = csv::parse_double(tok);
    if (!v || !std::isfinite(*v)) throw Error(ErrorKind::Format, "bad number '" + tok + "' in model file");
    return *v;
}

}  // namespace detail

inline SvrModel parse_model(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    auto next = [&](const char* key) {
        if (!std::getline(in, line)) throw Error(ErrorKind::Format, std::string("model truncated before '") + key + "'");
        auto toks = detail::split_ws(line);
        if (toks.empty() || toks[0] != key) throw Error(ErrorKind::Format, std::string("expected '") + key + "'");
        toks.erase(toks.begin());
        return toks;
    };
    auto scalar = [&](const char* key) {
        const auto toks = next(key);
        if (toks.size() != 1) throw Error(ErrorKind::Format, std::string("bad '") + key + "' line");
        return detail::model_number(toks[0]);
    };

    const auto version = next("uifmodel");
    if (version.size() != 1 || version[0] != std::to_string(kModelFormatVersion))
        throw Error(ErrorKind::Format, "unsupported model version");
    const auto kernel = next("kernel");
    if (kernel.size() != 1 || kernel[0] != "rbf") throw Error(ErrorKind::Format, "unsupported kernel");

    SvrModel m;
    m.params.c = scalar("c");
    m.params.epsilon = scalar("epsilon");
    m.params.gamma = scalar("gamma");
    m.params.tolerance = scalar("tolerance");
    m.bias = scalar("bias");
    m.feature_names = next("features");
    std::vector<double> lo, hi;
    for (const auto& t : next("scaler_min")) lo.push_back(detail::model_number(t));
    for (const auto& t : next("scaler_max")) hi.push_back(detail::model_number(t));
    if (lo.size() != m.feature_names.size() || hi.size() != m.feature_names.size() || lo.empty())
        throw Error(ErrorKind::Format, "scaler ranges do not match feature list");
    m.scaler = FeatureScaler(std::move(lo), std::move(hi));

    const auto count_tok = next("support_vectors");
    const auto count = count_tok.size() == 1 ? csv::parse_int(count_tok[0]) : std::nullopt;
    if (!count || *count < 0) throw Error(ErrorKind::Format, "bad support vector count");
    const std::size_t dim = m.feature_names.size();
    for (long long i = 0; i < *count; ++i) {
        if (!std::getline(in, line)) throw Error(ErrorKind::Format, "model truncated in support vectors");
        const auto toks = detail::split_ws(line);
        if (toks.size() != dim + 1) throw Error(ErrorKind::Format, "support vector has wrong dimension");
        m.dual_coefs.push_back(detail::model_number(toks[0]));
        std::vector<double> sv;
        sv.reserve(dim);
        for (std::size_t k = 1; k < toks.size(); ++k) sv.push_back(detail::model_number(toks[k]));
        m.support_vectors.push_back(std::move(sv));
    }
    if (!std::getline(in, line) || csv::trim(line) != "end") throw Error(ErrorKind::Format, "model missing 'end'");
    return m;
}

inline void save_model(const SvrModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    out << serialize_model(model);
    if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

inline SvrModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open model '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

}  // namespace uif
