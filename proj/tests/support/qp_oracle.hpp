#pragma once

// Exact solver for tiny epsilon-SVR duals by enumerating the state of every
// coefficient (at -C, free negative, zero, free positive, at +C) and solving
// the stationarity system of each pattern. Independent of the SMO code path.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace uif::synth {

struct QpOracleResult {
    std::vector<double> coefs;
    double objective = std::numeric_limits<double>::infinity();
};

/// Minimizes 1/2 c'Kc - y'c + eps * sum|c| subject to sum c = 0, |c_i| <= C.
inline QpOracleResult svr_qp_oracle(const std::vector<std::vector<double>>& kernel, const std::vector<double>& y,
                                    double c_max, double eps) {
    const int n = static_cast<int>(y.size());
    QpOracleResult best;
    int patterns = 1;
    for (int i = 0; i < n; ++i) patterns *= 5;
    for (int code = 0; code < patterns; ++code) {
        std::vector<int> state(n);
        int rest = code;
        for (int i = 0; i < n; ++i) {
            state[i] = rest % 5;
            rest /= 5;
        }
        std::vector<int> free_idx;
        std::vector<double> c(n, 0.0);
        for (int i = 0; i < n; ++i) {
            if (state[i] == 0) c[i] = -c_max;
            if (state[i] == 4) c[i] = c_max;
            if (state[i] == 1 || state[i] == 3) free_idx.push_back(i);
        }
        const int m = static_cast<int>(free_idx.size());
        if (m > 0) {
            Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + 1, m + 1);
            Eigen::VectorXd rhs(m + 1);
            double fixed_sum = 0.0;
            for (int i = 0; i < n; ++i) fixed_sum += c[i];
            for (int r = 0; r < m; ++r) {
                const int i = free_idx[r];
                const double sign = state[i] == 3 ? 1.0 : -1.0;
                double fixed_term = 0.0;
                for (int j = 0; j < n; ++j) fixed_term += kernel[i][j] * c[j];
                for (int q = 0; q < m; ++q) a(r, q) = kernel[i][free_idx[q]];
                a(r, m) = 1.0;
                rhs(r) = y[i] - eps * sign - fixed_term;
                a(m, r) = 1.0;
            }
            rhs(m) = -fixed_sum;
            const Eigen::VectorXd sol = a.fullPivLu().solve(rhs);
            if (!sol.allFinite() || (a * sol - rhs).norm() > 1e-9) continue;
            bool ok = true;
            for (int r = 0; r < m; ++r) {
                const int i = free_idx[r];
                const double v = sol(r);
                if (state[i] == 3 && !(v >= 0.0 && v <= c_max)) ok = false;
                if (state[i] == 1 && !(v <= 0.0 && v >= -c_max)) ok = false;
                c[i] = v;
            }
            if (!ok) continue;
        }
        double sum = 0.0;
        for (double v : c) sum += v;
        if (std::abs(sum) > 1e-9) continue;
        double obj = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) obj += 0.5 * c[i] * kernel[i][j] * c[j];
            obj += -y[i] * c[i] + eps * std::abs(c[i]);
        }
        if (obj < best.objective) {
            best.objective = obj;
            best.coefs = c;
        }
    }
    return best;
}

struct KktReport {
    bool satisfied = true;
    double worst = 0.0;  // largest violation found
};

/// Checks epsilon-SVR optimality of coefficients c with bias b at tolerance tol.
inline KktReport check_kkt(const std::vector<std::vector<double>>& kernel, const std::vector<double>& y,
                           const std::vector<double>& c, double bias, double c_max, double eps, double tol) {
    KktReport rep;
    const std::size_t n = y.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double f = bias;
        for (std::size_t j = 0; j < n; ++j) f += c[j] * kernel[i][j];
        const double r = y[i] - f;
        double violation = 0.0;
        if (std::abs(c[i]) > c_max + 1e-12) violation = std::abs(c[i]) - c_max;
        if (c[i] == 0.0) {
            violation = std::max(violation, std::abs(r) - eps);
        } else if (c[i] >= c_max) {
            violation = std::max(violation, eps - r);
        } else if (c[i] <= -c_max) {
            violation = std::max(violation, r + eps);
        } else if (c[i] > 0.0) {
            violation = std::max(violation, std::abs(r - eps));
        } else {
            violation = std::max(violation, std::abs(r + eps));
        }
        rep.worst = std::max(rep.worst, violation);
        sum += c[i];
    }
    if (std::abs(sum) > 1e-6) rep.worst = std::max(rep.worst, std::abs(sum));
    rep.satisfied = rep.worst <= tol;
    return rep;
}

inline std::vector<std::vector<double>> rbf_gram(const std::vector<std::vector<double>>& x, double gamma) {
    std::vector<std::vector<double>> k(x.size(), std::vector<double>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            double d2 = 0.0;
            for (std::size_t t = 0; t < x[i].size(); ++t) d2 += (x[i][t] - x[j][t]) * (x[i][t] - x[j][t]);
            k[i][j] = std::exp(-gamma * d2);
        }
    }
    return k;
}

}  // namespace uif::synth
