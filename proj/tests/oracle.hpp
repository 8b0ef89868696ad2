#pragma once
// Independent reference computations for the tests. Nothing here calls into
// the library's numerics: enumeration runs in a different state order, sums
// are naive long double, linear algebra is plain Gauss-Jordan.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <vector>

namespace oracle {

using Config = std::vector<int>;  // symbols 0..k-1
using Table = std::map<Config, long double>;

/// Visits [k]^n with node n-1 varying slowest (reverse of the library order).
inline void for_each_config(std::size_t n, std::size_t k, const std::function<void(const Config&)>& fn) {
    Config c(n, 0);
    for (;;) {
        fn(c);
        std::size_t i = 0;
        while (i < n && ++c[i] == static_cast<int>(k)) c[i++] = 0;
        if (i == n) return;
    }
}

/// Energy given as a callback on configurations; naive exp and sum.
inline Table distribution(std::size_t n, std::size_t k, const std::function<long double(const Config&)>& energy) {
    Table t;
    long double z = 0;
    for_each_config(n, k, [&](const Config& c) {
        const long double w = std::exp(energy(c));
        t[c] = w;
        z += w;
    });
    for (auto& [c, p] : t) p /= z;
    return t;
}

/// Ising energy: sum_{i<j} A_ij s_i s_j + sum_i theta_i s_i, s = 2c - 1.
inline std::function<long double(const Config&)> ising_energy(const std::vector<std::vector<double>>& A,
                                                              const std::vector<double>& theta) {
    return [A, theta](const Config& c) {
        long double e = 0;
        const std::size_t n = c.size();
        for (std::size_t i = 0; i < n; ++i) {
            const int si = 2 * c[i] - 1;
            e += theta[i] * si;
            for (std::size_t j = i + 1; j < n; ++j) e += A[i][j] * si * (2 * c[j] - 1);
        }
        return e;
    };
}

/// P(X_i = s | rest) from a table, by summing the k slices.
inline std::vector<long double> conditional(const Table& t, std::size_t i, Config c, std::size_t k) {
    std::vector<long double> p(k);
    long double total = 0;
    for (std::size_t s = 0; s < k; ++s) {
        c[i] = static_cast<int>(s);
        p[s] = t.at(c);
        total += p[s];
    }
    for (auto& v : p) v /= total;
    return p;
}

inline long double sigmoid(long double z) { return 1.0L / (1.0L + std::exp(-z)); }

/// Per-sample logistic loss with plain long double formulas.
inline long double logistic_loss(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                 const std::vector<double>& w) {
    long double s = 0;
    for (std::size_t m = 0; m < x.size(); ++m) {
        long double z = 0;
        for (std::size_t j = 0; j < w.size(); ++j) z += static_cast<long double>(w[j]) * x[m][j];
        s += std::log1p(std::exp(-y[m] * z));
    }
    return s / x.size();
}

/// Central differences of f at w.
inline std::vector<double> finite_gradient(const std::function<double(const std::vector<double>&)>& f,
                                           std::vector<double> w, double h = 1e-6) {
    std::vector<double> g(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) {
        const double keep = w[j];
        w[j] = keep + h;
        const double up = f(w);
        w[j] = keep - h;
        const double down = f(w);
        w[j] = keep;
        g[j] = (up - down) / (2 * h);
    }
    return g;
}

/// Solves M x = b by Gauss-Jordan with partial pivoting (M square, small).
inline std::vector<double> solve(std::vector<std::vector<double>> M, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(M[r][c]) > std::abs(M[piv][c])) piv = r;
        std::swap(M[c], M[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = M[r][c] / M[c][c];
            for (std::size_t k = c; k < n; ++k) M[r][k] -= f * M[c][k];
            b[r] -= f * b[c];
        }
    }
    for (std::size_t i = 0; i < n; ++i) b[i] /= M[i][i];
    return b;
}

/// Unconstrained logistic MLE by Newton's method on dense data.
inline std::vector<double> newton_logistic(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                           std::size_t iterations = 50) {
    const std::size_t d = x[0].size(), N = x.size();
    std::vector<double> w(d, 0.0);
    for (std::size_t it = 0; it < iterations; ++it) {
        std::vector<double> g(d, 0.0);
        std::vector<std::vector<double>> H(d, std::vector<double>(d, 0.0));
        for (std::size_t m = 0; m < N; ++m) {
            double z = 0;
            for (std::size_t j = 0; j < d; ++j) z += w[j] * x[m][j];
            const double p = 1.0 / (1.0 + std::exp(-z));
            const double target = y[m] > 0 ? 1.0 : 0.0;
            for (std::size_t a = 0; a < d; ++a) {
                g[a] += (p - target) * x[m][a] / N;
                for (std::size_t b = 0; b < d; ++b) H[a][b] += p * (1 - p) * x[m][a] * x[m][b] / N;
            }
        }
        const std::vector<double> step = solve(H, g);
        for (std::size_t j = 0; j < d; ++j) w[j] -= step[j];
    }
    return w;
}

/// Alternating row/column centering, `passes` rounds.
inline std::vector<std::vector<double>> alternate_centering(std::vector<std::vector<double>> M, int passes) {
    const std::size_t r = M.size(), c = M[0].size();
    for (int p = 0; p < passes; ++p) {
        for (auto& row : M) {
            double s = 0;
            for (double v : row) s += v;
            for (double& v : row) v -= s / c;
        }
        for (std::size_t b = 0; b < c; ++b) {
            double s = 0;
            for (std::size_t a = 0; a < r; ++a) s += M[a][b];
            for (std::size_t a = 0; a < r; ++a) M[a][b] -= s / r;
        }
    }
    return M;
}

/// D(a || b) for Bernoulli parameters, direct formula.
inline long double kl(long double a, long double b) {
    long double s = 0;
    if (a > 0) s += a * std::log(a / b);
    if (a < 1) s += (1 - a) * std::log((1 - a) / (1 - b));
    return s;
}

/// Incoherence at node i from an explicit inverse of Q_SS.
inline double incoherence(const std::vector<std::vector<double>>& A, std::size_t i) {
    const std::size_t n = A.size();
    const Table t = distribution(n, 2, ising_energy(A, std::vector<double>(n, 0.0)));
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < n; ++j)
        if (j != i) others.push_back(j);
    const std::size_t d = others.size();
    std::vector<std::vector<double>> Q(d, std::vector<double>(d, 0.0));
    for (const auto& [c, p] : t) {
        long double z = 0;
        for (std::size_t j : others) z += 2 * A[i][j] * (2 * c[j] - 1);
        const long double s = sigmoid(z);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b)
                Q[a][b] += static_cast<double>(p * s * (1 - s) * (2 * c[others[a]] - 1) * (2 * c[others[b]] - 1));
    }
    std::vector<std::size_t> S, Sc;
    for (std::size_t a = 0; a < d; ++a) (A[i][others[a]] != 0.0 ? S : Sc).push_back(a);
    std::vector<std::vector<double>> Qss(S.size(), std::vector<double>(S.size()));
    for (std::size_t a = 0; a < S.size(); ++a)
        for (std::size_t b = 0; b < S.size(); ++b) Qss[a][b] = Q[S[a]][S[b]];
    double worst = 0;
    for (std::size_t r : Sc) {
        // row of Q_{ScS} Q_SS^{-1} = solve(Q_SS, Q_{S r}) since Q_SS is symmetric
        std::vector<double> rhs(S.size());
        for (std::size_t a = 0; a < S.size(); ++a) rhs[a] = Q[S[a]][r];
        const auto row = solve(Qss, rhs);
        double s = 0;
        for (double v : row) s += std::abs(v);
        worst = std::max(worst, s);
    }
    return worst;
}

}  // namespace oracle
