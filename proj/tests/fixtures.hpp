#pragma once
// Random models and conversions shared by the unit and acceptance tests.

#include <cstdint>
#include <random>
#include <vector>

#include "mrfl/model.hpp"
#include "oracle.hpp"

namespace fixtures {

inline mrfl::IsingModel random_ising(std::size_t n, double scale, std::mt19937_64& gen, double density = 0.7) {
    std::uniform_real_distribution<double> u(-scale, scale), coin(0.0, 1.0);
    mrfl::IsingModel m(n);
    for (std::size_t i = 0; i < n; ++i) {
        m.theta[i] = u(gen) / 2;
        for (std::size_t j = i + 1; j < n; ++j)
            if (coin(gen) < density) m.set_coupling(i, j, u(gen));
    }
    return m;
}

/// Uncentered unless `center`; fields random.
inline mrfl::PairwiseModel random_pairwise(std::size_t n, std::size_t k, double scale, std::mt19937_64& gen,
                                           bool center = true, double density = 0.7) {
    std::uniform_real_distribution<double> u(-scale, scale), coin(0.0, 1.0);
    mrfl::PairwiseModel m(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < k; ++a) m.theta(i)[a] = u(gen) / 2;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (coin(gen) >= density) continue;
            mrfl::Matrix w(k, k);
            for (auto& v : w.data()) v = u(gen);
            m.set_edge(i, j, center ? mrfl::center_weight_matrix(w).matrix : w);
        }
    }
    return m;
}

inline std::vector<std::vector<double>> dense_A(const mrfl::IsingModel& m) {
    std::vector<std::vector<double>> A(m.n, std::vector<double>(m.n));
    for (std::size_t i = 0; i < m.n; ++i)
        for (std::size_t j = 0; j < m.n; ++j) A[i][j] = m.A(i, j);
    return A;
}

inline oracle::Table ising_table(const mrfl::IsingModel& m) {
    return oracle::distribution(m.n, 2, oracle::ising_energy(dense_A(m), m.theta));
}

/// Reads weights through the public accessor only.
inline oracle::Table pairwise_table(const mrfl::PairwiseModel& m) {
    return oracle::distribution(m.n(), m.k(), [&m](const oracle::Config& c) {
        long double e = 0;
        for (std::size_t i = 0; i < m.n(); ++i) {
            e += m.theta(i)[c[i]];
            for (std::size_t j = i + 1; j < m.n(); ++j) e += m.weight(i, j, c[i], c[j]);
        }
        return e;
    });
}

/// Library index (node 0 most significant) of an oracle configuration.
inline std::size_t library_index(const oracle::Config& c, std::size_t k) {
    std::size_t idx = 0;
    for (int s : c) idx = idx * k + static_cast<std::size_t>(s);
    return idx;
}

}  // namespace fixtures
