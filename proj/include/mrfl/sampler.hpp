#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mrfl/model.hpp"

namespace mrfl {

enum class SampleMethod { exact, gibbs };

const char* to_string(SampleMethod method);

/// N configurations stored row-major as symbols 0..k-1. For Ising sets
/// (k = 2, `ising` true) symbol 0 is spin -1 and symbol 1 is spin +1.
struct SampleSet {
    std::size_t n = 0;
    std::size_t k = 0;
    bool ising = false;
    std::vector<std::uint8_t> symbols;
    std::uint64_t seed = 0;
    SampleMethod method = SampleMethod::exact;
    std::string model_digest;

    std::size_t size() const { return n == 0 ? 0 : symbols.size() / n; }
    std::span<const std::uint8_t> row(std::size_t m) const { return {symbols.data() + m * n, n}; }
    std::uint8_t symbol(std::size_t m, std::size_t i) const { return symbols[m * n + i]; }
    int spin(std::size_t m, std::size_t i) const { return symbols[m * n + i] ? 1 : -1; }

    /// Throws Error("invalid_samples") when empty or holding symbols >= k.
    void validate() const;
};

/// Probabilities over [k]^n in lexicographic order, node 0 most significant.
struct ProbabilityTable {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<double> p;

    std::size_t states() const { return p.size(); }
};

inline constexpr std::size_t kDefaultStateCap = std::size_t{1} << 24;
inline constexpr std::size_t kUnbiasedCheckCap = std::size_t{1} << 20;

/// Writes the configuration with lexicographic index `index` into `out`.
void decode_state(std::size_t index, std::size_t k, std::span<std::uint8_t> out);
std::size_t encode_state(std::span<const std::uint8_t> config, std::size_t k);

/// Throws Error("state_space_too_large") when k^n exceeds `cap`.
std::size_t state_count(std::size_t n, std::size_t k, std::size_t cap = kDefaultStateCap);

/// Unnormalized log-probability (energy) of a configuration.
double log_weight(const IsingModel& model, std::span<const std::uint8_t> config);
double log_weight(const PairwiseModel& model, std::span<const std::uint8_t> config);

/// ln Z by log-sum-exp over all states.
double log_partition(const IsingModel& model, std::size_t cap = kDefaultStateCap);
double log_partition(const PairwiseModel& model, std::size_t cap = kDefaultStateCap);

ProbabilityTable exact_distribution(const IsingModel& model, std::size_t cap = kDefaultStateCap);
ProbabilityTable exact_distribution(const PairwiseModel& model, std::size_t cap = kDefaultStateCap);

/// N inverse-CDF draws over the lexicographic order of `table`.
SampleSet sample_from_table(const ProbabilityTable& table, std::size_t count, std::uint64_t seed);

/// Throws Error("invalid_argument") for count == 0; propagates
/// "state_space_too_large".
SampleSet sample_exact(const IsingModel& model, std::size_t count, std::uint64_t seed);
SampleSet sample_exact(const PairwiseModel& model, std::size_t count, std::uint64_t seed);

struct GibbsOptions {
    std::size_t burn_in = 1000;  // full sweeps discarded
    std::size_t thinning = 5;    // sweeps between recorded samples
};

/// Systematic-scan Gibbs chain started from a uniform random configuration.
SampleSet sample_gibbs(const IsingModel& model, std::size_t count, std::uint64_t seed,
                       GibbsOptions options = {});
SampleSet sample_gibbs(const PairwiseModel& model, std::size_t count, std::uint64_t seed,
                       GibbsOptions options = {});

/// P(X_i = s | X_{-i}) for every symbol s; the entry of `config` at node i is
/// ignored. Ising results are indexed by symbol: {P(-1), P(+1)}.
std::vector<double> conditional_distribution(const IsingModel& model, std::size_t i,
                                             std::span<const std::uint8_t> config);
std::vector<double> conditional_distribution(const PairwiseModel& model, std::size_t i,
                                             std::span<const std::uint8_t> config);

/// P(Z_i = +1 | Z_{-i}) = sigmoid(<w, [z_{-i}, 1]>) with w = 2[A_{i,-i}, theta_i].
double ising_conditional_plus(const IsingModel& model, std::size_t i, std::span<const std::uint8_t> config);

/// P(Z_i = alpha | Z_i in {alpha, beta}, Z_{-i}) via the pairwise sigmoid form.
double pairwise_pair_conditional(const PairwiseModel& model, std::size_t i, std::size_t alpha,
                                 std::size_t beta, std::span<const std::uint8_t> config);

struct DeltaCheck {
    double min_conditional = 0.0;
    double bound = 0.0;
    bool holds() const { return min_conditional >= bound; }
};

/// Exhaustive minimum single-site conditional next to exp(-2 width) / k.
DeltaCheck check_delta_unbiased(const IsingModel& model);
DeltaCheck check_delta_unbiased(const PairwiseModel& model);

/// Minimum over (i, assignment of X_{-i} with positive mass, symbol) of the
/// conditional probability implied by `table`.
double min_conditional(const ProbabilityTable& table);

/// Distribution of X_{-i}.
ProbabilityTable marginalize_out(const ProbabilityTable& table, std::size_t i);

/// Distribution of X_{-i} conditioned on X_i in {alpha, beta}.
ProbabilityTable condition_on_pair(const ProbabilityTable& table, std::size_t i, std::size_t alpha,
                                   std::size_t beta);

/// CSV (one row per sample; 1..k, or -1/+1 for Ising) plus `<path>.json`
/// sidecar holding n, k, ising, count, seed, method and model_digest.
void write_samples(const SampleSet& samples, const std::string& csv_path);
SampleSet read_samples(const std::string& csv_path);

}  // namespace mrfl
