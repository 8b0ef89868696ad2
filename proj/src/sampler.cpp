#include "mrfl/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "mrfl/error.hpp"
#include "mrfl/model_io.hpp"
#include "mrfl/random.hpp"

namespace mrfl {

namespace {

double stable_sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// Per-node neighbor lists over a pairwise model, reading W_ij(a, b) for the
/// node's own symbol a without materializing transposes.
class NeighborTable {
public:
    explicit NeighborTable(const PairwiseModel& model) : model_(model), nbrs_(model.n()) {
        for (const auto& [key, w] : model.pairs()) {
            nbrs_[key.first].push_back({key.second, &w, false});
            nbrs_[key.second].push_back({key.first, &w, true});
        }
    }

    /// logits[a] = theta_i(a) + sum_j W_ij(a, z_j)
    void logits(std::size_t i, std::span<const std::uint8_t> config, std::span<double> out) const {
        const std::size_t k = model_.k();
        const auto& theta = model_.theta(i);
        for (std::size_t a = 0; a < k; ++a) out[a] = theta[a];
        for (const auto& nb : nbrs_[i]) {
            const std::size_t b = config[nb.node];
            if (nb.transposed)
                for (std::size_t a = 0; a < k; ++a) out[a] += (*nb.w)(b, a);
            else
                for (std::size_t a = 0; a < k; ++a) out[a] += (*nb.w)(a, b);
        }
    }

private:
    struct Neighbor {
        std::size_t node;
        const Matrix* w;
        bool transposed;
    };
    const PairwiseModel& model_;
    std::vector<std::vector<Neighbor>> nbrs_;
};

void softmax_inplace(std::span<double> v) {
    const double m = *std::max_element(v.begin(), v.end());
    double total = 0.0;
    for (double& x : v) {
        x = std::exp(x - m);
        total += x;
    }
    for (double& x : v) x /= total;
}

/// Ising local field h_i = sum_j A_ij z_j + theta_i.
double ising_field(const IsingModel& model, std::size_t i, std::span<const std::uint8_t> config) {
    double h = model.theta[i];
    for (std::size_t j = 0; j < model.n; ++j)
        if (j != i) h += model.A(i, j) * (config[j] ? 1.0 : -1.0);
    return h;
}

template <class Model>
ProbabilityTable enumerate(const Model& model, std::size_t n, std::size_t k, std::size_t cap) {
    ProbabilityTable table{n, k, {}};
    const std::size_t states = state_count(n, k, cap);
    table.p.resize(states);
    std::vector<std::uint8_t> config(n);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < states; ++s) {
        decode_state(s, k, config);
        table.p[s] = log_weight(model, config);
        top = std::max(top, table.p[s]);
    }
    double total = 0.0;
    for (double& v : table.p) {
        v = std::exp(v - top);
        total += v;
    }
    for (double& v : table.p) v /= total;
    return table;
}

template <class Model>
double enumerate_log_partition(const Model& model, std::size_t n, std::size_t k, std::size_t cap) {
    const std::size_t states = state_count(n, k, cap);
    std::vector<double> energy(states);
    std::vector<std::uint8_t> config(n);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < states; ++s) {
        decode_state(s, k, config);
        energy[s] = log_weight(model, config);
        top = std::max(top, energy[s]);
    }
    double total = 0.0;
    for (double e : energy) total += std::exp(e - top);
    return top + std::log(total);
}

void check_count(std::size_t count) { require(count >= 1, "N must be >= 1"); }

template <class ConditionalFn>
SampleSet run_gibbs(std::size_t n, std::size_t k, std::size_t count, std::uint64_t seed,
                    GibbsOptions options, ConditionalFn&& conditional) {
    check_count(count);
    require(options.thinning >= 1, "thinning must be >= 1");
    Rng rng(seed);
    std::vector<std::uint8_t> state(n);
    for (auto& s : state) s = static_cast<std::uint8_t>(rng.below(k));
    std::vector<double> probs(k);

    auto sweep = [&] {
        for (std::size_t i = 0; i < n; ++i) {
            conditional(i, state, probs);
            const double u = rng.uniform();
            double acc = 0.0;
            std::size_t pick = k - 1;
            for (std::size_t a = 0; a < k; ++a) {
                acc += probs[a];
                if (u < acc) {
                    pick = a;
                    break;
                }
            }
            state[i] = static_cast<std::uint8_t>(pick);
        }
    };

    for (std::size_t s = 0; s < options.burn_in; ++s) sweep();
    SampleSet out;
    out.n = n;
    out.k = k;
    out.seed = seed;
    out.method = SampleMethod::gibbs;
    out.symbols.reserve(count * n);
    for (std::size_t m = 0; m < count; ++m) {
        for (std::size_t s = 0; s < options.thinning; ++s) sweep();
        out.symbols.insert(out.symbols.end(), state.begin(), state.end());
    }
    return out;
}

template <class Model>
DeltaCheck delta_check(const Model& model, std::size_t n, std::size_t k, double bound) {
    const std::size_t states = state_count(n, k, kUnbiasedCheckCap);
    std::vector<std::uint8_t> config(n);
    double lo = 1.0;
    for (std::size_t s = 0; s < states; ++s) {
        decode_state(s, k, config);
        for (std::size_t i = 0; i < n; ++i) {
            if (config[i] != 0) continue;  // each X_{-i} assignment once
            for (double p : conditional_distribution(model, i, config)) lo = std::min(lo, p);
        }
    }
    return {lo, bound};
}

std::size_t power(std::size_t base, std::size_t exp) {
    std::size_t r = 1;
    while (exp--) r *= base;
    return r;
}

}  // namespace

const char* to_string(SampleMethod method) { return method == SampleMethod::exact ? "exact" : "gibbs"; }

void SampleSet::validate() const {
    if (n == 0 || symbols.empty() || symbols.size() % n != 0)
        fail("invalid_samples", "sample set must hold at least one full configuration");
    if (ising && k != 2) fail("invalid_samples", "Ising samples must have k = 2");
    for (auto s : symbols)
        if (s >= k) fail("invalid_samples", "symbol out of range");
}

void decode_state(std::size_t index, std::size_t k, std::span<std::uint8_t> out) {
    for (std::size_t i = out.size(); i-- > 0;) {
        out[i] = static_cast<std::uint8_t>(index % k);
        index /= k;
    }
}

std::size_t encode_state(std::span<const std::uint8_t> config, std::size_t k) {
    std::size_t index = 0;
    for (auto s : config) index = index * k + s;
    return index;
}

std::size_t state_count(std::size_t n, std::size_t k, std::size_t cap) {
    std::size_t states = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (states > cap / k) fail("state_space_too_large", "state space too large for exact enumeration");
        states *= k;
    }
    return states;
}

double log_weight(const IsingModel& model, std::span<const std::uint8_t> config) {
    double e = 0.0;
    for (std::size_t i = 0; i < model.n; ++i) {
        const double zi = config[i] ? 1.0 : -1.0;
        e += model.theta[i] * zi;
        for (std::size_t j = i + 1; j < model.n; ++j) e += model.A(i, j) * zi * (config[j] ? 1.0 : -1.0);
    }
    return e;
}

double log_weight(const PairwiseModel& model, std::span<const std::uint8_t> config) {
    double e = 0.0;
    for (std::size_t i = 0; i < model.n(); ++i) e += model.theta(i)[config[i]];
    for (const auto& [key, w] : model.pairs()) e += w(config[key.first], config[key.second]);
    return e;
}

double log_partition(const IsingModel& model, std::size_t cap) {
    return enumerate_log_partition(model, model.n, 2, cap);
}

double log_partition(const PairwiseModel& model, std::size_t cap) {
    return enumerate_log_partition(model, model.n(), model.k(), cap);
}

ProbabilityTable exact_distribution(const IsingModel& model, std::size_t cap) {
    return enumerate(model, model.n, 2, cap);
}

ProbabilityTable exact_distribution(const PairwiseModel& model, std::size_t cap) {
    return enumerate(model, model.n(), model.k(), cap);
}

SampleSet sample_from_table(const ProbabilityTable& table, std::size_t count, std::uint64_t seed) {
    check_count(count);
    std::vector<double> cdf(table.p.size());
    double acc = 0.0;
    for (std::size_t s = 0; s < cdf.size(); ++s) cdf[s] = (acc += table.p[s]);

    Rng rng(seed);
    SampleSet out;
    out.n = table.n;
    out.k = table.k;
    out.seed = seed;
    out.method = SampleMethod::exact;
    out.symbols.resize(count * table.n);
    for (std::size_t m = 0; m < count; ++m) {
        const double u = rng.uniform() * acc;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        std::size_t s = static_cast<std::size_t>(it - cdf.begin());
        if (s >= cdf.size()) s = cdf.size() - 1;
        decode_state(s, table.k, {out.symbols.data() + m * table.n, table.n});
    }
    return out;
}

SampleSet sample_exact(const IsingModel& model, std::size_t count, std::uint64_t seed) {
    check_count(count);
    SampleSet out = sample_from_table(exact_distribution(model), count, seed);
    out.ising = true;
    out.model_digest = model_digest(model);
    return out;
}

SampleSet sample_exact(const PairwiseModel& model, std::size_t count, std::uint64_t seed) {
    check_count(count);
    SampleSet out = sample_from_table(exact_distribution(model), count, seed);
    out.model_digest = model_digest(model);
    return out;
}

SampleSet sample_gibbs(const IsingModel& model, std::size_t count, std::uint64_t seed, GibbsOptions options) {
    SampleSet out = run_gibbs(model.n, 2, count, seed, options,
                              [&](std::size_t i, std::span<const std::uint8_t> state, std::span<double> probs) {
                                  const double plus = stable_sigmoid(2.0 * ising_field(model, i, state));
                                  probs[0] = 1.0 - plus;
                                  probs[1] = plus;
                              });
    out.ising = true;
    out.model_digest = model_digest(model);
    return out;
}

SampleSet sample_gibbs(const PairwiseModel& model, std::size_t count, std::uint64_t seed,
                       GibbsOptions options) {
    NeighborTable table(model);
    SampleSet out = run_gibbs(model.n(), model.k(), count, seed, options,
                              [&](std::size_t i, std::span<const std::uint8_t> state, std::span<double> probs) {
                                  table.logits(i, state, probs);
                                  softmax_inplace(probs);
                              });
    out.model_digest = model_digest(model);
    return out;
}

std::vector<double> conditional_distribution(const IsingModel& model, std::size_t i,
                                             std::span<const std::uint8_t> config) {
    const double h = ising_field(model, i, config);
    return {stable_sigmoid(-2.0 * h), stable_sigmoid(2.0 * h)};
}

std::vector<double> conditional_distribution(const PairwiseModel& model, std::size_t i,
                                             std::span<const std::uint8_t> config) {
    std::vector<double> logits(model.k());
    NeighborTable(model).logits(i, config, logits);
    softmax_inplace(logits);
    return logits;
}

double ising_conditional_plus(const IsingModel& model, std::size_t i, std::span<const std::uint8_t> config) {
    // w = 2[A_{i,-i}, theta_i], x' = [z_{-i}, 1]
    double inner = 2.0 * model.theta[i];
    for (std::size_t j = 0; j < model.n; ++j)
        if (j != i) inner += 2.0 * model.A(i, j) * (config[j] ? 1.0 : -1.0);
    return stable_sigmoid(inner);
}

double pairwise_pair_conditional(const PairwiseModel& model, std::size_t i, std::size_t alpha,
                                 std::size_t beta, std::span<const std::uint8_t> config) {
    double z = model.theta(i)[alpha] - model.theta(i)[beta];
    for (std::size_t j = 0; j < model.n(); ++j)
        if (j != i) z += model.weight(i, j, alpha, config[j]) - model.weight(i, j, beta, config[j]);
    return stable_sigmoid(z);
}

DeltaCheck check_delta_unbiased(const IsingModel& model) {
    return delta_check(model, model.n, 2, unbiasedness_bound(model));
}

DeltaCheck check_delta_unbiased(const PairwiseModel& model) {
    return delta_check(model, model.n(), model.k(), unbiasedness_bound(model));
}

double min_conditional(const ProbabilityTable& table) {
    const std::size_t n = table.n, k = table.k;
    double lo = 1.0;
    std::vector<std::uint8_t> config(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t stride = power(k, n - 1 - i);
        for (std::size_t s = 0; s < table.states(); ++s) {
            if ((s / stride) % k != 0) continue;
            double total = 0.0;
            for (std::size_t a = 0; a < k; ++a) total += table.p[s + a * stride];
            if (total <= 0.0) continue;
            for (std::size_t a = 0; a < k; ++a) lo = std::min(lo, table.p[s + a * stride] / total);
        }
    }
    return lo;
}

ProbabilityTable marginalize_out(const ProbabilityTable& table, std::size_t i) {
    require(table.n >= 2 && i < table.n, "cannot marginalize this node");
    ProbabilityTable out{table.n - 1, table.k, std::vector<double>(table.states() / table.k, 0.0)};
    const std::size_t stride = power(table.k, table.n - 1 - i);
    for (std::size_t s = 0; s < table.states(); ++s) {
        const std::size_t high = s / (stride * table.k), low = s % stride;
        out.p[high * stride + low] += table.p[s];
    }
    return out;
}

ProbabilityTable condition_on_pair(const ProbabilityTable& table, std::size_t i, std::size_t alpha,
                                   std::size_t beta) {
    require(table.n >= 2 && i < table.n && alpha != beta && alpha < table.k && beta < table.k,
            "invalid conditioning pair");
    ProbabilityTable out{table.n - 1, table.k, std::vector<double>(table.states() / table.k, 0.0)};
    const std::size_t stride = power(table.k, table.n - 1 - i);
    double total = 0.0;
    for (std::size_t s = 0; s < table.states(); ++s) {
        const std::size_t digit = (s / stride) % table.k;
        if (digit != alpha && digit != beta) continue;
        const std::size_t high = s / (stride * table.k), low = s % stride;
        out.p[high * stride + low] += table.p[s];
        total += table.p[s];
    }
    if (total <= 0.0) fail("invalid_argument", "conditioning event has zero probability");
    for (double& v : out.p) v /= total;
    return out;
}

void write_samples(const SampleSet& samples, const std::string& csv_path) {
    samples.validate();
    std::ofstream csv(csv_path);
    if (!csv) fail("io_error", "cannot write samples: " + csv_path);
    for (std::size_t m = 0; m < samples.size(); ++m) {
        for (std::size_t i = 0; i < samples.n; ++i) {
            if (i) csv << ',';
            const int s = samples.symbol(m, i);
            csv << (samples.ising ? (s ? 1 : -1) : s + 1);
        }
        csv << '\n';
    }
    if (!csv) fail("io_error", "failed writing samples: " + csv_path);

    nlohmann::json meta = {{"n", samples.n},
                           {"k", samples.k},
                           {"ising", samples.ising},
                           {"count", samples.size()},
                           {"seed", samples.seed},
                           {"method", to_string(samples.method)},
                           {"model_digest", samples.model_digest}};
    std::ofstream side(csv_path + ".json");
    if (!side) fail("io_error", "cannot write sample sidecar: " + csv_path + ".json");
    side << meta.dump(2) << '\n';
}

SampleSet read_samples(const std::string& csv_path) {
    SampleSet out;
    std::ifstream side(csv_path + ".json");
    if (!side) fail("io_error", "cannot open sample sidecar: " + csv_path + ".json");
    try {
        nlohmann::json meta;
        side >> meta;
        out.n = meta.at("n").get<std::size_t>();
        out.k = meta.at("k").get<std::size_t>();
        out.ising = meta.value("ising", false);
        out.seed = meta.value("seed", std::uint64_t{0});
        out.method = meta.value("method", std::string("exact")) == "gibbs" ? SampleMethod::gibbs : SampleMethod::exact;
        out.model_digest = meta.value("model_digest", std::string());
    } catch (const nlohmann::json::exception& e) {
        fail("invalid_samples", csv_path + ".json: " + e.what());
    }

    std::ifstream csv(csv_path);
    if (!csv) fail("io_error", "cannot open samples: " + csv_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(csv, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t cols = 0;
        while (std::getline(ss, cell, ',')) {
            long v = 0;
            try {
                v = std::stol(cell);
            } catch (const std::exception&) {
                fail("invalid_samples", csv_path + ":" + std::to_string(line_no) + ": not an integer");
            }
            long sym = out.ising ? (v == 1 ? 1 : (v == -1 ? 0 : -1)) : v - 1;
            if (sym < 0 || sym >= static_cast<long>(out.k))
                fail("invalid_samples", csv_path + ":" + std::to_string(line_no) + ": symbol out of range");
            out.symbols.push_back(static_cast<std::uint8_t>(sym));
            ++cols;
        }
        if (cols != out.n)
            fail("invalid_samples", csv_path + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(out.n) + " columns");
    }
    out.validate();
    return out;
}

}  // namespace mrfl
