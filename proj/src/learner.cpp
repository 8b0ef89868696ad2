#include "mrfl/learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "mrfl/error.hpp"
#include "mrfl/parallel.hpp"
#include "mrfl/random.hpp"
#include "mrfl/sparsitron.hpp"

namespace mrfl {

namespace {

constexpr std::size_t kMaxDefaultIterations = 200000;

SolveReport solve(const RegressionProblem& problem, const LearnConfig& config, std::size_t iterations,
                  double sparsitron_radius, std::uint64_t task_seed) {
    switch (config.solver) {
        case SolverKind::mirror: {
            MirrorOptions opts;
            opts.iterations = iterations;
            opts.record_trajectory = config.record_trajectories;
            return problem.geometry == Geometry::l1 ? mirror_descent_l1(problem, opts)
                                                    : mirror_descent_l21(problem, opts);
        }
        case SolverKind::reference: {
            ReferenceOptions opts;
            opts.tolerance = config.tolerance;
            opts.record_trajectory = config.record_trajectories;
            return reference_minimizer(problem, opts);
        }
        case SolverKind::sparsitron: {
            SparsitronConfig sc;
            sc.radius = sparsitron_radius;
            sc.candidate_fraction = config.holdout_fraction;
            sc.min_holdout = config.min_holdout;
            sc.seed = task_seed;
            return sparsitron_learn(problem, sc);
        }
    }
    fail("invalid_argument", "unknown solver");
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

const char* to_string(SolverKind solver) {
    switch (solver) {
        case SolverKind::mirror: return "mirror";
        case SolverKind::reference: return "reference";
        case SolverKind::sparsitron: return "sparsitron";
    }
    return "unknown";
}

SolverKind solver_from_string(const std::string& name) {
    if (name == "mirror") return SolverKind::mirror;
    if (name == "reference") return SolverKind::reference;
    if (name == "sparsitron") return SolverKind::sparsitron;
    fail("invalid_argument", "unknown solver \"" + name + "\" (expected mirror, reference or sparsitron)");
}

void LearnConfig::validate() const {
    require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be >= 0");
    require(eta > 0.0 && std::isfinite(eta), "eta must be > 0");
    require(tolerance > 0.0, "tolerance must be > 0");
    require(holdout_fraction > 0.0 && holdout_fraction < 1.0, "holdout fraction must be in (0, 1)");
}

std::size_t regression_index(std::size_t i, std::size_t j) { return j < i ? j : j - 1; }

std::size_t node_from_regression_index(std::size_t i, std::size_t coordinate) {
    return coordinate < i ? coordinate : coordinate + 1;
}

std::size_t default_iterations(double lambda, double eta, std::size_t n, std::size_t k, bool ising) {
    const double eps = eta / 2.0;
    double t = lambda * lambda * std::exp(12.0 * lambda) * std::log(static_cast<double>(std::max<std::size_t>(n, 2))) /
               std::pow(eps, 4.0);
    if (!ising) t *= std::pow(static_cast<double>(k), 3.0);
    if (!(t < static_cast<double>(kMaxDefaultIterations))) return kMaxDefaultIterations;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t)));
}

RegressionProblem transform_node_samples(const SampleSet& samples, std::size_t i, double radius) {
    const std::size_t n = samples.n, count = samples.size();
    require(i < n, "node index out of range");
    std::vector<double> features;
    features.reserve(count * n);
    std::vector<int> labels(count);
    for (std::size_t m = 0; m < count; ++m) {
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) features.push_back(samples.spin(m, j));
        features.push_back(1.0);
        labels[m] = samples.spin(m, i);
    }
    return RegressionProblem::dense(n, std::move(features), labels, radius);
}

RegressionProblem transform_pair_samples(const SampleSet& samples, std::size_t i, std::size_t alpha, std::size_t beta,
                                         double radius) {
    const std::size_t n = samples.n, k = samples.k;
    require(i < n, "node index out of range");
    require(alpha != beta && alpha < k && beta < k, "alpha and beta must be distinct symbols");
    std::vector<std::uint8_t> symbols;
    std::vector<int> labels;
    for (std::size_t m = 0; m < samples.size(); ++m) {
        const std::uint8_t zi = samples.symbol(m, i);
        if (zi != alpha && zi != beta) continue;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) symbols.push_back(samples.symbol(m, j));
        symbols.push_back(0);  // constant slot, one-hot e_1
        labels.push_back(zi == alpha ? 1 : -1);
    }
    if (labels.empty())
        fail("empty_pair_set", "empty pair set for node " + std::to_string(i) + ", symbols (" +
                                   std::to_string(alpha) + ", " + std::to_string(beta) + ")");
    return RegressionProblem::one_hot(n, k, std::move(symbols), labels, radius);
}

std::vector<double> center_regression_solution(std::span<const double> w, std::size_t n, std::size_t k) {
    require(w.size() == n * k && n >= 1, "solution has wrong shape");
    std::vector<double> u(w.begin(), w.end());
    double moved = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        double mean = 0.0;
        for (std::size_t a = 0; a < k; ++a) mean += w[j * k + a];
        mean /= static_cast<double>(k);
        for (std::size_t a = 0; a < k; ++a) u[j * k + a] -= mean;
        moved += mean;
    }
    for (std::size_t a = 0; a < k; ++a) u[(n - 1) * k + a] += moved;
    return u;
}

std::vector<Edge> threshold_graph(const Matrix& estimate, double eta, bool or_rule) {
    require(eta > 0.0, "eta must be > 0");
    const std::size_t n = estimate.rows();
    const double cut = eta / 2.0;
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(estimate(i, j)) >= cut || (or_rule && std::abs(estimate(j, i)) >= cut))
                edges.emplace_back(i, j);
    return edges;
}

std::vector<Edge> threshold_graph(const std::vector<Matrix>& pair_weights, std::size_t n, double eta, bool or_rule) {
    require(eta > 0.0, "eta must be > 0");
    require(pair_weights.size() == n * n, "pair weights must have n * n slots");
    const double cut = eta / 2.0;
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (pair_weights[i * n + j].max_abs() >= cut || (or_rule && pair_weights[j * n + i].max_abs() >= cut))
                edges.emplace_back(i, j);
    return edges;
}

LearnResult learn_ising(const SampleSet& samples, const LearnConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    samples.validate();
    if (samples.k != 2) fail("type_error", "learn_ising needs binary samples, got alphabet " + std::to_string(samples.k));

    const std::size_t n = samples.n;
    const double radius = 2.0 * config.lambda;
    const std::size_t iterations =
        config.iterations ? config.iterations : default_iterations(config.lambda, config.eta, n, 2, true);

    LearnResult result;
    result.n = n;
    result.k = 2;
    result.ising = true;
    result.solver = to_string(config.solver);
    result.ising_weights = Matrix(n, n);
    result.diagnostics.resize(n);

    parallel_for(n, config.threads, [&](std::size_t i) {
        RegressionProblem problem = transform_node_samples(samples, i, radius);
        if (config.solver != SolverKind::sparsitron) problem = compress(problem);
        auto& diag = result.diagnostics[i];
        diag.node = i;
        diag.samples = samples.size();
        diag.report = solve(problem, config, iterations, radius, derive_seed(config.seed, i));
    });

    for (std::size_t i = 0; i < n; ++i) {
        const auto& w = result.diagnostics[i].report.weights;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) result.ising_weights(i, j) = w[regression_index(i, j)] / 2.0;
    }
    result.edges = threshold_graph(result.ising_weights, config.eta, config.or_rule);
    result.seconds = seconds_since(start);
    return result;
}

LearnResult learn_pairwise(const SampleSet& samples, const LearnConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    samples.validate();

    const std::size_t n = samples.n, k = samples.k;
    const double radius = 2.0 * config.lambda * std::sqrt(static_cast<double>(k));
    const double sparsitron_radius = 2.0 * config.lambda * static_cast<double>(k);
    const std::size_t iterations =
        config.iterations ? config.iterations : default_iterations(config.lambda, config.eta, n, k, false);

    // Tasks ordered by (node, alpha, beta) over alpha != beta.
    const std::size_t per_node = k * (k - 1);
    std::vector<RegressionDiagnostics> tasks(n * per_node);
    std::vector<std::vector<double>> centered(tasks.size());
    std::vector<std::string> skipped(tasks.size());

    parallel_for(tasks.size(), config.threads, [&](std::size_t t) {
        const std::size_t i = t / per_node, pair = t % per_node;
        const std::size_t alpha = pair / (k - 1);
        std::size_t beta = pair % (k - 1);
        if (beta >= alpha) ++beta;
        auto& diag = tasks[t];
        diag.node = i;
        diag.alpha = alpha;
        diag.beta = beta;
        RegressionProblem problem;
        try {
            problem = transform_pair_samples(samples, i, alpha, beta, radius);
        } catch (const Error& e) {
            if (e.code() != "empty_pair_set" || config.strict_pairs) throw;
            diag.skipped = true;
            skipped[t] = e.what();
            centered[t].assign(n * k, 0.0);
            return;
        }
        diag.samples = problem.rows();
        if (config.solver != SolverKind::sparsitron) problem = compress(problem);
        diag.report = solve(problem, config, iterations, sparsitron_radius, derive_seed(config.seed, t));
        centered[t] = center_regression_solution(diag.report.weights, n, k);
    });

    LearnResult result;
    result.n = n;
    result.k = k;
    result.solver = to_string(config.solver);
    result.pair_weights.assign(n * n, Matrix());
    for (std::size_t t = 0; t < tasks.size(); ++t)
        if (!skipped[t].empty()) result.warnings.push_back(skipped[t] + "; treating U as zero");

    const double inv_k = 1.0 / static_cast<double>(k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            Matrix w(k, k);
            const std::size_t row = regression_index(i, j);
            for (std::size_t t = i * per_node; t < (i + 1) * per_node; ++t) {
                const std::size_t alpha = tasks[t].alpha;  // U^{alpha,alpha} = 0 contributes nothing
                for (std::size_t b = 0; b < k; ++b) w(alpha, b) += centered[t][row * k + b] * inv_k;
            }
            result.pair_weights[i * n + j] = std::move(w);
        }
    }
    result.diagnostics = std::move(tasks);
    result.edges = threshold_graph(result.pair_weights, n, config.eta, config.or_rule);
    result.seconds = seconds_since(start);
    return result;
}

double max_entry_error(const IsingModel& model, const LearnResult& result) {
    require(result.ising && result.n == model.n, "result does not match the model");
    double err = 0.0;
    for (std::size_t i = 0; i < model.n; ++i)
        for (std::size_t j = 0; j < model.n; ++j)
            if (i != j) err = std::max(err, std::abs(model.A(i, j) - result.ising_weights(i, j)));
    return err;
}

double max_entry_error(const PairwiseModel& model, const LearnResult& result) {
    require(!result.ising && result.n == model.n() && result.k == model.k(), "result does not match the model");
    double err = 0.0;
    for (std::size_t i = 0; i < model.n(); ++i)
        for (std::size_t j = 0; j < model.n(); ++j) {
            if (i == j) continue;
            const Matrix& est = result.pair_estimate(i, j);
            for (std::size_t a = 0; a < model.k(); ++a)
                for (std::size_t b = 0; b < model.k(); ++b)
                    err = std::max(err, std::abs(model.weight(i, j, a, b) - est(a, b)));
        }
    return err;
}

nlohmann::json to_json(const LearnResult& result) {
    using nlohmann::json;
    auto matrix = [](const Matrix& m) {
        json rows = json::array();
        for (std::size_t r = 0; r < m.rows(); ++r) {
            auto row = m.row(r);
            rows.push_back(std::vector<double>(row.begin(), row.end()));
        }
        return rows;
    };
    json doc;
    doc["solver"] = result.solver;
    doc["n"] = result.n;
    doc["k"] = result.k;
    doc["ising"] = result.ising;
    if (result.ising) {
        doc["weights"] = matrix(result.ising_weights);
    } else {
        json w = json::array();
        for (std::size_t i = 0; i < result.n; ++i)
            for (std::size_t j = 0; j < result.n; ++j)
                if (i != j) w.push_back({{"i", i}, {"j", j}, {"w", matrix(result.pair_estimate(i, j))}});
        doc["weights"] = std::move(w);
    }
    json edges = json::array();
    for (const auto& [i, j] : result.edges) edges.push_back({i, j});
    doc["edges"] = std::move(edges);
    json diags = json::array();
    for (const auto& d : result.diagnostics) {
        json entry = {{"node", d.node},
                      {"samples", d.samples},
                      {"iterations", d.report.iterations},
                      {"final_loss", d.report.final_loss},
                      {"suboptimality_bound", d.report.suboptimality_bound},
                      {"loss_trajectory", d.report.loss_trajectory}};
        if (!result.ising) {
            entry["alpha"] = d.alpha;
            entry["beta"] = d.beta;
            entry["skipped"] = d.skipped;
        }
        diags.push_back(std::move(entry));
    }
    doc["diagnostics"] = std::move(diags);
    doc["warnings"] = result.warnings;
    doc["seconds"] = result.seconds;
    return doc;
}

void write_adjacency_csv(const LearnResult& result, const std::string& path) {
    std::vector<std::vector<int>> adj(result.n, std::vector<int>(result.n, 0));
    for (const auto& [i, j] : result.edges) adj[i][j] = adj[j][i] = 1;
    std::ofstream out(path);
    if (!out) fail("io_error", "cannot write adjacency CSV: " + path);
    for (const auto& row : adj) {
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
        out << '\n';
    }
    if (!out) fail("io_error", "failed writing adjacency CSV: " + path);
}

}  // namespace mrfl
