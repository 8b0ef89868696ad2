#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrfl/logreg.hpp"
#include "mrfl/matrix.hpp"
#include "mrfl/model.hpp"
#include "mrfl/sampler.hpp"

namespace mrfl {

enum class SolverKind { mirror, reference, sparsitron };

const char* to_string(SolverKind solver);
/// Accepts "mirror", "reference" or "sparsitron".
SolverKind solver_from_string(const std::string& name);

struct LearnConfig {
    double lambda = 1.0;  // width upper bound
    double eta = 0.1;     // minimum-edge-weight lower bound
    SolverKind solver = SolverKind::mirror;
    /// Mirror-descent iterations; 0 selects default_iterations().
    std::size_t iterations = 0;
    double tolerance = 1e-6;  // reference solver (gradient-mapping norm)
    std::uint64_t seed = 0;
    /// Keep (i, j) when either direction's estimate passes the threshold.
    bool or_rule = false;
    /// Error on an empty (alpha, beta) sample set instead of using U = 0.
    bool strict_pairs = false;
    bool record_trajectories = true;
    /// Sparsitron held-out block: max(min_holdout, ceil(holdout_fraction * N)).
    double holdout_fraction = 0.01;
    std::size_t min_holdout = 200;
    std::size_t threads = 1;

    void validate() const;
};

struct RegressionDiagnostics {
    std::size_t node = 0;
    std::size_t alpha = 0;  // pairwise only
    std::size_t beta = 0;   // pairwise only
    std::size_t samples = 0;
    bool skipped = false;  // empty pair set
    SolveReport report;
};

struct LearnResult {
    std::size_t n = 0;
    std::size_t k = 0;
    bool ising = false;
    std::string solver;
    /// Ising: n x n, row i from node i's regression (not symmetrized).
    Matrix ising_weights;
    /// Pairwise: n * n slots, slot i * n + j holds W^_ij (k x k) from node i.
    std::vector<Matrix> pair_weights;
    std::vector<Edge> edges;
    std::vector<RegressionDiagnostics> diagnostics;
    std::vector<std::string> warnings;
    double seconds = 0.0;

    const Matrix& pair_estimate(std::size_t i, std::size_t j) const { return pair_weights[i * n + j]; }
};

/// Regression coordinate of node j in node i's problem (j < i: j, j > i: j - 1).
std::size_t regression_index(std::size_t i, std::size_t j);
/// Inverse of regression_index for coordinates below n - 1.
std::size_t node_from_regression_index(std::size_t i, std::size_t coordinate);

/// ceil(lambda^2 e^{12 lambda} ln n / eps^4) for Ising, times k^3 for
/// pairwise, with eps = eta / 2, clamped to [1, 200000].
std::size_t default_iterations(double lambda, double eta, std::size_t n, std::size_t k, bool ising);

/// Features [z_{-i}, 1] in {-1,1}^n, labels z_i, radius 2 lambda.
RegressionProblem transform_node_samples(const SampleSet& samples, std::size_t i, double radius);

/// Samples with z_i in {alpha, beta}: features OneHot([z_{-i}, 1]) with the
/// constant slot at symbol 0, labels +1 for alpha and -1 for beta. Throws
/// Error("empty_pair_set") when no sample qualifies.
RegressionProblem transform_pair_samples(const SampleSet& samples, std::size_t i, std::size_t alpha, std::size_t beta,
                                         double radius);

/// Centers rows 0..n-2 of an n x k solution and adds the removed means,
/// summed, to every entry of row n-1. <U, x> = <w, x> for one-hot x.
std::vector<double> center_regression_solution(std::span<const double> w, std::size_t n, std::size_t k);

/// {(i, j): |A^_ij| >= eta / 2, i < j}; with or_rule also when |A^_ji| passes.
std::vector<Edge> threshold_graph(const Matrix& estimate, double eta, bool or_rule = false);
/// Same rule on max_{a,b} |W^_ij(a, b)| for pairwise estimates.
std::vector<Edge> threshold_graph(const std::vector<Matrix>& pair_weights, std::size_t n, double eta,
                                  bool or_rule = false);

LearnResult learn_ising(const SampleSet& samples, const LearnConfig& config);
LearnResult learn_pairwise(const SampleSet& samples, const LearnConfig& config);

/// max_{i != j} |A_ij - A^_ij|.
double max_entry_error(const IsingModel& model, const LearnResult& result);
/// max_{i != j, a, b} |W_ij(a, b) - W^_ij(a, b)|.
double max_entry_error(const PairwiseModel& model, const LearnResult& result);

nlohmann::json to_json(const LearnResult& result);
/// n x n 0/1 adjacency matrix, one row per line.
void write_adjacency_csv(const LearnResult& result, const std::string& path);

}  // namespace mrfl
