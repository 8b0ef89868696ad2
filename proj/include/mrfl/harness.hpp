#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrfl/learner.hpp"
#include "mrfl/model.hpp"

namespace mrfl {

/// Two poles (nodes 0 and n-1) joined to every middle node, all couplings
/// `a`, zero field. 2(n - 2) edges.
IsingModel build_diamond(std::size_t n, double a);

/// Centered k x k edge pattern with largest entry `magnitude`: m * v v^T with
/// v_a = (-1)^a for even k (entries +-m by symbol parity) and
/// v_a = cos(2 pi a / k) for odd k.
Matrix grid_pattern(std::size_t k, double magnitude);

/// rows x cols 4-neighbor grid, nodes numbered row-major. Each edge gets
/// grid_pattern(k, magnitude) with an independent random sign; zero field.
PairwiseModel build_grid(std::size_t rows, std::size_t cols, std::size_t k, double magnitude, std::uint64_t seed);

/// Erdos-Renyi graph with edge probability p, same edge patterns as the grid.
PairwiseModel build_random(std::size_t n, std::size_t k, double magnitude, double edge_probability,
                           std::uint64_t seed);

/// ||Q_{S^c S} Q_{SS}^{-1}||_inf for node i, where Q = E[sigma'(<w*, x>) x x^T]
/// over x = z_{-i} under the exact distribution, w* = 2 A_{i,-i} and S the
/// true neighbors of i. Throws Error("no_edges") for an isolated node and
/// Error("singular_matrix") when Q_SS is numerically singular.
double incoherence(const IsingModel& model, std::size_t i);

enum class Family { diamond, grid, random };
const char* to_string(Family family);
Family family_from_string(const std::string& name);

struct ExperimentConfig {
    Family family = Family::diamond;
    std::size_t n = 8;  // diamond / random
    std::size_t rows = 3;  // grid
    std::size_t cols = 3;  // grid
    std::size_t k = 2;     // grid / random
    double edge_weight = 0.2;
    double edge_probability = 0.3;  // random
    std::optional<double> eta;      // default: the model's minimum edge weight
    std::optional<double> lambda;   // default: the model's width
    std::vector<std::size_t> sample_sizes;
    std::size_t runs = 100;
    std::uint64_t master_seed = 1;
    std::vector<SolverKind> solvers{SolverKind::mirror};
    std::size_t iterations = 0;  // mirror descent; 0 = default rule
    double tolerance = 1e-6;     // reference solver
    std::size_t threads = 0;     // 0 = hardware concurrency

    void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Missing keys keep their defaults. Throws Error("invalid_config").
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc);

struct RunRecord {
    std::size_t sample_size = 0;
    std::size_t run = 0;
    SolverKind solver = SolverKind::mirror;
    bool recovered = false;
    double max_error = 0.0;
    double seconds = 0.0;
    bool failed = false;
    std::string error;
};

struct Aggregate {
    SolverKind solver = SolverKind::mirror;
    std::size_t sample_size = 0;
    std::size_t runs = 0;
    std::size_t failures = 0;
    double recovery_fraction = 0.0;
    double mean_max_error = 0.0;  // over runs that did not fail
    double stderr_max_error = 0.0;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<RunRecord> records;  // ordered by (solver, N, run)
    std::vector<Aggregate> aggregates;  // ordered by (solver, N)

    std::vector<Aggregate> curve(SolverKind solver) const;
};

/// For each run r the model is generated from (master_seed, r) (grid and
/// random families; the diamond is fixed), and for each N a fresh exact
/// sample set from (master_seed, r, N). Every configured solver learns from
/// the same samples. Component errors are recorded per run.
ExperimentResult run_recovery_experiment(const ExperimentConfig& config);

/// Shortest decimal that parses back to the same double, preferring the
/// 12-significant-digit rendering when it round-trips.
std::string format_number(double value);

/// Writes `recovery_<solver>.csv` (N,recovery_fraction,mean_max_error,stderr),
/// `runs.csv` (solver,N,run,recovered,max_error,failed) and `manifest.json`
/// into `directory` (created if needed). Returns the written paths.
std::vector<std::string> emit_plot_data(const ExperimentResult& result, const std::string& directory);

struct CurvePoint {
    std::size_t sample_size = 0;
    double recovery_fraction = 0.0;
    double mean_max_error = 0.0;
    double stderr_max_error = 0.0;
};

/// Parses a recovery CSV written by emit_plot_data.
std::vector<CurvePoint> read_curve_csv(const std::string& path);

}  // namespace mrfl
