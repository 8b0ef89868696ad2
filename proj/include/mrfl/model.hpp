#pragma once

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "mrfl/matrix.hpp"

namespace mrfl {

inline constexpr std::size_t kMaxAlphabet = 64;
inline constexpr std::size_t kMaxNodes = 100000;
/// Absolute tolerance for symmetry and centering checks.
inline constexpr double kInvariantTol = 1e-10;
/// An edge exists when its largest absolute weight exceeds this floor.
inline constexpr double kEdgeFloor = 1e-12;

using Edge = std::pair<std::size_t, std::size_t>;

/// Binary model on {-1,1}^n: P(z) ~ exp(sum_{i<j} A_ij z_i z_j + sum_i theta_i z_i).
///
/// Symbols: spin -1 is symbol 0 and spin +1 is symbol 1 wherever a model is
/// treated as categorical (sampling, enumeration order, embedding).
struct IsingModel {
    std::size_t n = 0;
    Matrix A;
    std::vector<double> theta;

    IsingModel() = default;
    explicit IsingModel(std::size_t nodes);

    /// Sets A_ij and A_ji together.
    void set_coupling(std::size_t i, std::size_t j, double value);

    /// Throws Error("invalid_model") on asymmetric A, nonzero diagonal,
    /// non-finite entries or size mismatch.
    void validate() const;

    std::vector<Edge> edges() const;
};

/// Categorical model on [k]^n with per-pair k x k weight matrices.
///
/// Each unordered pair is stored once as the matrix for (min, max); reading
/// (j, i) with j > i yields the transpose, so W_ij = W_ji^T always holds.
class PairwiseModel {
public:
    PairwiseModel() = default;
    PairwiseModel(std::size_t nodes, std::size_t alphabet);

    std::size_t n() const { return n_; }
    std::size_t k() const { return k_; }

    /// Stores `w` as W_ij; if i > j the transpose is stored for (j, i).
    void set_edge(std::size_t i, std::size_t j, const Matrix& w);
    void remove_edge(std::size_t i, std::size_t j);
    bool has_pair(std::size_t i, std::size_t j) const;

    /// W_ij as an oriented k x k matrix (zero matrix when the pair is absent).
    Matrix edge(std::size_t i, std::size_t j) const;
    /// W_ij(a, b) with orientation applied.
    double weight(std::size_t i, std::size_t j, std::size_t a, std::size_t b) const;

    /// Stored pairs keyed (i, j) with i < j.
    const std::map<Edge, Matrix>& pairs() const { return pairs_; }
    /// Pairs whose largest |W_ij(a, b)| exceeds kEdgeFloor.
    std::vector<Edge> edges() const;

    std::vector<double>& theta(std::size_t i) { return theta_[i]; }
    const std::vector<double>& theta(std::size_t i) const { return theta_[i]; }

    bool is_centered(double tol = kInvariantTol) const;
    /// Throws Error("invalid_model") on shape or finiteness problems, and on
    /// uncentered matrices when `require_centered`.
    void validate(bool require_centered = true) const;

private:
    std::size_t n_ = 0;
    std::size_t k_ = 0;
    std::map<Edge, Matrix> pairs_;
    std::vector<std::vector<double>> theta_;
};

struct ModelBounds {
    double lambda = 0.0;  // width
    double eta = 0.0;     // minimum edge weight (0 when edgeless)
    double delta = 0.0;   // exp(-2 lambda) / k
};

double ising_width(const IsingModel& model);
double pairwise_width(const PairwiseModel& model);

/// Throws Error("no_edges") for an edgeless model.
double min_edge_weight(const IsingModel& model);
double min_edge_weight(const PairwiseModel& model);

double unbiasedness_bound(double width, std::size_t alphabet);
double unbiasedness_bound(const IsingModel& model);
double unbiasedness_bound(const PairwiseModel& model);

ModelBounds model_bounds(const IsingModel& model);
ModelBounds model_bounds(const PairwiseModel& model);

struct CenteredMatrix {
    Matrix matrix;
    /// Added to the row node's field: theta_i(a) += row_offsets[a].
    std::vector<double> row_offsets;
    /// Added to the column node's field: theta_j(b) += col_offsets[b].
    std::vector<double> col_offsets;
};

/// Orthogonal projection onto matrices with zero row and column sums, i.e.
/// M - rowmean - colmean + grandmean. M(a,b) == matrix(a,b) + row_offsets[a]
/// + col_offsets[b] holds exactly up to rounding.
CenteredMatrix center_weight_matrix(const Matrix& m);

/// Centers every W_ij and folds the offsets into the fields; the induced
/// distribution is unchanged.
PairwiseModel center_model(const PairwiseModel& model);

/// W_ij(s,s) = A_ij, W_ij(s,t) = -A_ij for s != t, theta_i = (-theta_i, theta_i).
PairwiseModel to_pairwise(const IsingModel& model);

/// Inverse of to_pairwise; throws Error("invalid_model") if `model` is not a
/// binary model in embedded form.
IsingModel ising_from_pairwise(const PairwiseModel& model);

}  // namespace mrfl
