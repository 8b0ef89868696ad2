#include "mrfl/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mrfl/error.hpp"

namespace mrfl {

namespace {

void check_node_count(std::size_t n) {
    require(n >= 1 && n <= kMaxNodes, "node count must be in [1, 100000], got " + std::to_string(n));
}

void check_alphabet(std::size_t k) {
    require(k >= 2 && k <= kMaxAlphabet, "alphabet size must be in [2, 64], got " + std::to_string(k));
}

Edge oriented(std::size_t i, std::size_t j) { return i < j ? Edge{i, j} : Edge{j, i}; }

}  // namespace

IsingModel::IsingModel(std::size_t nodes) : n(nodes), A(nodes, nodes), theta(nodes, 0.0) {
    check_node_count(nodes);
}

void IsingModel::set_coupling(std::size_t i, std::size_t j, double value) {
    require(i < n && j < n && i != j, "coupling indices out of range");
    A(i, j) = value;
    A(j, i) = value;
}

void IsingModel::validate() const {
    if (A.rows() != n || A.cols() != n || theta.size() != n)
        fail("invalid_model", "Ising model shape mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (A(i, i) != 0.0) fail("invalid_model", "Ising coupling diagonal must be zero");
        if (!std::isfinite(theta[i])) fail("invalid_model", "non-finite field");
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(A(i, j))) fail("invalid_model", "non-finite coupling");
            if (std::abs(A(i, j) - A(j, i)) > kInvariantTol)
                fail("invalid_model", "Ising coupling matrix must be symmetric");
        }
    }
}

std::vector<Edge> IsingModel::edges() const {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(A(i, j)) > kEdgeFloor) out.emplace_back(i, j);
    return out;
}

PairwiseModel::PairwiseModel(std::size_t nodes, std::size_t alphabet)
    : n_(nodes), k_(alphabet), theta_(nodes, std::vector<double>(alphabet, 0.0)) {
    check_node_count(nodes);
    check_alphabet(alphabet);
}

void PairwiseModel::set_edge(std::size_t i, std::size_t j, const Matrix& w) {
    require(i < n_ && j < n_ && i != j, "edge indices out of range");
    require(w.rows() == k_ && w.cols() == k_, "edge matrix must be k x k");
    if (i < j)
        pairs_[{i, j}] = w;
    else
        pairs_[{j, i}] = w.transposed();
}

void PairwiseModel::remove_edge(std::size_t i, std::size_t j) { pairs_.erase(oriented(i, j)); }

bool PairwiseModel::has_pair(std::size_t i, std::size_t j) const {
    return pairs_.count(oriented(i, j)) != 0;
}

Matrix PairwiseModel::edge(std::size_t i, std::size_t j) const {
    auto it = pairs_.find(oriented(i, j));
    if (it == pairs_.end()) return Matrix(k_, k_);
    return i < j ? it->second : it->second.transposed();
}

double PairwiseModel::weight(std::size_t i, std::size_t j, std::size_t a, std::size_t b) const {
    auto it = pairs_.find(oriented(i, j));
    if (it == pairs_.end()) return 0.0;
    return i < j ? it->second(a, b) : it->second(b, a);
}

std::vector<Edge> PairwiseModel::edges() const {
    std::vector<Edge> out;
    for (const auto& [key, w] : pairs_)
        if (w.max_abs() > kEdgeFloor) out.push_back(key);
    return out;
}

bool PairwiseModel::is_centered(double tol) const {
    for (const auto& [key, w] : pairs_) {
        for (std::size_t a = 0; a < k_; ++a) {
            double row = 0.0, col = 0.0;
            for (std::size_t b = 0; b < k_; ++b) {
                row += w(a, b);
                col += w(b, a);
            }
            if (std::abs(row) > tol || std::abs(col) > tol) return false;
        }
    }
    return true;
}

void PairwiseModel::validate(bool require_centered) const {
    if (theta_.size() != n_) fail("invalid_model", "field count must equal node count");
    for (const auto& t : theta_) {
        if (t.size() != k_) fail("invalid_model", "field vectors must have k entries");
        for (double v : t)
            if (!std::isfinite(v)) fail("invalid_model", "non-finite field");
    }
    for (const auto& [key, w] : pairs_) {
        if (key.first >= key.second || key.second >= n_) fail("invalid_model", "bad pair index");
        if (w.rows() != k_ || w.cols() != k_) fail("invalid_model", "edge matrix must be k x k");
        for (double v : w.data())
            if (!std::isfinite(v)) fail("invalid_model", "non-finite edge weight");
    }
    if (require_centered && !is_centered())
        fail("invalid_model", "edge matrices must have centered rows and columns");
}

double ising_width(const IsingModel& model) {
    double width = 0.0;
    for (std::size_t i = 0; i < model.n; ++i) {
        double s = std::abs(model.theta[i]);
        for (std::size_t j = 0; j < model.n; ++j) s += std::abs(model.A(i, j));
        width = std::max(width, s);
    }
    return width;
}

double pairwise_width(const PairwiseModel& model) {
    const std::size_t n = model.n(), k = model.k();
    // row_mass[i][a] = sum_j max_b |W_ij(a, b)|
    std::vector<std::vector<double>> row_mass(n, std::vector<double>(k, 0.0));
    for (const auto& [key, w] : model.pairs()) {
        const auto [i, j] = key;
        for (std::size_t a = 0; a < k; ++a) {
            double ri = 0.0, rj = 0.0;
            for (std::size_t b = 0; b < k; ++b) {
                ri = std::max(ri, std::abs(w(a, b)));
                rj = std::max(rj, std::abs(w(b, a)));
            }
            row_mass[i][a] += ri;
            row_mass[j][a] += rj;
        }
    }
    double width = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < k; ++a)
            width = std::max(width, row_mass[i][a] + std::abs(model.theta(i)[a]));
    return width;
}

double min_edge_weight(const IsingModel& model) {
    double eta = std::numeric_limits<double>::infinity();
    for (const auto& [i, j] : model.edges()) eta = std::min(eta, std::abs(model.A(i, j)));
    if (!std::isfinite(eta)) fail("no_edges", "model has no edges");
    return eta;
}

double min_edge_weight(const PairwiseModel& model) {
    double eta = std::numeric_limits<double>::infinity();
    for (const auto& [key, w] : model.pairs()) {
        const double m = w.max_abs();
        if (m > kEdgeFloor) eta = std::min(eta, m);
    }
    if (!std::isfinite(eta)) fail("no_edges", "model has no edges");
    return eta;
}

double unbiasedness_bound(double width, std::size_t alphabet) {
    return std::exp(-2.0 * width) / static_cast<double>(alphabet);
}

double unbiasedness_bound(const IsingModel& model) { return unbiasedness_bound(ising_width(model), 2); }

double unbiasedness_bound(const PairwiseModel& model) {
    return unbiasedness_bound(pairwise_width(model), model.k());
}

ModelBounds model_bounds(const IsingModel& model) {
    ModelBounds b;
    b.lambda = ising_width(model);
    b.eta = model.edges().empty() ? 0.0 : min_edge_weight(model);
    b.delta = unbiasedness_bound(b.lambda, 2);
    return b;
}

ModelBounds model_bounds(const PairwiseModel& model) {
    ModelBounds b;
    b.lambda = pairwise_width(model);
    b.eta = model.edges().empty() ? 0.0 : min_edge_weight(model);
    b.delta = unbiasedness_bound(b.lambda, model.k());
    return b;
}

CenteredMatrix center_weight_matrix(const Matrix& m) {
    const std::size_t rows = m.rows(), cols = m.cols();
    std::vector<double> row_mean(rows, 0.0), col_mean(cols, 0.0);
    double grand = 0.0;
    for (std::size_t a = 0; a < rows; ++a)
        for (std::size_t b = 0; b < cols; ++b) {
            row_mean[a] += m(a, b);
            col_mean[b] += m(a, b);
        }
    for (auto& v : row_mean) {
        grand += v;
        v /= static_cast<double>(cols);
    }
    for (auto& v : col_mean) v /= static_cast<double>(rows);
    grand /= static_cast<double>(rows * cols);

    CenteredMatrix out{Matrix(rows, cols), row_mean, std::vector<double>(cols)};
    for (std::size_t b = 0; b < cols; ++b) out.col_offsets[b] = col_mean[b] - grand;
    for (std::size_t a = 0; a < rows; ++a)
        for (std::size_t b = 0; b < cols; ++b)
            out.matrix(a, b) = m(a, b) - row_mean[a] - col_mean[b] + grand;
    return out;
}

PairwiseModel center_model(const PairwiseModel& model) {
    PairwiseModel out(model.n(), model.k());
    for (std::size_t i = 0; i < model.n(); ++i) out.theta(i) = model.theta(i);
    for (const auto& [key, w] : model.pairs()) {
        const auto [i, j] = key;
        CenteredMatrix c = center_weight_matrix(w);
        out.set_edge(i, j, c.matrix);
        for (std::size_t a = 0; a < model.k(); ++a) {
            out.theta(i)[a] += c.row_offsets[a];
            out.theta(j)[a] += c.col_offsets[a];
        }
    }
    return out;
}

PairwiseModel to_pairwise(const IsingModel& model) {
    PairwiseModel out(model.n, 2);
    for (std::size_t i = 0; i < model.n; ++i) {
        out.theta(i) = {-model.theta[i], model.theta[i]};
        for (std::size_t j = i + 1; j < model.n; ++j) {
            const double a = model.A(i, j);
            if (a == 0.0) continue;
            Matrix w(2, 2);
            w(0, 0) = w(1, 1) = a;
            w(0, 1) = w(1, 0) = -a;
            out.set_edge(i, j, w);
        }
    }
    return out;
}

IsingModel ising_from_pairwise(const PairwiseModel& model) {
    if (model.k() != 2) fail("invalid_model", "only binary models embed an Ising model");
    IsingModel out(model.n());
    for (std::size_t i = 0; i < model.n(); ++i) {
        const auto& t = model.theta(i);
        if (t[0] != -t[1]) fail("invalid_model", "field is not in embedded Ising form");
        out.theta[i] = t[1];
    }
    for (const auto& [key, w] : model.pairs()) {
        const double a = w(0, 0);
        if (w(1, 1) != a || w(0, 1) != -a || w(1, 0) != -a)
            fail("invalid_model", "edge matrix is not in embedded Ising form");
        out.set_coupling(key.first, key.second, a);
    }
    return out;
}

}  // namespace mrfl
