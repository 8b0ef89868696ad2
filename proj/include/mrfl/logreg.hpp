#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace mrfl {

enum class Geometry { l1, l21 };

/// Weighted logistic-regression instance.
///
/// l1 geometry: dense real features, `dim` per row, weights in R^dim.
/// l21 geometry: one-hot features stored as the hot column of each of the
/// `dim` rows (values < alphabet); weights are dim x alphabet row-major.
///
/// Row r stands for positive[r] samples labelled +1 and negative[r] samples
/// labelled -1 with identical features, so duplicate rows can be merged.
struct RegressionProblem {
    Geometry geometry = Geometry::l1;
    std::size_t dim = 0;
    std::size_t alphabet = 1;
    std::vector<double> features;
    std::vector<std::uint8_t> symbols;
    std::vector<double> positive;
    std::vector<double> negative;
    double radius = 0.0;

    std::size_t rows() const { return positive.size(); }
    /// Number of weights: dim for l1, dim * alphabet for l21.
    std::size_t width() const { return geometry == Geometry::l1 ? dim : dim * alphabet; }
    double total_weight() const;

    /// One row per sample; labels must be +1 or -1.
    static RegressionProblem dense(std::size_t dim, std::vector<double> features, std::span<const int> labels,
                                   double radius);
    static RegressionProblem one_hot(std::size_t dim, std::size_t alphabet, std::vector<std::uint8_t> symbols,
                                     std::span<const int> labels, double radius);

    /// Throws Error("invalid_problem") on inconsistent shapes, bad symbols,
    /// negative weights, empty problems or a negative radius.
    void validate() const;
};

/// Merges rows with identical features (summing label weights). The result
/// is sorted by features, so it does not depend on the input row order.
RegressionProblem compress(const RegressionProblem& problem);

double sigmoid(double z);
/// ln(1 + e^z) without overflow.
double softplus(double z);
/// Bernoulli KL divergence D(a || b).
double bernoulli_kl(double a, double b);

double l1_norm(std::span<const double> w);
/// Sum of Euclidean norms of the `cols`-wide rows of w.
double l21_norm(std::span<const double> w, std::size_t cols);

/// <w, x_r> for row r.
double margin(std::span<const double> weights, const RegressionProblem& problem, std::size_t r);

/// (1/N) sum ln(1 + exp(-y <w, x>)).
double logistic_loss(std::span<const double> weights, const RegressionProblem& problem);
/// (1/N) sum (sigmoid(<w, x>) - (y + 1) / 2) x.
std::vector<double> logistic_gradient(std::span<const double> weights, const RegressionProblem& problem);

struct SolveReport {
    std::vector<double> weights;
    std::size_t iterations = 0;
    /// Empirical loss at each iterate w^1..w^T (mirror descent) or at each
    /// accepted step (reference solver). Empty when recording is disabled.
    std::vector<double> loss_trajectory;
    /// Theoretical bound on loss(weights) - min loss; 0 when not applicable.
    double suboptimality_bound = 0.0;
    double final_loss = 0.0;
};

struct MirrorOptions {
    std::size_t iterations = 1000;
    bool record_trajectory = true;
    /// Observes each internal iterate w^1..w^T: the (2n+1)-simplex point for
    /// l1, the unit l21-ball point for l21.
    std::function<void(std::span<const double>)> on_iterate;
};

/// 2 W_1 sqrt(2 ln(2n + 1) / T).
double l1_mirror_bound(double radius, std::size_t dim, std::size_t iterations);
/// C W_{2,1} sqrt(ln(n) / T); the default C = e is a test constant.
double l21_mirror_bound(double radius, std::size_t dim, std::size_t iterations, double constant = 2.718281828459045);

/// Entropic mirror descent over the doubled simplex [x, -x, 0] * W_1.
/// Returns the iterate average mapped back to R^n. Throws Error("non_finite")
/// when the gradient stops being finite.
SolveReport mirror_descent_l1(const RegressionProblem& problem, const MirrorOptions& options);

/// Mirror descent with Phi(w) = (e ln n / p) ||w||_{2,p}^p, p = 1 + 1/ln n,
/// over the unit l21 ball with features scaled by W_{2,1}. Needs dim >= 3
/// (Error("unsupported_dimension") otherwise).
SolveReport mirror_descent_l21(const RegressionProblem& problem, const MirrorOptions& options);

/// argmin_{||w||_{2,1} <= 1} Phi(w) - <dual, w> for the mirror map above with
/// scale c = e ln n and exponent q = 1/(p - 1) = ln n.
std::vector<double> l21_mirror_step(std::span<const double> dual, std::size_t rows, std::size_t cols, double scale,
                                    double exponent);

/// Euclidean projection onto {||w||_1 <= radius} (sort based).
std::vector<double> project_l1_ball(std::span<const double> v, double radius);
/// Euclidean projection onto {||w||_{2,1} <= radius}.
std::vector<double> project_l21_ball(std::span<const double> v, std::size_t cols, double radius);

struct ReferenceOptions {
    double tolerance = 1e-9;  // on the gradient-mapping norm
    std::size_t max_iterations = 500000;
    bool record_trajectory = false;
};

/// Accelerated projected gradient with backtracking, run until the gradient
/// mapping norm is <= tolerance. Throws Error("not_converged") with the tail
/// of the loss trajectory when the iteration cap is hit. Intended for
/// width() <= 500.
SolveReport reference_minimizer(const RegressionProblem& problem, const ReferenceOptions& options = {});

/// L * ||w - P(w - grad / L)|| for the problem's constraint set.
double gradient_mapping_norm(std::span<const double> weights, const RegressionProblem& problem, double step_inverse);

}  // namespace mrfl
