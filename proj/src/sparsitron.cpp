#include "mrfl/sparsitron.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mrfl/error.hpp"
#include "mrfl/random.hpp"

namespace mrfl {

void SparsitronConfig::validate() const {
    require(radius >= 0.0 && std::isfinite(radius), "Sparsitron radius must be >= 0");
    require(candidate_fraction > 0.0 && candidate_fraction < 1.0, "candidate fraction must be in (0, 1)");
    require(learning_rate >= 0.0, "learning rate must be >= 0");
}

SolveReport sparsitron_learn(const RegressionProblem& problem, const SparsitronConfig& config) {
    config.validate();
    problem.validate();
    const std::size_t rows = problem.rows(), width = problem.width(), d = 2 * width + 1;
    for (std::size_t r = 0; r < rows; ++r)
        if (problem.positive[r] + problem.negative[r] != 1.0)
            fail("invalid_problem", "Sparsitron needs one sample per row (uncompressed problem)");
    if (problem.geometry == Geometry::l1)
        for (double x : problem.features)
            if (std::abs(x) > 1.0) fail("invalid_problem", "Sparsitron needs features in [-1, 1]");

    SolveReport report;
    report.weights.assign(width, 0.0);
    const double W = config.radius;
    if (W == 0.0) {
        report.final_loss = logistic_loss(report.weights, problem);
        return report;
    }

    std::vector<std::size_t> order(rows);
    std::iota(order.begin(), order.end(), 0);
    if (config.seed != 0) {
        Rng rng(config.seed);
        for (std::size_t i = rows; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    }

    std::size_t holdout = 0;
    if (config.select) {
        holdout = std::max(config.min_holdout,
                           static_cast<std::size_t>(std::ceil(config.candidate_fraction * static_cast<double>(rows))));
        if (rows <= holdout)
            fail("insufficient_samples", "insufficient samples for selection: " + std::to_string(rows) +
                                             " rows, held-out block needs " + std::to_string(holdout) + " plus one");
    }
    const std::size_t steps = rows - holdout;
    const double rate = config.learning_rate > 0.0
                            ? config.learning_rate
                            : std::log1p(std::sqrt(2.0 * std::log(static_cast<double>(d)) / static_cast<double>(steps)));

    auto label01 = [&](std::size_t r) { return problem.positive[r]; };
    const bool one_hot = problem.geometry == Geometry::l21;
    const std::size_t dim = problem.dim;
    // Held-out rows gathered once: flat coordinate per feature (one-hot) or values (dense).
    std::vector<std::size_t> hold_index;
    std::vector<double> hold_x, hold_y(holdout);
    for (std::size_t h = 0; h < holdout; ++h) {
        const std::size_t r = order[steps + h];
        hold_y[h] = label01(r);
        for (std::size_t j = 0; j < dim; ++j) {
            if (one_hot)
                hold_index.push_back(j * problem.alphabet + problem.symbols[r * dim + j]);
            else
                hold_x.push_back(problem.features[r * dim + j]);
        }
    }
    // Effective weights u = W (p+ - p-) in the original feature space.
    std::vector<double> logw(d, 0.0), p(d, 1.0 / static_cast<double>(d)), u(width), avg(width, 0.0), best(width);
    double best_error = std::numeric_limits<double>::infinity();

    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t c = 0; c < width; ++c) u[c] = W * (p[c] - p[width + c]);

        if (config.select) {
            double err = 0.0;
            for (std::size_t h = 0; h < holdout; ++h) {
                double z = 0.0;
                if (one_hot) {
                    const std::size_t* idx = hold_index.data() + h * dim;
                    for (std::size_t j = 0; j < dim; ++j) z += u[idx[j]];
                } else {
                    const double* x = hold_x.data() + h * dim;
                    for (std::size_t j = 0; j < dim; ++j) z += u[j] * x[j];
                }
                const double diff = sigmoid(z) - hold_y[h];
                err += diff * diff;
            }
            if (err < best_error) {
                best_error = err;
                best = u;
            }
        } else {
            for (std::size_t c = 0; c < width; ++c) avg[c] += u[c];
        }

        const std::size_t r = order[t];
        const double residual = sigmoid(margin(u, problem, r)) - label01(r);
        // Hedge loss on coordinate i is (1 + residual * xhat_i / W) / 2 with
        // xhat = [x, -x, 0] W; the shared 1/2 cancels in the normalization.
        if (one_hot) {
            for (std::size_t j = 0; j < dim; ++j) {
                const std::size_t c = j * problem.alphabet + problem.symbols[r * dim + j];
                logw[c] -= rate * 0.5 * residual;
                logw[width + c] += rate * 0.5 * residual;
            }
        } else {
            for (std::size_t c = 0; c < width; ++c) {
                const double x = problem.features[r * dim + c];
                logw[c] -= rate * 0.5 * residual * x;
                logw[width + c] += rate * 0.5 * residual * x;
            }
        }
        const double top = *std::max_element(logw.begin(), logw.end());
        double total = 0.0;
        for (std::size_t i = 0; i < d; ++i) total += (p[i] = std::exp(logw[i] - top));
        for (std::size_t i = 0; i < d; ++i) {
            p[i] /= total;
            logw[i] -= top;
        }
    }

    if (config.select) {
        report.weights = best;
    } else {
        for (std::size_t c = 0; c < width; ++c) report.weights[c] = avg[c] / static_cast<double>(steps);
    }
    report.iterations = steps;
    report.final_loss = logistic_loss(report.weights, problem);
    return report;
}

LearnResult sparsitron_learn_pairwise(const SampleSet& samples, LearnConfig config) {
    config.solver = SolverKind::sparsitron;
    return learn_pairwise(samples, config);
}

}  // namespace mrfl
