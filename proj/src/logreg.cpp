#include "mrfl/logreg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "mrfl/error.hpp"

namespace mrfl {

namespace {

void check_labels(std::span<const int> labels, std::vector<double>& pos, std::vector<double>& neg) {
    pos.resize(labels.size());
    neg.resize(labels.size());
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] != 1 && labels[r] != -1) fail("invalid_problem", "labels must be +1 or -1");
        pos[r] = labels[r] == 1 ? 1.0 : 0.0;
        neg[r] = labels[r] == 1 ? 0.0 : 1.0;
    }
}

/// Loss and gradient of the weighted logistic objective at `u`. The gradient
/// (if requested) is written to `grad`, which must have problem.width() slots.
double evaluate(std::span<const double> u, const RegressionProblem& problem, std::span<double> grad,
                bool want_loss) {
    const std::size_t rows = problem.rows(), dim = problem.dim, k = problem.alphabet;
    const bool dense = problem.geometry == Geometry::l1;
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        double z = 0.0;
        if (dense) {
            const double* x = problem.features.data() + r * dim;
            for (std::size_t j = 0; j < dim; ++j) z += u[j] * x[j];
        } else {
            const std::uint8_t* s = problem.symbols.data() + r * dim;
            for (std::size_t j = 0; j < dim; ++j) z += u[j * k + s[j]];
        }
        const double pos = problem.positive[r], neg = problem.negative[r];
        const double e = std::exp(-std::abs(z));
        const double sig = z >= 0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
        if (want_loss) {
            const double l = std::log1p(e);
            loss += pos * (std::max(-z, 0.0) + l) + neg * (std::max(z, 0.0) + l);
        }
        const double coef = (pos + neg) * sig - pos;
        if (coef == 0.0 || grad.empty()) continue;
        if (dense) {
            const double* x = problem.features.data() + r * dim;
            for (std::size_t j = 0; j < dim; ++j) grad[j] += coef * x[j];
        } else {
            const std::uint8_t* s = problem.symbols.data() + r * dim;
            for (std::size_t j = 0; j < dim; ++j) grad[j * k + s[j]] += coef;
        }
    }
    const double total = problem.total_weight();
    for (double& g : grad) g /= total;
    return loss / total;
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

[[noreturn]] void non_finite(const char* solver, std::size_t iteration) {
    fail("non_finite", std::string(solver) + ": non-finite gradient at iteration " + std::to_string(iteration));
}

std::vector<double> project(std::span<const double> v, const RegressionProblem& problem, double radius) {
    return problem.geometry == Geometry::l1 ? project_l1_ball(v, radius)
                                            : project_l21_ball(v, problem.alphabet, radius);
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

SolveReport zero_solution(const RegressionProblem& problem) {
    SolveReport report;
    report.weights.assign(problem.width(), 0.0);
    report.final_loss = std::numbers::ln2;
    return report;
}

}  // namespace

double RegressionProblem::total_weight() const {
    double t = 0.0;
    for (std::size_t r = 0; r < rows(); ++r) t += positive[r] + negative[r];
    return t;
}

RegressionProblem RegressionProblem::dense(std::size_t dim, std::vector<double> features,
                                           std::span<const int> labels, double radius) {
    RegressionProblem p;
    p.geometry = Geometry::l1;
    p.dim = dim;
    p.features = std::move(features);
    p.radius = radius;
    check_labels(labels, p.positive, p.negative);
    p.validate();
    return p;
}

RegressionProblem RegressionProblem::one_hot(std::size_t dim, std::size_t alphabet, std::vector<std::uint8_t> symbols,
                                             std::span<const int> labels, double radius) {
    RegressionProblem p;
    p.geometry = Geometry::l21;
    p.dim = dim;
    p.alphabet = alphabet;
    p.symbols = std::move(symbols);
    p.radius = radius;
    check_labels(labels, p.positive, p.negative);
    p.validate();
    return p;
}

void RegressionProblem::validate() const {
    if (dim == 0) fail("invalid_problem", "feature dimension must be positive");
    if (rows() == 0) fail("invalid_problem", "problem needs at least one sample");
    if (negative.size() != rows()) fail("invalid_problem", "label weight arrays differ in length");
    if (!(radius >= 0.0) || !std::isfinite(radius)) fail("invalid_problem", "radius must be finite and >= 0");
    if (geometry == Geometry::l1) {
        if (features.size() != rows() * dim) fail("invalid_problem", "feature array has wrong size");
        if (!all_finite(features)) fail("invalid_problem", "non-finite feature");
    } else {
        if (alphabet == 0) fail("invalid_problem", "alphabet must be positive");
        if (symbols.size() != rows() * dim) fail("invalid_problem", "symbol array has wrong size");
        for (auto s : symbols)
            if (s >= alphabet) fail("invalid_problem", "one-hot position out of range");
    }
    for (std::size_t r = 0; r < rows(); ++r)
        if (!(positive[r] >= 0.0) || !(negative[r] >= 0.0)) fail("invalid_problem", "negative label weight");
    if (!(total_weight() > 0.0)) fail("invalid_problem", "total sample weight must be positive");
}

RegressionProblem compress(const RegressionProblem& problem) {
    const std::size_t dim = problem.dim;
    const bool dense = problem.geometry == Geometry::l1;
    std::vector<std::size_t> order(problem.rows());
    std::iota(order.begin(), order.end(), 0);
    auto less = [&](std::size_t a, std::size_t b) {
        if (dense) {
            const double* x = problem.features.data();
            return std::lexicographical_compare(x + a * dim, x + (a + 1) * dim, x + b * dim, x + (b + 1) * dim);
        }
        const std::uint8_t* s = problem.symbols.data();
        return std::lexicographical_compare(s + a * dim, s + (a + 1) * dim, s + b * dim, s + (b + 1) * dim);
    };
    auto same = [&](std::size_t a, std::size_t b) { return !less(a, b) && !less(b, a); };
    std::stable_sort(order.begin(), order.end(), less);

    RegressionProblem out;
    out.geometry = problem.geometry;
    out.dim = dim;
    out.alphabet = problem.alphabet;
    out.radius = problem.radius;
    for (std::size_t idx = 0; idx < order.size(); ++idx) {
        const std::size_t r = order[idx];
        if (idx > 0 && same(order[idx - 1], r)) {
            out.positive.back() += problem.positive[r];
            out.negative.back() += problem.negative[r];
            continue;
        }
        if (dense)
            out.features.insert(out.features.end(), problem.features.begin() + r * dim,
                                problem.features.begin() + (r + 1) * dim);
        else
            out.symbols.insert(out.symbols.end(), problem.symbols.begin() + r * dim,
                               problem.symbols.begin() + (r + 1) * dim);
        out.positive.push_back(problem.positive[r]);
        out.negative.push_back(problem.negative[r]);
    }
    return out;
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double bernoulli_kl(double a, double b) {
    auto term = [](double p, double q) { return p == 0.0 ? 0.0 : p * std::log(p / q); };
    return term(a, b) + term(1.0 - a, 1.0 - b);
}

double l1_norm(std::span<const double> w) {
    double s = 0.0;
    for (double x : w) s += std::abs(x);
    return s;
}

double l21_norm(std::span<const double> w, std::size_t cols) {
    double s = 0.0;
    for (std::size_t r = 0; r * cols < w.size(); ++r) s += norm2(w.subspan(r * cols, cols));
    return s;
}

double margin(std::span<const double> weights, const RegressionProblem& problem, std::size_t r) {
    double z = 0.0;
    if (problem.geometry == Geometry::l1) {
        for (std::size_t j = 0; j < problem.dim; ++j) z += weights[j] * problem.features[r * problem.dim + j];
    } else {
        for (std::size_t j = 0; j < problem.dim; ++j)
            z += weights[j * problem.alphabet + problem.symbols[r * problem.dim + j]];
    }
    return z;
}

double logistic_loss(std::span<const double> weights, const RegressionProblem& problem) {
    require(weights.size() == problem.width(), "weight vector has wrong size");
    return evaluate(weights, problem, {}, true);
}

std::vector<double> logistic_gradient(std::span<const double> weights, const RegressionProblem& problem) {
    require(weights.size() == problem.width(), "weight vector has wrong size");
    std::vector<double> grad(problem.width());
    evaluate(weights, problem, grad, false);
    return grad;
}

double l1_mirror_bound(double radius, std::size_t dim, std::size_t iterations) {
    return 2.0 * radius * std::sqrt(2.0 * std::log(2.0 * static_cast<double>(dim) + 1.0) /
                                    static_cast<double>(iterations));
}

double l21_mirror_bound(double radius, std::size_t dim, std::size_t iterations, double constant) {
    return constant * radius * std::sqrt(std::log(static_cast<double>(dim)) / static_cast<double>(iterations));
}

SolveReport mirror_descent_l1(const RegressionProblem& problem, const MirrorOptions& options) {
    problem.validate();
    require(problem.geometry == Geometry::l1, "mirror_descent_l1 needs an l1 problem");
    require(options.iterations >= 1, "iteration count must be >= 1");
    if (problem.radius == 0.0) return zero_solution(problem);

    const std::size_t n = problem.dim, d = 2 * n + 1, T = options.iterations;
    const double W = problem.radius;
    const double step = (1.0 / (2.0 * W)) * std::sqrt(2.0 * std::log(static_cast<double>(d)) / static_cast<double>(T));

    // Simplex iterate kept as log-weights; p is its normalization.
    std::vector<double> logw(d, 0.0), p(d, 1.0 / static_cast<double>(d)), avg(d, 0.0);
    std::vector<double> u(n), grad(n);
    SolveReport report;
    report.iterations = T;
    if (options.record_trajectory) report.loss_trajectory.reserve(T);

    for (std::size_t t = 1; t <= T; ++t) {
        if (options.on_iterate) options.on_iterate(p);
        for (std::size_t i = 0; i < d; ++i) avg[i] += p[i];
        // <p, [x, -x, 0] W> = <W (p+ - p-), x>
        for (std::size_t j = 0; j < n; ++j) u[j] = W * (p[j] - p[n + j]);
        const double loss = evaluate(u, problem, grad, options.record_trajectory);
        if (!all_finite(grad)) non_finite("mirror_descent_l1", t);
        if (options.record_trajectory) report.loss_trajectory.push_back(loss);

        // g = W [G, -G, 0]
        for (std::size_t j = 0; j < n; ++j) {
            logw[j] -= step * W * grad[j];
            logw[n + j] += step * W * grad[j];
        }
        const double top = *std::max_element(logw.begin(), logw.end());
        double total = 0.0;
        for (std::size_t i = 0; i < d; ++i) total += (p[i] = std::exp(logw[i] - top));
        for (std::size_t i = 0; i < d; ++i) {
            p[i] /= total;
            logw[i] -= top;
        }
    }

    report.weights.resize(n);
    for (std::size_t j = 0; j < n; ++j) report.weights[j] = (avg[j] - avg[n + j]) / static_cast<double>(T) * W;
    report.final_loss = logistic_loss(report.weights, problem);
    report.suboptimality_bound = l1_mirror_bound(W, n, T);
    return report;
}

std::vector<double> l21_mirror_step(std::span<const double> dual, std::size_t rows, std::size_t cols, double scale,
                                    double exponent) {
    std::vector<double> norms(rows);
    for (std::size_t j = 0; j < rows; ++j) norms[j] = norm2(dual.subspan(j * cols, cols));

    // Row radii r_j(mu) = ((|dual_j| - mu)_+ / scale)^exponent; mu = 0 is the
    // unconstrained inverse mirror map, otherwise mu solves sum_j r_j = 1.
    auto radii_sum = [&](double mu, double* slope) {
        double s = 0.0, ds = 0.0;
        for (double t : norms) {
            const double gap = (t - mu) / scale;
            if (gap <= 0.0) continue;
            const double r = std::pow(gap, exponent);
            s += r;
            ds += exponent * r / gap / scale;
        }
        if (slope) *slope = ds;
        return s;
    };

    double mu = 0.0;
    double slope = 0.0;
    double total = radii_sum(0.0, &slope);
    if (total > 1.0) {
        // f(mu) = sum r_j(mu) - 1 is convex and decreasing, so Newton from the
        // left converges monotonically without overshooting the root.
        for (int it = 0; it < 200 && total - 1.0 > 1e-15 && slope > 0.0; ++it) {
            const double next = mu + (total - 1.0) / slope;
            if (!(next > mu)) break;
            mu = next;
            total = radii_sum(mu, &slope);
        }
    }
    const double shrink = total > 1.0 ? 1.0 / total : 1.0;

    std::vector<double> w(rows * cols, 0.0);
    for (std::size_t j = 0; j < rows; ++j) {
        const double t = norms[j];
        const double gap = (t - mu) / scale;
        if (t <= 0.0 || gap <= 0.0) continue;
        const double r = std::pow(gap, exponent) * shrink;
        for (std::size_t a = 0; a < cols; ++a) w[j * cols + a] = dual[j * cols + a] * (r / t);
    }
    return w;
}

SolveReport mirror_descent_l21(const RegressionProblem& problem, const MirrorOptions& options) {
    problem.validate();
    require(problem.geometry == Geometry::l21, "mirror_descent_l21 needs an l21 problem");
    require(options.iterations >= 1, "iteration count must be >= 1");
    if (problem.dim < 3)
        fail("unsupported_dimension", "unsupported dimension for this mirror map: need at least 3 rows, got " +
                                          std::to_string(problem.dim));
    if (problem.radius == 0.0) return zero_solution(problem);

    const std::size_t n = problem.dim, k = problem.alphabet, T = options.iterations, width = n * k;
    const double W = problem.radius;
    const double log_n = std::log(static_cast<double>(n));
    const double scale = std::numbers::e * log_n;  // e ln n
    const double p = 1.0 + 1.0 / log_n;
    const double step = (1.0 / (2.0 * W)) * std::sqrt(std::numbers::e * log_n / static_cast<double>(T));

    std::vector<double> w(width, 1.0 / (static_cast<double>(n) * std::sqrt(static_cast<double>(k))));
    std::vector<double> avg(width, 0.0), u(width), grad(width), dual(width);
    SolveReport report;
    report.iterations = T;
    if (options.record_trajectory) report.loss_trajectory.reserve(T);

    for (std::size_t t = 1; t <= T; ++t) {
        if (options.on_iterate) options.on_iterate(w);
        for (std::size_t i = 0; i < width; ++i) {
            avg[i] += w[i];
            u[i] = W * w[i];
        }
        const double loss = evaluate(u, problem, grad, options.record_trajectory);
        if (!all_finite(grad)) non_finite("mirror_descent_l21", t);
        if (options.record_trajectory) report.loss_trajectory.push_back(loss);

        // dual = grad Phi(w) - step * W * grad; grad Phi row j = scale |w_j|^{p-2} w_j
        for (std::size_t j = 0; j < n; ++j) {
            const std::span<const double> row(w.data() + j * k, k);
            const double r = norm2(row);
            const double factor = r > 0.0 ? scale * std::pow(r, p - 2.0) : 0.0;
            for (std::size_t a = 0; a < k; ++a)
                dual[j * k + a] = factor * row[a] - step * W * grad[j * k + a];
        }
        w = l21_mirror_step(dual, n, k, scale, log_n);
        if (!all_finite(w)) non_finite("mirror_descent_l21", t);
    }

    report.weights.resize(width);
    for (std::size_t i = 0; i < width; ++i) report.weights[i] = avg[i] / static_cast<double>(T) * W;
    report.final_loss = logistic_loss(report.weights, problem);
    report.suboptimality_bound = l21_mirror_bound(W, n, T);
    return report;
}

std::vector<double> project_l1_ball(std::span<const double> v, double radius) {
    std::vector<double> out(v.begin(), v.end());
    if (radius <= 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        return out;
    }
    if (l1_norm(v) <= radius) return out;
    std::vector<double> mags(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) mags[i] = std::abs(v[i]);
    std::sort(mags.begin(), mags.end(), std::greater<>());
    double cumsum = 0.0, threshold = 0.0;
    for (std::size_t j = 0; j < mags.size(); ++j) {
        cumsum += mags[j];
        const double candidate = (cumsum - radius) / static_cast<double>(j + 1);
        if (mags[j] - candidate > 0.0) threshold = candidate;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double m = std::max(std::abs(v[i]) - threshold, 0.0);
        out[i] = v[i] < 0 ? -m : m;
    }
    return out;
}

std::vector<double> project_l21_ball(std::span<const double> v, std::size_t cols, double radius) {
    const std::size_t rows = v.size() / cols;
    std::vector<double> norms(rows);
    for (std::size_t j = 0; j < rows; ++j) norms[j] = norm2(v.subspan(j * cols, cols));
    const std::vector<double> target = project_l1_ball(norms, radius);
    std::vector<double> out(v.begin(), v.end());
    for (std::size_t j = 0; j < rows; ++j) {
        const double f = norms[j] > 0.0 ? target[j] / norms[j] : 0.0;
        for (std::size_t a = 0; a < cols; ++a) out[j * cols + a] *= f;
    }
    return out;
}

double gradient_mapping_norm(std::span<const double> weights, const RegressionProblem& problem, double step_inverse) {
    std::vector<double> grad = logistic_gradient(weights, problem);
    std::vector<double> trial(weights.size());
    for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = weights[i] - grad[i] / step_inverse;
    trial = project(trial, problem, problem.radius);
    double s = 0.0;
    for (std::size_t i = 0; i < trial.size(); ++i) s += (weights[i] - trial[i]) * (weights[i] - trial[i]);
    return step_inverse * std::sqrt(s);
}

SolveReport reference_minimizer(const RegressionProblem& problem, const ReferenceOptions& options) {
    problem.validate();
    if (problem.radius == 0.0) return zero_solution(problem);

    const std::size_t width = problem.width();
    std::vector<double> x(width, 0.0), y(width, 0.0), grad(width), x_new(width), trial(width);
    double fx = evaluate(x, problem, grad, true);
    double lipschitz = 1e-2;
    // Hessian <= 0.25 max_r ||x_r||^2; past this, a failed sufficient-decrease
    // test is rounding noise and doubling further only inflates the floor.
    double max_sq = 0.0;
    if (problem.geometry == Geometry::l1) {
        for (std::size_t r = 0; r < problem.rows(); ++r) {
            double sq = 0.0;
            for (std::size_t j = 0; j < problem.dim; ++j) sq += problem.features[r * problem.dim + j] * problem.features[r * problem.dim + j];
            max_sq = std::max(max_sq, sq);
        }
    } else {
        max_sq = static_cast<double>(problem.dim);
    }
    const double lipschitz_cap = std::max(0.25 * max_sq, lipschitz);
    double momentum = 1.0;
    std::array<double, 10> recent{};
    recent.fill(std::nan(""));
    SolveReport report;

    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
        const double fy = evaluate(y, problem, grad, true);
        if (!all_finite(grad)) non_finite("reference_minimizer", it);
        double fnew = 0.0;
        for (;;) {
            for (std::size_t i = 0; i < width; ++i) trial[i] = y[i] - grad[i] / lipschitz;
            x_new = project(trial, problem, problem.radius);
            fnew = evaluate(x_new, problem, {}, true);
            double model = fy;
            double dist2 = 0.0;
            for (std::size_t i = 0; i < width; ++i) {
                const double d = x_new[i] - y[i];
                model += grad[i] * d;
                dist2 += d * d;
            }
            model += 0.5 * lipschitz * dist2;
            if (fnew <= model + 1e-15 * std::abs(model) || lipschitz >= lipschitz_cap) break;
            lipschitz = std::min(2.0 * lipschitz, lipschitz_cap);
        }
        double step_norm = 0.0;
        for (std::size_t i = 0; i < width; ++i) step_norm += (x_new[i] - y[i]) * (x_new[i] - y[i]);
        const double mapping_at_y = lipschitz * std::sqrt(step_norm);

        if (fnew > fx && momentum > 1.0) {
            // Function-value restart: drop momentum and retry from x.
            y = x;
            momentum = 1.0;
            if (mapping_at_y == 0.0) break;
            continue;
        }
        const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        const double beta = (momentum - 1.0) / next_momentum;
        for (std::size_t i = 0; i < width; ++i) y[i] = x_new[i] + beta * (x_new[i] - x[i]);
        x.swap(x_new);
        fx = fnew;
        momentum = next_momentum;
        report.iterations = it;
        if (options.record_trajectory) report.loss_trajectory.push_back(fx);
        recent[it % recent.size()] = fx;

        if (mapping_at_y <= options.tolerance && gradient_mapping_norm(x, problem, lipschitz) <= options.tolerance) {
            report.weights = x;
            report.final_loss = fx;
            return report;
        }
    }
    if (gradient_mapping_norm(x, problem, lipschitz) <= options.tolerance) {
        report.weights = x;
        report.final_loss = fx;
        return report;
    }
    std::ostringstream msg;
    msg << "reference_minimizer did not converge within " << options.max_iterations
        << " iterations; final loss " << fx << ", gradient mapping " << gradient_mapping_norm(x, problem, lipschitz);
    msg << "; recent losses:";
    for (std::size_t i = 1; i <= recent.size(); ++i) {
        const double v = recent[(report.iterations + i) % recent.size()];
        if (!std::isnan(v)) msg << ' ' << v;
    }
    fail("not_converged", msg.str());
}

}  // namespace mrfl
