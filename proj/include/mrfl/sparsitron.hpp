#pragma once

#include <cstddef>
#include <cstdint>

#include "mrfl/learner.hpp"
#include "mrfl/logreg.hpp"
#include "mrfl/sampler.hpp"

namespace mrfl {

/// Online Hedge learner for an l1-bounded sigmoid model (Klivans and Meka's
/// Sparsitron). Its hyperparameters come from that algorithm, not from the
/// constrained-regression learners in this library:
///   - Hedge factor beta = 1 / (1 + sqrt(2 ln(2d + 1) / steps)), d the
///     flattened feature width;
///   - one candidate per learning step;
///   - selection by held-out squared error between sigmoid(<w, x>) and
///     (y + 1) / 2 over the last max(min_holdout, ceil(fraction * N)) rows.
struct SparsitronConfig {
    double radius = 0.0;
    /// Fraction of samples held out for candidate selection.
    double candidate_fraction = 0.01;
    std::size_t min_holdout = 200;
    /// Rows are shuffled with this seed before splitting; 0 keeps input order.
    std::uint64_t seed = 0;
    /// false: no held-out block, return the average of the Hedge iterates.
    bool select = true;
    /// Overrides -ln(beta) when > 0.
    double learning_rate = 0.0;

    void validate() const;
};

/// Runs Sparsitron on the doubled embedding [x, -x, 0] * radius of the
/// flattened features. Every row must carry exactly one sample. Throws
/// Error("insufficient_samples") when the held-out block leaves no learning
/// samples.
SolveReport sparsitron_learn(const RegressionProblem& problem, const SparsitronConfig& config);

/// learn_pairwise with Sparsitron as the per-(alpha, beta) solver; the l1
/// radius is 2 lambda k.
LearnResult sparsitron_learn_pairwise(const SampleSet& samples, LearnConfig config);

}  // namespace mrfl
