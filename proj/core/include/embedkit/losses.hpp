#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "embedkit/matrix.hpp"

namespace embedkit::losses {

struct LossParams {
    double tau = 0.05;      // temperature applied to cosine similarities
    double epsilon = 0.05;  // minimal margin of the hinge term
    // Unit weights combine the three triplet terms; exposed for
    // experimentation only.
    double weight_nce = 1.0;
    double weight_reverse = 1.0;
    double weight_margin = 1.0;
};

// Gradients are taken with respect to the raw (pre-normalization) embedding
// rows; the cosine quotient rule is applied analytically.
struct LossResult {
    double value = 0.0;
    bool has_gradients = false;
    Matrix grad_query;
    Matrix grad_positive;
    Matrix grad_negative;  // empty for losses that take no negatives
};

// u.v / (|u||v|), clamped to [-1, 1] against rounding. Throws on zero-norm
// input.
double cosine_sim(std::span<const double> u, std::span<const double> v);

// Arithmetic mean of the unmasked rows. An empty mask means all rows count;
// throws if every row is masked out.
std::vector<double> mean_pool(const Matrix& tokens,
                              const std::vector<bool>& mask = {});

// In-batch contrastive loss over matched (query, positive) rows: each query
// is scored against every positive of the batch through a temperature-scaled
// softmax over cosine similarities.
LossResult pair_nce(const Matrix& queries, const Matrix& positives,
                    const LossParams& params, bool with_gradients = false);

// pair_nce in both directions: queries against positives plus positives
// against queries. Symmetric in its two arguments.
LossResult pair_loss_bidirectional(const Matrix& queries,
                                   const Matrix& positives,
                                   const LossParams& params,
                                   bool with_gradients = false);

// Extended in-batch loss whose denominator also includes every negative of
// the batch.
LossResult triplet_nce_plus(const Matrix& queries, const Matrix& positives,
                            const Matrix& negatives, const LossParams& params,
                            bool with_gradients = false);

// Positives scored against every query; negatives do not appear.
LossResult triplet_reverse_nce(const Matrix& queries, const Matrix& positives,
                               const LossParams& params,
                               bool with_gradients = false);

// mean_j ReLU(s(q_j, n_j) - s(q_j, p_j) + epsilon); subgradient 0 at the
// hinge point.
LossResult triplet_margin(const Matrix& queries, const Matrix& positives,
                          const Matrix& negatives, const LossParams& params,
                          bool with_gradients = false);

// Weighted sum of triplet_nce_plus, triplet_reverse_nce and triplet_margin
// (unit weights by default).
LossResult triplet_total(const Matrix& queries, const Matrix& positives,
                         const Matrix& negatives, const LossParams& params,
                         bool with_gradients = false);

// Central finite differences (f(x+h) - f(x-h)) / 2h per entry of every
// input matrix. The numerical oracle against which analytic gradients are
// verified; it only ever calls the value path.
std::vector<Matrix> finite_diff_gradient(
    const std::function<double(const std::vector<Matrix>&)>& fn,
    std::vector<Matrix> inputs, double h);

// Max absolute difference relative to the largest gradient magnitude of
// either side (floored at 1e-8 to keep all-zero gradients comparable).
double max_relative_error(const Matrix& analytic, const Matrix& numeric);

struct GradCheckCase {
    std::string loss;
    double max_rel_error = 0.0;
};

// Runs every loss on a seeded random batch and reports the worst
// analytic-vs-finite-difference deviation per loss.
std::vector<GradCheckCase> run_gradient_checks(std::size_t batch_size,
                                               std::size_t dim,
                                               const LossParams& params,
                                               std::uint64_t seed,
                                               double h = 1e-5);

}  // namespace embedkit::losses
