#include "embedkit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "embedkit/rng.hpp"

namespace embedkit::losses {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(what) + ": batch shape mismatch (" +
                                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.rows()) + "x" +
                                    std::to_string(b.cols()) + ")");
    }
}

// Row norms and unit rows; throws naming the offending row.
struct NormalizedBatch {
    Matrix unit;               // rows divided by their norms
    std::vector<double> norm;  // original row norms

    NormalizedBatch(const Matrix& batch, const char* role) : unit(batch) {
        norm.resize(batch.rows());
        for (std::size_t r = 0; r < batch.rows(); ++r) {
            double sq = 0.0;
            for (double v : batch.row(r)) sq += v * v;
            const double n = std::sqrt(sq);
            if (n == 0.0) {
                throw std::invalid_argument(std::string(role) + " row " + std::to_string(r) +
                                            " has zero norm");
            }
            norm[r] = n;
            for (double& v : unit.row(r)) v /= n;
        }
    }
};

double dot(std::span<const double> u, std::span<const double> v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
    return acc;
}

double clamp_cos(double value) { return std::clamp(value, -1.0, 1.0); }

// cosines[j*k + i] = cos(a_j, b_i)
std::vector<double> cosine_table(const NormalizedBatch& a, const NormalizedBatch& b) {
    const std::size_t k = a.unit.rows();
    std::vector<double> table(k * k);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < k; ++i) {
            table[j * k + i] = clamp_cos(dot(a.unit.row(j), b.unit.row(i)));
        }
    }
    return table;
}

// d cos(a_j, b_i) / d a_j = (b_hat_i - cos * a_hat_j) / |a_j|, accumulated
// into grad row `out` with coefficient c.
void add_cosine_grad(std::span<double> out, std::span<const double> self_unit,
                     std::span<const double> other_unit, double cos_value,
                     double self_norm, double c) {
    const double scale = c / self_norm;
    for (std::size_t t = 0; t < out.size(); ++t) {
        out[t] += scale * (other_unit[t] - cos_value * self_unit[t]);
    }
}

double log_sum_exp(std::span<const double> xs) {
    double m = xs[0];
    for (double x : xs) m = std::max(m, x);
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - m);
    return m + std::log(acc);
}

void require_nonempty(const Matrix& batch, const char* what) {
    if (batch.rows() == 0 || batch.cols() == 0) {
        throw std::invalid_argument(std::string(what) + ": empty batch");
    }
}

}  // namespace

double cosine_sim(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw std::invalid_argument("cosine_sim: dimension mismatch");
    }
    if (u.empty()) throw std::invalid_argument("cosine_sim: empty vectors");
    const double nu = std::sqrt(dot(u, u));
    const double nv = std::sqrt(dot(v, v));
    if (nu == 0.0 || nv == 0.0) {
        throw std::invalid_argument("cosine_sim: zero-norm input");
    }
    return clamp_cos(dot(u, v) / (nu * nv));
}

std::vector<double> mean_pool(const Matrix& tokens, const std::vector<bool>& mask) {
    require_nonempty(tokens, "mean_pool");
    if (!mask.empty() && mask.size() != tokens.rows()) {
        throw std::invalid_argument("mean_pool: mask length does not match row count");
    }
    std::vector<double> acc(tokens.cols(), 0.0);
    std::size_t kept = 0;
    for (std::size_t r = 0; r < tokens.rows(); ++r) {
        if (!mask.empty() && !mask[r]) continue;
        ++kept;
        for (std::size_t c = 0; c < tokens.cols(); ++c) acc[c] += tokens.at(r, c);
    }
    if (kept == 0) throw std::invalid_argument("mean_pool: all rows masked");
    for (double& v : acc) v /= static_cast<double>(kept);
    return acc;
}

LossResult pair_nce(const Matrix& queries, const Matrix& positives,
                    const LossParams& params, bool with_gradients) {
    require_nonempty(queries, "pair_nce");
    require_same_shape(queries, positives, "pair_nce");
    if (params.tau <= 0.0) throw std::invalid_argument("pair_nce: tau must be positive");

    const std::size_t k = queries.rows();
    const NormalizedBatch q(queries, "pair_nce: query");
    const NormalizedBatch p(positives, "pair_nce: positive");
    const std::vector<double> cos = cosine_table(q, p);
    const double inv_tau = 1.0 / params.tau;

    LossResult result;
    if (with_gradients) {
        result.has_gradients = true;
        result.grad_query = Matrix(k, queries.cols());
        result.grad_positive = Matrix(k, queries.cols());
    }

    double total = 0.0;
    std::vector<double> scaled(k);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < k; ++i) scaled[i] = cos[j * k + i] * inv_tau;
        const double lse = log_sum_exp(scaled);
        total += lse - scaled[j];

        if (with_gradients) {
            for (std::size_t i = 0; i < k; ++i) {
                const double softmax = std::exp(scaled[i] - lse);
                const double coeff =
                    (softmax - (i == j ? 1.0 : 0.0)) * inv_tau / static_cast<double>(k);
                if (coeff == 0.0) continue;
                add_cosine_grad(result.grad_query.row(j), q.unit.row(j), p.unit.row(i),
                                cos[j * k + i], q.norm[j], coeff);
                add_cosine_grad(result.grad_positive.row(i), p.unit.row(i), q.unit.row(j),
                                cos[j * k + i], p.norm[i], coeff);
            }
        }
    }
    result.value = total / static_cast<double>(k);
    return result;
}

LossResult pair_loss_bidirectional(const Matrix& queries, const Matrix& positives,
                                   const LossParams& params, bool with_gradients) {
    LossResult forward = pair_nce(queries, positives, params, with_gradients);
    LossResult reverse = pair_nce(positives, queries, params, with_gradients);
    LossResult result;
    result.value = forward.value + reverse.value;
    if (with_gradients) {
        result.has_gradients = true;
        result.grad_query = std::move(forward.grad_query);
        result.grad_query += reverse.grad_positive;
        result.grad_positive = std::move(forward.grad_positive);
        result.grad_positive += reverse.grad_query;
    }
    return result;
}

LossResult triplet_nce_plus(const Matrix& queries, const Matrix& positives,
                            const Matrix& negatives, const LossParams& params,
                            bool with_gradients) {
    require_nonempty(queries, "triplet_nce_plus");
    require_same_shape(queries, positives, "triplet_nce_plus");
    require_same_shape(queries, negatives, "triplet_nce_plus");
    if (params.tau <= 0.0) throw std::invalid_argument("triplet_nce_plus: tau must be positive");

    const std::size_t k = queries.rows();
    const NormalizedBatch q(queries, "triplet_nce_plus: query");
    const NormalizedBatch p(positives, "triplet_nce_plus: positive");
    const NormalizedBatch n(negatives, "triplet_nce_plus: negative");
    const std::vector<double> cos_p = cosine_table(q, p);
    const std::vector<double> cos_n = cosine_table(q, n);
    const double inv_tau = 1.0 / params.tau;

    LossResult result;
    if (with_gradients) {
        result.has_gradients = true;
        result.grad_query = Matrix(k, queries.cols());
        result.grad_positive = Matrix(k, queries.cols());
        result.grad_negative = Matrix(k, queries.cols());
    }

    double total = 0.0;
    std::vector<double> scaled(2 * k);  // positives then negatives
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < k; ++i) {
            scaled[i] = cos_p[j * k + i] * inv_tau;
            scaled[k + i] = cos_n[j * k + i] * inv_tau;
        }
        const double lse = log_sum_exp(scaled);
        total += lse - scaled[j];

        if (with_gradients) {
            for (std::size_t i = 0; i < k; ++i) {
                const double soft_p = std::exp(scaled[i] - lse);
                const double coeff_p =
                    (soft_p - (i == j ? 1.0 : 0.0)) * inv_tau / static_cast<double>(k);
                add_cosine_grad(result.grad_query.row(j), q.unit.row(j), p.unit.row(i),
                                cos_p[j * k + i], q.norm[j], coeff_p);
                add_cosine_grad(result.grad_positive.row(i), p.unit.row(i), q.unit.row(j),
                                cos_p[j * k + i], p.norm[i], coeff_p);

                const double soft_n = std::exp(scaled[k + i] - lse);
                const double coeff_n = soft_n * inv_tau / static_cast<double>(k);
                add_cosine_grad(result.grad_query.row(j), q.unit.row(j), n.unit.row(i),
                                cos_n[j * k + i], q.norm[j], coeff_n);
                add_cosine_grad(result.grad_negative.row(i), n.unit.row(i), q.unit.row(j),
                                cos_n[j * k + i], n.norm[i], coeff_n);
            }
        }
    }
    result.value = total / static_cast<double>(k);
    return result;
}

LossResult triplet_reverse_nce(const Matrix& queries, const Matrix& positives,
                               const LossParams& params, bool with_gradients) {
    // Definitionally pair_nce with the roles of the two batches swapped.
    LossResult swapped = pair_nce(positives, queries, params, with_gradients);
    LossResult result;
    result.value = swapped.value;
    if (with_gradients) {
        result.has_gradients = true;
        result.grad_query = std::move(swapped.grad_positive);
        result.grad_positive = std::move(swapped.grad_query);
    }
    return result;
}

LossResult triplet_margin(const Matrix& queries, const Matrix& positives,
                          const Matrix& negatives, const LossParams& params,
                          bool with_gradients) {
    require_nonempty(queries, "triplet_margin");
    require_same_shape(queries, positives, "triplet_margin");
    require_same_shape(queries, negatives, "triplet_margin");

    const std::size_t k = queries.rows();
    const NormalizedBatch q(queries, "triplet_margin: query");
    const NormalizedBatch p(positives, "triplet_margin: positive");
    const NormalizedBatch n(negatives, "triplet_margin: negative");

    LossResult result;
    if (with_gradients) {
        result.has_gradients = true;
        result.grad_query = Matrix(k, queries.cols());
        result.grad_positive = Matrix(k, queries.cols());
        result.grad_negative = Matrix(k, queries.cols());
    }

    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        const double cos_p = clamp_cos(dot(q.unit.row(j), p.unit.row(j)));
        const double cos_n = clamp_cos(dot(q.unit.row(j), n.unit.row(j)));
        const double hinge = cos_n - cos_p + params.epsilon;
        if (hinge > 0.0) {
            total += hinge;
            if (with_gradients) {
                const double coeff = 1.0 / static_cast<double>(k);
                add_cosine_grad(result.grad_query.row(j), q.unit.row(j), n.unit.row(j),
                                cos_n, q.norm[j], coeff);
                add_cosine_grad(result.grad_negative.row(j), n.unit.row(j), q.unit.row(j),
                                cos_n, n.norm[j], coeff);
                add_cosine_grad(result.grad_query.row(j), q.unit.row(j), p.unit.row(j),
                                cos_p, q.norm[j], -coeff);
                add_cosine_grad(result.grad_positive.row(j), p.unit.row(j), q.unit.row(j),
                                cos_p, p.norm[j], -coeff);
            }
        }
    }
    result.value = total / static_cast<double>(k);
    return result;
}

LossResult triplet_total(const Matrix& queries, const Matrix& positives,
                         const Matrix& negatives, const LossParams& params,
                         bool with_gradients) {
    LossResult nce = triplet_nce_plus(queries, positives, negatives, params, with_gradients);
    LossResult reverse = triplet_reverse_nce(queries, positives, params, with_gradients);
    LossResult margin = triplet_margin(queries, positives, negatives, params, with_gradients);

    LossResult result;
    result.value = params.weight_nce * nce.value + params.weight_reverse * reverse.value +
                   params.weight_margin * margin.value;
    if (with_gradients) {
        result.has_gradients = true;
        result.grad_query = std::move(nce.grad_query);
        result.grad_query.scale(params.weight_nce);
        result.grad_query += reverse.grad_query.scale(params.weight_reverse);
        result.grad_query += margin.grad_query.scale(params.weight_margin);

        result.grad_positive = std::move(nce.grad_positive);
        result.grad_positive.scale(params.weight_nce);
        result.grad_positive += reverse.grad_positive.scale(params.weight_reverse);
        result.grad_positive += margin.grad_positive.scale(params.weight_margin);

        result.grad_negative = std::move(nce.grad_negative);
        result.grad_negative.scale(params.weight_nce);
        result.grad_negative += margin.grad_negative.scale(params.weight_margin);
    }
    return result;
}

std::vector<Matrix> finite_diff_gradient(
    const std::function<double(const std::vector<Matrix>&)>& fn,
    std::vector<Matrix> inputs, double h) {
    if (h <= 0.0) throw std::invalid_argument("finite_diff_gradient: h must be positive");
    std::vector<Matrix> grads;
    grads.reserve(inputs.size());
    for (const Matrix& m : inputs) grads.emplace_back(m.rows(), m.cols());

    for (std::size_t m = 0; m < inputs.size(); ++m) {
        std::vector<double>& values = inputs[m].data();
        for (std::size_t idx = 0; idx < values.size(); ++idx) {
            const double saved = values[idx];
            values[idx] = saved + h;
            const double up = fn(inputs);
            values[idx] = saved - h;
            const double down = fn(inputs);
            values[idx] = saved;
            grads[m].data()[idx] = (up - down) / (2.0 * h);
        }
    }
    return grads;
}

double max_relative_error(const Matrix& analytic, const Matrix& numeric) {
    if (!analytic.same_shape(numeric)) {
        throw std::invalid_argument("max_relative_error: shape mismatch");
    }
    double scale = 0.0;
    for (std::size_t i = 0; i < analytic.data().size(); ++i) {
        scale = std::max(scale, std::abs(analytic.data()[i]));
        scale = std::max(scale, std::abs(numeric.data()[i]));
    }
    scale = std::max(scale, 1e-8);
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.data().size(); ++i) {
        worst = std::max(worst, std::abs(analytic.data()[i] - numeric.data()[i]) / scale);
    }
    return worst;
}

std::vector<GradCheckCase> run_gradient_checks(std::size_t batch_size, std::size_t dim,
                                               const LossParams& params, std::uint64_t seed,
                                               double h) {
    Rng rng(seed);
    const auto random_batch = [&]() {
        Matrix m(batch_size, dim);
        for (double& v : m.data()) v = rng.next_gaussian();
        return m;
    };
    const Matrix q = random_batch();
    const Matrix p = random_batch();
    const Matrix n = random_batch();

    std::vector<GradCheckCase> report;
    const auto check = [&](const std::string& name, const std::vector<Matrix>& inputs,
                           const std::function<double(const std::vector<Matrix>&)>& value_fn,
                           const std::vector<const Matrix*>& analytic) {
        const std::vector<Matrix> numeric = finite_diff_gradient(value_fn, inputs, h);
        double worst = 0.0;
        for (std::size_t i = 0; i < numeric.size(); ++i) {
            worst = std::max(worst, max_relative_error(*analytic[i], numeric[i]));
        }
        report.push_back({name, worst});
    };

    {
        const LossResult r = pair_nce(q, p, params, true);
        check("pair_nce", {q, p},
              [&](const std::vector<Matrix>& in) { return pair_nce(in[0], in[1], params).value; },
              {&r.grad_query, &r.grad_positive});
    }
    {
        const LossResult r = pair_loss_bidirectional(q, p, params, true);
        check("pair_loss_bidirectional", {q, p},
              [&](const std::vector<Matrix>& in) {
                  return pair_loss_bidirectional(in[0], in[1], params).value;
              },
              {&r.grad_query, &r.grad_positive});
    }
    {
        const LossResult r = triplet_nce_plus(q, p, n, params, true);
        check("triplet_nce_plus", {q, p, n},
              [&](const std::vector<Matrix>& in) {
                  return triplet_nce_plus(in[0], in[1], in[2], params).value;
              },
              {&r.grad_query, &r.grad_positive, &r.grad_negative});
    }
    {
        const LossResult r = triplet_reverse_nce(q, p, params, true);
        check("triplet_reverse_nce", {q, p},
              [&](const std::vector<Matrix>& in) {
                  return triplet_reverse_nce(in[0], in[1], params).value;
              },
              {&r.grad_query, &r.grad_positive});
    }
    {
        const LossResult r = triplet_margin(q, p, n, params, true);
        check("triplet_margin", {q, p, n},
              [&](const std::vector<Matrix>& in) {
                  return triplet_margin(in[0], in[1], in[2], params).value;
              },
              {&r.grad_query, &r.grad_positive, &r.grad_negative});
    }
    {
        const LossResult r = triplet_total(q, p, n, params, true);
        check("triplet_total", {q, p, n},
              [&](const std::vector<Matrix>& in) {
                  return triplet_total(in[0], in[1], in[2], params).value;
              },
              {&r.grad_query, &r.grad_positive, &r.grad_negative});
    }
    return report;
}

}  // namespace embedkit::losses
