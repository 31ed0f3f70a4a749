#include <doctest.h>

#include <cmath>

#include "embedkit/losses.hpp"
#include "embedkit/rng.hpp"

using namespace embedkit;
using namespace embedkit::losses;

namespace {

Matrix random_batch(Rng& rng, std::size_t k, std::size_t d) {
    Matrix m(k, d);
    for (double& v : m.data()) v = rng.next_gaussian();
    return m;
}

Matrix rows(std::vector<std::vector<double>> values) {
    const std::size_t k = values.size();
    const std::size_t d = values[0].size();
    Matrix m(k, d);
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t c = 0; c < d; ++c) m.at(r, c) = values[r][c];
    }
    return m;
}

}  // namespace

TEST_CASE("cosine_sim basics") {
    const std::vector<double> x = {3.0, -1.0, 2.0};
    CHECK(cosine_sim(x, x) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_sim(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
    CHECK_THROWS(cosine_sim(std::vector<double>{0, 0}, std::vector<double>{1, 0}));
    CHECK_THROWS(cosine_sim(std::vector<double>{1, 0}, std::vector<double>{1, 0, 0}));
}

TEST_CASE("cosine_sim scale invariance") {
    Rng rng(101);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> u(5), v(5);
        for (auto& x : u) x = rng.next_gaussian();
        for (auto& x : v) x = rng.next_gaussian();
        const double alpha = std::exp(rng.next_gaussian());  // > 0
        std::vector<double> scaled = u;
        for (auto& x : scaled) x *= alpha;
        CHECK(cosine_sim(scaled, v) == doctest::Approx(cosine_sim(u, v)).epsilon(1e-9));
    }
}

TEST_CASE("mean_pool") {
    CHECK(mean_pool(rows({{2.0, 4.0}})) == std::vector<double>{2.0, 4.0});
    CHECK(mean_pool(rows({{1.0, 0.0}, {0.0, 1.0}})) == std::vector<double>{0.5, 0.5});

    Rng rng(55);
    const Matrix tokens = random_batch(rng, 7, 4);
    std::vector<bool> mask = {true, false, true, true, false, true, false};
    const std::vector<double> pooled = mean_pool(tokens, mask);
    // direct sum/count oracle
    for (std::size_t c = 0; c < 4; ++c) {
        double sum = 0.0;
        int kept = 0;
        for (std::size_t r = 0; r < 7; ++r) {
            if (mask[r]) {
                sum += tokens.at(r, c);
                ++kept;
            }
        }
        CHECK(pooled[c] == doctest::Approx(sum / kept).epsilon(1e-12));
    }
    CHECK_THROWS(mean_pool(tokens, std::vector<bool>(7, false)));
    CHECK_THROWS(mean_pool(tokens, std::vector<bool>{true}));
}

TEST_CASE("pair_nce k=1 is zero") {
    const Matrix q = rows({{0.3, 0.4, 0.5}});
    const Matrix p = rows({{-0.2, 0.9, 0.1}});
    LossParams params;  // tau = 0.05
    CHECK(std::abs(pair_nce(q, p, params).value) <= 1e-12);
    CHECK(std::abs(pair_loss_bidirectional(q, p, params).value) <= 1e-12);
    CHECK(std::abs(triplet_reverse_nce(q, p, params).value) <= 1e-12);
}

TEST_CASE("pair_nce orthonormal construction at tau=1") {
    // s(q_j, p_j) = 1, s(q_j, p_i) = 0: per-row loss = ln(1 + e^{-1}).
    const Matrix q = rows({{1, 0}, {0, 1}});
    const Matrix p = rows({{1, 0}, {0, 1}});
    LossParams params;
    params.tau = 1.0;
    CHECK(pair_nce(q, p, params).value ==
          doctest::Approx(0.31326168751822286).epsilon(1e-12));
}

TEST_CASE("pair losses reject bad input") {
    LossParams params;
    CHECK_THROWS(pair_nce(rows({{1, 0}}), rows({{1, 0}, {0, 1}}), params));
    CHECK_THROWS_WITH_AS(pair_nce(rows({{1, 0}, {0, 0}}), rows({{1, 0}, {0, 1}}), params),
                         doctest::Contains("row 1"), std::invalid_argument);
    LossParams bad;
    bad.tau = 0.0;
    CHECK_THROWS(pair_nce(rows({{1, 0}}), rows({{1, 0}}), bad));
}

TEST_CASE("bidirectional loss is symmetric and compositional") {
    Rng rng(7);
    const Matrix q = random_batch(rng, 5, 8);
    const Matrix p = random_batch(rng, 5, 8);
    LossParams params;
    const LossResult qp = pair_loss_bidirectional(q, p, params);
    const LossResult pq = pair_loss_bidirectional(p, q, params);
    CHECK(qp.value == pq.value);  // a+b vs b+a, exact
    CHECK(qp.value ==
          doctest::Approx(pair_nce(q, p, params).value + pair_nce(p, q, params).value)
              .epsilon(1e-15));
}

TEST_CASE("triplet_nce_plus constants") {
    LossParams params;  // tau = 0.05
    // s(q,p) = s(q,n): two equal terms in the softmax, loss = ln 2.
    const Matrix q = rows({{1.0, 0.0}});
    const Matrix same = rows({{0.6, 0.8}});
    CHECK(triplet_nce_plus(q, same, same, params).value ==
          doctest::Approx(0.6931471805599453).epsilon(1e-9));

    // s(q,p) = 1, s(q,n) = -1 at tau = 0.05: residual about e^{-40}.
    const Matrix p = rows({{2.0, 0.0}});
    const Matrix n = rows({{-1.0, 0.0}});
    CHECK(triplet_nce_plus(q, p, n, params).value < 1e-10);
    CHECK(triplet_nce_plus(q, p, n, params).value >= 0.0);
}

TEST_CASE("triplet_reverse_nce equals role-swapped pair_nce") {
    Rng rng(13);
    const Matrix q = random_batch(rng, 6, 10);
    const Matrix p = random_batch(rng, 6, 10);
    LossParams params;
    CHECK(triplet_reverse_nce(q, p, params).value == pair_nce(p, q, params).value);
}

TEST_CASE("triplet_margin cases") {
    LossParams params;  // epsilon = 0.05
    // cos(q,p) = 0.8, cos(q,n) = 0.3: hinge satisfied.
    const double a = std::sqrt(1 - 0.8 * 0.8);
    const double b = std::sqrt(1 - 0.3 * 0.3);
    const Matrix q = rows({{1, 0}});
    const Matrix p = rows({{0.8, a}});
    const Matrix n = rows({{0.3, b}});
    CHECK(triplet_margin(q, p, n, params).value == 0.0);

    // s(q,p) = s(q,n) exactly: loss = epsilon, bitwise.
    const Matrix same = rows({{0.6, 0.8}});
    CHECK(triplet_margin(q, same, same, params).value == 0.05);
}

TEST_CASE("triplet_total composes its three terms") {
    Rng rng(17);
    const Matrix q = random_batch(rng, 4, 6);
    const Matrix p = random_batch(rng, 4, 6);
    const Matrix n = random_batch(rng, 4, 6);
    LossParams params;
    const double expected = triplet_nce_plus(q, p, n, params).value +
                            triplet_reverse_nce(q, p, params).value +
                            triplet_margin(q, p, n, params).value;
    CHECK(triplet_total(q, p, n, params).value == doctest::Approx(expected).epsilon(1e-15));

    // k=1 with p = n: ln 2 + 0 + epsilon.
    const Matrix q1 = rows({{1.0, 0.0}});
    const Matrix s1 = rows({{0.6, 0.8}});
    CHECK(triplet_total(q1, s1, s1, params).value ==
          doctest::Approx(0.7431471805599453).epsilon(1e-9));
}

TEST_CASE("finite differences recover analytic gradients of simple functions") {
    // linear: f(X) = sum c_i x_i
    const std::vector<double> coeffs = {0.5, -2.0, 3.25, 0.125};
    const auto linear = [&](const std::vector<Matrix>& in) {
        double acc = 0.0;
        for (std::size_t i = 0; i < in[0].data().size(); ++i) {
            acc += coeffs[i] * in[0].data()[i];
        }
        return acc;
    };
    Matrix x(2, 2);
    x.data() = {1.0, 2.0, 3.0, 4.0};
    const auto grads = finite_diff_gradient(linear, {x}, 1e-5);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(grads[0].data()[i] == doctest::Approx(coeffs[i]).epsilon(1e-9));
    }

    // quadratic: f(X) = |X|^2, gradient 2X
    const auto quadratic = [](const std::vector<Matrix>& in) {
        double acc = 0.0;
        for (double v : in[0].data()) acc += v * v;
        return acc;
    };
    const auto qgrads = finite_diff_gradient(quadratic, {x}, 1e-5);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(qgrads[0].data()[i] == doctest::Approx(2.0 * x.data()[i]).epsilon(1e-8));
    }
}

TEST_CASE("analytic gradients match finite differences") {
    LossParams paper;  // tau = 0.05
    LossParams mild;
    mild.tau = 1.0;
    for (const LossParams& params : {paper, mild}) {
        for (std::uint64_t seed : {401ULL, 402ULL, 403ULL}) {
            const auto report = run_gradient_checks(6, 9, params, seed);
            REQUIRE(report.size() == 6);
            for (const auto& c : report) {
                INFO(c.loss, " tau=", params.tau, " seed=", seed);
                CHECK(c.max_rel_error < 1e-4);
            }
        }
    }
}

TEST_CASE("losses are finite, nonnegative and permutation invariant") {
    Rng rng(211);
    LossParams params;
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t k = 2 + rng.next_below(6);
        const std::size_t d = 3 + rng.next_below(10);
        const Matrix q = random_batch(rng, k, d);
        const Matrix p = random_batch(rng, k, d);
        const Matrix n = random_batch(rng, k, d);

        const double total = triplet_total(q, p, n, params).value;
        CHECK(std::isfinite(total));
        CHECK(total >= 0.0);
        CHECK(pair_loss_bidirectional(q, p, params).value >= 0.0);

        // permute pair indices consistently
        std::vector<std::size_t> perm(k);
        for (std::size_t i = 0; i < k; ++i) perm[i] = i;
        rng.shuffle(std::span<std::size_t>(perm));
        Matrix q2(k, d), p2(k, d), n2(k, d);
        for (std::size_t r = 0; r < k; ++r) {
            for (std::size_t c = 0; c < d; ++c) {
                q2.at(r, c) = q.at(perm[r], c);
                p2.at(r, c) = p.at(perm[r], c);
                n2.at(r, c) = n.at(perm[r], c);
            }
        }
        CHECK(triplet_total(q2, p2, n2, params).value == doctest::Approx(total).epsilon(1e-9));
        CHECK(pair_nce(q2, p2, params).value ==
              doctest::Approx(pair_nce(q, p, params).value).epsilon(1e-9));
    }
}

TEST_CASE("row scaling leaves losses unchanged") {
    Rng rng(212);
    LossParams params;
    const std::size_t k = 5, d = 7;
    const Matrix q = random_batch(rng, k, d);
    const Matrix p = random_batch(rng, k, d);
    const Matrix n = random_batch(rng, k, d);
    const double base = triplet_total(q, p, n, params).value;
    for (int trial = 0; trial < 50; ++trial) {
        Matrix q2 = q, p2 = p, n2 = n;
        for (std::size_t r = 0; r < k; ++r) {
            const double s = std::exp(2.0 * rng.next_gaussian());
            for (double& v : q2.row(r)) v *= s;
        }
        const double sp = std::exp(rng.next_gaussian());
        for (double& v : p2.row(rng.next_below(k))) v *= sp;
        CHECK(triplet_total(q2, p2, n2, params).value == doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("margin is zero whenever every row satisfies it with slack") {
    LossParams params;
    const Matrix q = rows({{1, 0, 0}, {0, 1, 0}});
    const Matrix p = rows({{1, 0.1, 0}, {0.1, 1, 0}});   // near-parallel positives
    const Matrix n = rows({{0, 0, 1}, {0, 0, 1}});       // orthogonal negatives
    CHECK(triplet_margin(q, p, n, params).value == 0.0);
}

TEST_CASE("raising the query-negative similarity never lowers the total loss") {
    LossParams params;
    const Matrix q = rows({{1, 0, 0}});
    const Matrix p = rows({{0.9, 0.4358898943540674, 0}});
    double previous = -1.0;
    // sweep the negative from opposite to nearly parallel with q
    for (double t = -0.95; t < 0.96; t += 0.05) {
        const Matrix n = rows({{t, std::sqrt(1.0 - t * t), 0}});
        const double value = triplet_total(q, p, n, params).value;
        CHECK(value >= previous - 1e-12);
        previous = value;
    }
}
