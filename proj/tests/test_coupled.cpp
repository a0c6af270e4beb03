#include <doctest.h>

#include "ladder/coupled_kernel.hpp"
#include "ladder/errors.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ladder;

namespace {

const StructuredKernel kString{StructuredKernelConfig{}};

double rel_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("identical structures force jitter")
{
    auto triples = fixture::random_triples(2, 3, 1);
    triples[1].x = triples[0].x;
    const auto state = CoupledKernelState::fit(triples, MaternParams::unit(3), kString);
    CHECK(state.jitter_used() > 0.0);
    const double kxx = kString(triples[0].x, triples[0].x);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(state.structural_gram()(i, j) == doctest::Approx(kxx));
}

TEST_CASE("basis reconstructs the latent gram")
{
    const auto triples = fixture::random_triples(3, 2, 2);
    const auto state = CoupledKernelState::fit(triples, MaternParams::unit(2), kString);
    CHECK(rel_frobenius(state.basis() * state.basis().transpose(), state.latent_gram()) < 1e-12);
}

TEST_CASE("latent gram equals independently recomputed matern values")
{
    const auto triples = fixture::random_triples(5, 3, 3);
    MaternParams p{Eigen::Vector3d(0.8, 1.5, 2.0), 1.7};
    const auto state = CoupledKernelState::fit(triples, p, kString);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            CHECK(state.latent_gram()(i, j) ==
                  doctest::Approx(oracle::matern52(triples[i].z, triples[j].z, p.lengthscales, 1.7)).epsilon(1e-13));
}

TEST_CASE("feature map of a training point is its basis row")
{
    const auto triples = fixture::random_triples(12, 4, 4);
    const auto state = CoupledKernelState::fit(triples, MaternParams::unit(4), kString);
    for (int j = 0; j < 12; ++j) {
        const Eigen::VectorXd xi = state.feature_map(triples[j].z, triples[j].x);
        const Eigen::VectorXd row = state.basis().row(j).transpose();
        CHECK((xi - row).norm() <= 1e-4 * std::max(1.0, row.norm()));
    }
}

TEST_CASE("feature map factors through the decoded structure")
{
    const auto triples = fixture::random_triples(6, 2, 5);
    const auto state = CoupledKernelState::fit(triples, MaternParams::unit(2), kString);
    const Structure x = tokenize("v * sin( v )");
    const Eigen::Vector2d z1(0.1, 0.2), z2(-3.0, 5.0);
    CHECK(state.feature_map(z1, x) == state.feature_map(z2, x));
}

TEST_CASE("feature map matches a dense-inverse computation")
{
    const auto triples = fixture::random_triples(10, 3, 6);
    const auto state = CoupledKernelState::fit(triples, MaternParams::unit(3), kString);
    const double jitter = state.jitter_used();

    // Independent route: LU inverse of the jittered K, explicit V from the
    // eigendecomposition of L.
    Eigen::MatrixXd k(10, 10);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) k(i, j) = kString(triples[i].x, triples[j].x);
    k.diagonal().array() += jitter;
    const Eigen::MatrixXd k_inv = k.fullPivLu().inverse();
    const Eigen::MatrixXd v = state.basis();

    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        const Structure x = fixture::random_structure(rng);
        Eigen::VectorXd kz(10);
        for (int i = 0; i < 10; ++i) kz(i) = kString(x, triples[i].x);
        const Eigen::VectorXd expected = v.transpose() * (k_inv * kz);
        const Eigen::VectorXd got = state.feature_map(x);
        CHECK((got - expected).norm() <= 1e-8 * std::max(1.0, expected.norm()));

        // Quadratic-form route: k_z^T K^-1 L K^-1 k_z.
        const double quad = kz.dot(k_inv * state.latent_gram() * k_inv * kz);
        CHECK(state.coupled_kernel(x, x) == doctest::Approx(quad).epsilon(1e-8));
    }
}

TEST_CASE("coupled kernel reproduces the latent gram on training points")
{
    const auto triples = fixture::random_triples(15, 3, 8);
    const auto state = CoupledKernelState::fit(triples, MaternParams::unit(3), kString);
    const auto& l = state.latent_gram();
    for (int i = 0; i < 15; ++i)
        for (int j = 0; j < 15; ++j)
            CHECK(std::abs(state.coupled_kernel(triples[i].z, triples[i].x, triples[j].z, triples[j].x) - l(i, j)) <=
                  1e-4 * std::max(1.0, std::abs(l(i, j))));

    std::vector<Structure> xs;
    for (const auto& t : triples) xs.push_back(t.x);
    CHECK(rel_frobenius(state.coupled_gram(xs), l) <= 1e-4);
}

TEST_CASE("coupled kernel is a feature-map dot product and PSD")
{
    const auto triples = fixture::random_triples(8, 2, 9);
    const auto state = CoupledKernelState::fit(triples, MaternParams::unit(2), kString);
    std::mt19937_64 rng(10);
    std::vector<Structure> xs;
    for (int i = 0; i < 20; ++i) xs.push_back(fixture::random_structure(rng));
    CHECK(state.coupled_kernel(xs[0], xs[1]) ==
          doctest::Approx(state.feature_map(xs[0]).dot(state.feature_map(xs[1]))).epsilon(1e-14));

    const auto single = state.coupled_gram(std::span<const Structure>(xs).first(1));
    CHECK(single.rows() == 1);
    CHECK(single(0, 0) >= 0.0);

    const auto gram = state.coupled_gram(xs);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    CHECK(es.eigenvalues().minCoeff() >= -1e-6 * gram.trace());
}

TEST_CASE("fingerprint structured kernel works in the coupled state")
{
    StructuredKernelConfig cfg;
    cfg.kind = StructuredKernelKind::Fingerprint;
    const StructuredKernel fp(cfg);
    const auto triples = fixture::random_triples(10, 2, 12);
    const auto state = CoupledKernelState::fit(triples, MaternParams::unit(2), fp);
    std::vector<Structure> xs;
    for (const auto& t : triples) xs.push_back(t.x);
    CHECK(rel_frobenius(state.coupled_gram(xs), state.latent_gram()) <= 1e-4);
}
