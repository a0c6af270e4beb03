#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ladder/errors.hpp"
#include "ladder/gp.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ladder;

namespace {

const StructuredKernel kString{StructuredKernelConfig{}};

std::vector<EvaluatedTriple> one_d(const std::vector<double>& zs, const std::vector<double>& ys)
{
    std::vector<EvaluatedTriple> out;
    const char* names[] = {"v", "1", "2", "3", "v + 1", "v * 2"};
    for (std::size_t i = 0; i < zs.size(); ++i) {
        LatentVector z(1);
        z << zs[i];
        out.push_back({z, tokenize(names[i % 6]), ys[i]});
    }
    return out;
}

GPHyperparams hyper(Eigen::Index d, double ls, double scale, double noise, double mean)
{
    return {MaternParams{Eigen::VectorXd::Constant(d, ls), scale}, noise, mean};
}

}  // namespace

TEST_CASE("gaussian log likelihood")
{
    Eigen::MatrixXd c1 = Eigen::MatrixXd::Ones(1, 1);
    Eigen::VectorXd y1 = Eigen::VectorXd::Zero(1);
    CHECK(gaussian_log_likelihood(c1, y1, 0.0, 0.0) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)));

    Eigen::MatrixXd c(2, 2);
    c << 2.0, 0.6, 0.6, 1.5;
    Eigen::VectorXd y(2);
    y << 0.4, -1.3;
    const double noise = 0.1, mean = 0.25;
    Eigen::MatrixXd cov = c;
    cov.diagonal().array() += noise;
    CHECK(gaussian_log_likelihood(c, y, mean, noise) ==
          doctest::Approx(oracle::mvn_logpdf(y, Eigen::VectorXd::Constant(2, mean), cov)).epsilon(1e-12));

    const Eigen::VectorXd centered = Eigen::VectorXd::Constant(2, 0.7);
    const double logdet = std::log(cov.determinant());
    CHECK(gaussian_log_likelihood(c, centered, 0.7, noise) ==
          doctest::Approx(-0.5 * logdet - std::log(2.0 * std::numbers::pi)).epsilon(1e-12));
}

TEST_CASE("log marginal likelihood agrees between kernel modes")
{
    const auto triples = fixture::random_triples(20, 3, 21);
    const auto hp = hyper(3, 1.2, 4.0, 0.05, 1.0);
    const auto latent = GPModel::condition(triples, hp, KernelMode::LatentOnly, kString);
    const auto coupled = GPModel::condition(triples, hp, KernelMode::StructureCoupled, kString);
    CHECK(latent.log_marginal_likelihood() == doctest::Approx(log_marginal_likelihood(triples, hp)).epsilon(1e-12));
    CHECK(std::abs(latent.log_marginal_likelihood() - coupled.log_marginal_likelihood()) <= 1e-6);
}

TEST_CASE("two-point posterior matches the closed form")
{
    const auto triples = one_d({0.0, 1.0}, {1.0, -1.0});
    const auto model = GPModel::condition(triples, hyper(1, 1.0, 1.0, 0.1, 0.0), KernelMode::LatentOnly, kString);
    LatentVector z(1);
    z << 0.25;
    const auto p = posterior_predict(z, tokenize("v"), model);
    CHECK(p.mean == doctest::Approx(0.47796754491802373).epsilon(1e-12));
    CHECK(p.variance == doctest::Approx(0.11959210014115518).epsilon(1e-12));
}

TEST_CASE("single training point variance")
{
    const auto triples = one_d({0.3}, {2.0});
    const double noise = 1e-4;
    for (auto mode : {KernelMode::LatentOnly, KernelMode::StructureCoupled}) {
        const auto model = GPModel::condition(triples, hyper(1, 1.0, 1.0, noise, 0.0), mode, kString);
        const auto p = posterior_predict(triples[0].z, triples[0].x, model);
        CHECK(p.variance <= noise + 1e-6);
    }
}

TEST_CASE("posterior interpolates training points in both modes")
{
    const auto triples = fixture::random_triples(25, 4, 22);
    for (auto mode : {KernelMode::LatentOnly, KernelMode::StructureCoupled}) {
        const auto model = GPModel::condition(triples, hyper(4, 1.0, 10.0, 1e-6, 0.0), mode, kString);
        const double jitter = model.coupled_state() ? model.coupled_state()->jitter_used() : 0.0;
        const double tol = 3.0 * std::sqrt(1e-6 + jitter);
        // Duplicate structures share one feature vector in coupled mode, so only
        // structures seen once are interpolated exactly.
        for (std::size_t j = 0; j < triples.size(); ++j) {
            int copies = 0;
            for (const auto& t : triples) copies += t.x == triples[j].x;
            if (copies > 1) continue;
            const auto p = posterior_predict(triples[j].z, triples[j].x, model);
            CHECK(std::abs(p.mean - triples[j].y) <= tol * std::max(1.0, std::abs(triples[j].y)));
        }
    }
}

TEST_CASE("coupled posterior depends only on the structure")
{
    const auto triples = fixture::random_triples(10, 2, 23);
    const auto model = GPModel::condition(triples, hyper(2, 1.0, 1.0, 0.01, 0.0), KernelMode::StructureCoupled, kString);
    const Structure x = tokenize("sin( v ) + 2");
    const auto a = posterior_predict(Eigen::Vector2d(0.0, 0.0), x, model);
    const auto b = posterior_predict(Eigen::Vector2d(4.0, -1.0), x, model);
    CHECK(a.mean == b.mean);
    CHECK(a.variance == b.variance);
    CHECK(model.predict_structure(x).mean == a.mean);
    CHECK_THROWS_AS(GPModel::condition(triples, hyper(2, 1.0, 1.0, 0.01, 0.0), KernelMode::LatentOnly, kString)
                        .predict_structure(x),
                    ConfigError);
}

TEST_CASE("surrogate mae")
{
    const auto triples = fixture::random_triples(15, 3, 24);
    const auto model = GPModel::condition(triples, hyper(3, 1.0, 10.0, 1e-6, 0.0), KernelMode::LatentOnly, kString);
    CHECK(surrogate_mae(model, triples) <= 3.0 * std::sqrt(1e-6) * 10.0);

    const auto constant = one_d({0.0, 1.0, 2.5}, {4.0, 4.0, 4.0});
    const auto flat = GPModel::condition(constant, hyper(1, 1.0, 1.0, 1e-6, 4.0), KernelMode::LatentOnly, kString);
    CHECK(surrogate_mae(flat, one_d({0.7, 3.0}, {4.0, 4.0})) == doctest::Approx(0.0));
}

TEST_CASE("three-point mae matches a dense computation")
{
    const auto train = one_d({-1.0, 0.0, 2.0}, {0.5, -0.2, 1.1});
    const auto test = one_d({-0.5, 1.0, 3.0}, {0.0, 0.3, 2.0});
    const auto hp = hyper(1, 0.8, 1.5, 0.02, 0.1);
    const auto model = GPModel::condition(train, hp, KernelMode::LatentOnly, kString);

    Eigen::MatrixXd k(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) k(i, j) = oracle::matern52(train[i].z, train[j].z, hp.latent.lengthscales, 1.5);
    k.diagonal().array() += 0.02;
    const Eigen::Vector3d r(0.5 - 0.1, -0.2 - 0.1, 1.1 - 0.1);
    const Eigen::VectorXd w = k.fullPivLu().solve(r);
    double mae = 0.0;
    for (const auto& t : test) {
        Eigen::Vector3d ks;
        for (int i = 0; i < 3; ++i) ks(i) = oracle::matern52(t.z, train[i].z, hp.latent.lengthscales, 1.5);
        mae += std::abs(0.1 + ks.dot(w) - t.y);
    }
    CHECK(surrogate_mae(model, test) == doctest::Approx(mae / 3.0).epsilon(1e-10));
}

TEST_CASE("fitting improves on the starting point")
{
    const auto triples = fixture::random_triples(30, 3, 25);
    GPConfig cfg;
    cfg.mode = KernelMode::LatentOnly;
    cfg.seed = 1;
    const auto model = fit_hyperparams(triples, cfg);
    CHECK(model.log_marginal_likelihood() >= log_marginal_likelihood(triples, initial_hyperparams(triples, 1e-6)));
    CHECK(model.hyperparams().noise_variance >= 1e-6);

    GPConfig again = cfg;
    const auto repeat = fit_hyperparams(triples, again);
    CHECK(repeat.hyperparams().latent.lengthscales == model.hyperparams().latent.lengthscales);
}

TEST_CASE("constant targets fit the constant mean")
{
    auto triples = fixture::random_triples(12, 2, 26);
    for (auto& t : triples) t.y = 3.5;
    GPConfig cfg;
    cfg.mode = KernelMode::StructureCoupled;
    const auto model = fit_hyperparams(triples, cfg);
    CHECK(model.hyperparams().mean_const == doctest::Approx(3.5).epsilon(1e-3));
    CHECK(model.log_marginal_likelihood() >= log_marginal_likelihood(triples, initial_hyperparams(triples, 1e-6)));
}

TEST_CASE("lengthscale recovery from GP prior samples")
{
    std::mt19937_64 rng(27);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    int within = 0;
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<EvaluatedTriple> triples(100);
        Eigen::MatrixXd pts(100, 1);
        for (int i = 0; i < 100; ++i) pts(i, 0) = 2.5 * u(rng);
        Eigen::MatrixXd c = matern_gram(pts, MaternParams::unit(1));
        c.diagonal().array() += 1e-4;
        const Eigen::MatrixXd chol = c.llt().matrixL();
        Eigen::VectorXd e(100);
        for (auto& v : e) v = g(rng);
        const Eigen::VectorXd y = chol * e;
        for (int i = 0; i < 100; ++i) triples[i] = {pts.row(i).transpose(), tokenize("v"), y(i)};
        GPConfig cfg;
        cfg.mode = KernelMode::LatentOnly;
        cfg.seed = static_cast<std::uint64_t>(rep);
        const double ls = fit_hyperparams(triples, cfg).hyperparams().latent.lengthscales(0);
        within += ls >= 0.5 && ls <= 2.0;
    }
    CHECK(within >= 9);
}

TEST_CASE("fast leave-one-out equals refitting without each point")
{
    const auto triples = fixture::random_triples(12, 3, 28);
    const auto hp = hyper(3, 1.0, 5.0, 0.05, 0.3);
    StructuredKernelConfig sc;
    sc.string.gap_decay = 0.5;
    sc.string.match_decay = 0.8;
    const StructuredKernel structured(sc);

    std::vector<StructuredKernel::Prepared> prepared;
    for (const auto& t : triples) prepared.push_back(structured.prepare(t.x));
    const double jitter = default_jitter(structured.gram(prepared));

    double naive = 0.0;
    for (std::size_t i = 0; i < triples.size(); ++i) {
        std::vector<EvaluatedTriple> rest;
        for (std::size_t j = 0; j < triples.size(); ++j)
            if (j != i) rest.push_back(triples[j]);
        const auto model = GPModel::condition(rest, hp, KernelMode::StructureCoupled, structured, 1e-6, jitter);
        naive += std::abs(posterior_predict(triples[i].z, triples[i].x, model).mean - triples[i].y);
    }
    naive /= static_cast<double>(triples.size());
    CHECK(coupled_loo_error(triples, hp, structured) == doctest::Approx(naive).epsilon(1e-6));
}

TEST_CASE("tuned structured kernel picks a grid value")
{
    const auto triples = fixture::random_triples(15, 2, 29);
    GPConfig cfg;
    cfg.tune_structured = true;
    cfg.restarts = 2;
    cfg.evals_per_restart = 50;
    const auto model = fit_hyperparams(triples, cfg);
    const auto& p = model.structured_kernel().config().string;
    CHECK((p.gap_decay == 0.25 || p.gap_decay == 0.5 || p.gap_decay == 0.75));
    CHECK((p.match_decay == 0.5 || p.match_decay == 0.8 || p.match_decay == 1.0));
}

TEST_CASE("fitting needs two points")
{
    const auto triples = fixture::random_triples(1, 2, 30);
    CHECK_THROWS_AS(fit_hyperparams(triples, GPConfig{}), Error);
}
