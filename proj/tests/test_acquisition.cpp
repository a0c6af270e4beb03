#include <doctest.h>

#include <cmath>
#include <random>

#include "ladder/acquisition.hpp"
#include "ladder/errors.hpp"
#include "support.hpp"

using namespace ladder;

namespace {

double monte_carlo_ei(double mu, double sigma, double incumbent, int samples, std::uint64_t seed, double* se)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double gain = std::max(incumbent - (mu + sigma * g(rng)), 0.0);
        sum += gain;
        sum2 += gain * gain;
    }
    const double n = samples;
    const double mean = sum / n;
    *se = std::sqrt((sum2 / n - mean * mean) / n);
    return mean;
}

CodebookModel corner_codebook()
{
    std::vector<Structure> xs{tokenize("v"), tokenize("1"), tokenize("2"), tokenize("3")};
    Eigen::MatrixXd emb(4, 2);
    emb << -2, -2, 2, -2, -2, 2, 2, 2;
    return codebook_from_embeddings(xs, emb);
}

}  // namespace

TEST_CASE("normal pdf and cdf")
{
    CHECK(std_normal_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-15));
    CHECK(std_normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(std_normal_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-12));
}

TEST_CASE("expected improvement degenerate and closed-form values")
{
    CHECK(expected_improvement({1.0 + 1.0, 0.0, 0.0}, 1.0) == 0.0);
    CHECK(expected_improvement({-2.0, 0.0, 0.0}, 0.0) == doctest::Approx(2.0));
    CHECK(expected_improvement({0.5, 1.0, 1.0}, 0.5) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
}

TEST_CASE("expected improvement agrees with Monte Carlo")
{
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-2.0, 2.0), s(0.1, 2.0);
    for (int i = 0; i < 5; ++i) {
        const double mu = u(rng), sigma = s(rng), inc = u(rng);
        double se = 0.0;
        const double mc = monte_carlo_ei(mu, sigma, inc, 200000, 100 + i, &se);
        CHECK(std::abs(expected_improvement({mu, sigma * sigma, sigma * sigma}, inc) - mc) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("cma-es converges on the sphere")
{
    CmaConfig cfg;
    cfg.iterations = 40;
    cfg.restarts = 1;
    const auto sphere = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        std::mt19937_64 rng(seed);
        const auto r = cmaes_minimize(sphere, Eigen::VectorXd::Ones(5), cfg, rng);
        CHECK(r.best_value < 1e-7);
        CHECK(r.evaluations <= 2000);
        CHECK(r.best_value == doctest::Approx(sphere(r.best_point)));
    }
}

TEST_CASE("cma-es is deterministic and survives flat objectives")
{
    CmaConfig cfg;
    const auto rosen = [](const Eigen::VectorXd& x) {
        return 100.0 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1.0 - x(0), 2);
    };
    std::mt19937_64 a(9), b(9);
    const auto ra = cmaes_minimize(rosen, Eigen::Vector2d(0.0, 0.0), cfg, a);
    const auto rb = cmaes_minimize(rosen, Eigen::Vector2d(0.0, 0.0), cfg, b);
    CHECK(ra.best_point == rb.best_point);
    CHECK(ra.best_value == rb.best_value);

    std::mt19937_64 c(3);
    const auto flat = cmaes_minimize([](const Eigen::VectorXd&) { return 4.0; }, Eigen::Vector3d(1, 2, 3), cfg, c);
    CHECK(flat.best_value == 4.0);
    CHECK(flat.best_point.size() == 3);
}

TEST_CASE("cma config validation")
{
    CmaConfig cfg;
    cfg.sigma0 = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.population = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("acquisition result beats its starting point")
{
    const auto& latent = fixture::small_codebook();
    const auto x0 = latent.database()[0];
    std::vector<EvaluatedTriple> one{{latent.encode(x0), x0, 1.0}};
    GPHyperparams hp{MaternParams::unit(latent.dim()), 1e-4, 0.0};
    const auto gp = GPModel::condition(one, hp, KernelMode::LatentOnly, StructuredKernel{});

    AcquisitionOptions opts;
    opts.cma.restarts = 1;
    opts.duplicate_penalty = false;
    const SearchBox box = latent_bounds(latent);
    std::mt19937_64 rng(5), copy(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::VectorXd start(latent.dim());
    for (Eigen::Index k = 0; k < start.size(); ++k) start(k) = box.lo(k) + (box.hi(k) - box.lo(k)) * unit(copy);

    const auto result = optimize_acquisition(gp, latent, 1.0, {}, opts, rng);
    CHECK(result.ei >= expected_improvement(posterior_predict(start, latent.decode(start), gp), 1.0));
    CHECK(result.x == latent.decode(result.z));
}

TEST_CASE("acquisition raises when every candidate is a duplicate")
{
    const std::vector<Structure> xs{tokenize("v")};
    const auto latent = codebook_from_embeddings(xs, Eigen::MatrixXd::Zero(1, 2));
    std::vector<EvaluatedTriple> one{{Eigen::Vector2d::Zero(), xs[0], 0.0}};
    const auto gp = GPModel::condition(one, {MaternParams::unit(2), 1e-4, 0.0}, KernelMode::StructureCoupled,
                                       StructuredKernel{});
    AcquisitionOptions opts;
    opts.cma.restarts = 2;
    opts.cma.iterations = 2;
    opts.cma.bounds = SearchBox{Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1)};
    std::mt19937_64 rng(1);
    const std::unordered_set<Structure, StructureHash> evaluated{xs[0]};
    try {
        optimize_acquisition(gp, latent, 0.0, evaluated, opts, rng);
        FAIL("expected AllCandidatesDuplicate");
    } catch (const AllCandidatesDuplicate& e) {
        CHECK(e.fallback().x == xs[0]);
    }
}

TEST_CASE("acquisition reaches the grid maximum on a 2-d toy problem")
{
    const auto latent = corner_codebook();
    std::vector<EvaluatedTriple> data;
    const double zs[][2] = {{-1.0, -1.0}, {1.5, 0.5}, {0.0, 1.2}, {-1.5, 1.0}, {0.8, -1.4}};
    const double ys[] = {0.3, -0.4, 0.9, 0.1, 0.6};
    for (int i = 0; i < 5; ++i) {
        const Eigen::Vector2d z(zs[i][0], zs[i][1]);
        data.push_back({z, latent.decode(z), ys[i]});
    }
    GPHyperparams hp{MaternParams{Eigen::Vector2d(0.7, 0.7), 1.0}, 1e-4, 0.2};
    const auto gp = GPModel::condition(data, hp, KernelMode::LatentOnly, StructuredKernel{});
    const double incumbent = -0.4;

    AcquisitionOptions opts;
    opts.duplicate_penalty = false;
    std::mt19937_64 rng(2);
    const auto result = optimize_acquisition(gp, latent, incumbent, {}, opts, rng);

    const SearchBox box = latent_bounds(latent);
    double grid_best = 0.0;
    for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 100; ++j) {
            const Eigen::Vector2d z(box.lo(0) + (box.hi(0) - box.lo(0)) * i / 99.0,
                                    box.lo(1) + (box.hi(1) - box.lo(1)) * j / 99.0);
            grid_best = std::max(grid_best, expected_improvement(gp.predict(z, latent.decode(z)), incumbent));
        }
    CHECK(result.ei >= 0.95 * grid_best);
}
