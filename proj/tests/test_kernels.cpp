#include <doctest.h>

#include <random>
#include <set>

#include "ladder/errors.hpp"
#include "ladder/expr.hpp"
#include "ladder/kernels.hpp"
#include "ladder/structured_kernel.hpp"
#include "oracles.hpp"

using namespace ladder;

namespace {

double sk(const std::vector<int>& a, const std::vector<int>& b, double gap, double match, int n, bool exact = false)
{
    StringKernelParams p{gap, match, n, exact};
    return string_kernel(std::span<const int>(a), std::span<const int>(b), p);
}

}  // namespace

TEST_CASE("matern 5/2 basics")
{
    MaternParams p{Eigen::VectorXd::Constant(2, 0.7), 2.5};
    Eigen::VectorXd a(2), b(2);
    a << 0.3, -1.0;
    b << 1.1, 0.4;
    CHECK(matern52(a, a, p) == doctest::Approx(2.5));
    CHECK(matern52(a, b, p) == matern52(b, a, p));
    CHECK(matern52(a, b, p) == doctest::Approx(oracle::matern52(a, b, p.lengthscales, 2.5)).epsilon(1e-13));

    Eigen::VectorXd z0(1), z1(1);
    z0 << 0.0;
    z1 << 1.0;
    CHECK(matern52(z0, z1, MaternParams::unit(1)) == doctest::Approx(0.5239941088318203).epsilon(1e-14));
}

TEST_CASE("matern gram and cross agree with pointwise values")
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    Eigen::MatrixXd pts(6, 3);
    for (int i = 0; i < pts.size(); ++i) pts.data()[i] = g(rng);
    MaternParams p{Eigen::Vector3d(0.5, 1.0, 2.0), 1.3};
    const auto gram = matern_gram(pts, p);
    const auto cross = matern_cross(pts.row(2).transpose(), pts, p);
    for (int i = 0; i < 6; ++i) {
        CHECK(cross(i) == doctest::Approx(gram(2, i)));
        for (int j = 0; j < 6; ++j)
            CHECK(gram(i, j) == doctest::Approx(oracle::matern52(pts.row(i).transpose(), pts.row(j).transpose(),
                                                                 p.lengthscales, 1.3)));
    }
}

TEST_CASE("matern params validation")
{
    MaternParams p{Eigen::VectorXd::Constant(2, 1.0), 1.0};
    p.lengthscales(1) = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("string kernel trivial values")
{
    CHECK(sk({0, 1}, {}, 0.5, 0.8, 3) == 0.0);
    CHECK(sk({0}, {0}, 0.3, 1.0, 1) == doctest::Approx(1.0));
    CHECK(sk({0}, {0}, 0.3, 1.0, 4) == doctest::Approx(1.0));
}

TEST_CASE("string kernel hand values")
{
    // "ab" vs "ab": 2 * 0.8^2 + 0.8^4 * 0.5 * 0.5
    CHECK(sk({0, 1}, {0, 1}, 0.5, 0.8, 2) == doctest::Approx(1.3824).epsilon(1e-14));
    CHECK(sk({0, 1}, {1, 0}, 0.5, 0.8, 2) == doctest::Approx(1.28).epsilon(1e-14));
    const std::vector<int> ab{0, 1}, ba{1, 0};
    StringKernelParams p{0.5, 0.8, 2, false};
    CHECK(string_kernel_normalized(std::span<const int>(ab), std::span<const int>(ba), p) ==
          doctest::Approx(25.0 / 27.0).epsilon(1e-14));
}

TEST_CASE("string kernel matches brute-force enumeration")
{
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> len(0, 7), tok(0, 2);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<int> a(static_cast<std::size_t>(len(rng))), b(static_cast<std::size_t>(len(rng)));
        for (auto& t : a) t = tok(rng);
        for (auto& t : b) t = tok(rng);
        const double gap = 0.2 + 0.8 * (trial % 5) / 4.0;
        const double match = 0.3 + 0.7 * (trial % 3) / 2.0;
        const int n = 1 + trial % 4;
        const bool exact = trial % 7 == 0;
        CHECK(std::abs(sk(a, b, gap, match, n, exact) - oracle::string_kernel(a, b, gap, match, n, exact)) <= 1e-12);
    }
}

TEST_CASE("string kernel is symmetric and nonnegative")
{
    const std::vector<int> a{0, 1, 2, 0, 1}, b{2, 2, 0, 1};
    CHECK(sk(a, b, 0.6, 0.9, 3) == doctest::Approx(sk(b, a, 0.6, 0.9, 3)).epsilon(1e-15));
    CHECK(sk(a, b, 0.6, 0.9, 3) >= 0.0);
}

TEST_CASE("normalized string kernel")
{
    const std::vector<int> a{0, 1, 2}, b{3, 4};
    StringKernelParams p;
    CHECK(string_kernel_normalized(std::span<const int>(a), std::span<const int>(a), p) == doctest::Approx(1.0));
    CHECK(string_kernel_normalized(std::span<const int>(a), std::span<const int>(b), p) == 0.0);
    // A short string has no exact-length-3 subsequences, so it cannot be normalized.
    StringKernelParams exact{0.5, 0.8, 3, true};
    const std::vector<int> shorty{0, 1};
    CHECK_THROWS_AS(string_kernel_normalized(std::span<const int>(shorty), std::span<const int>(a), exact),
                    DegenerateSelfSimilarity);
}

TEST_CASE("string kernel params validation")
{
    StringKernelParams p;
    p.gap_decay = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.match_decay = 1.5;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.max_subseq_len = 0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("fingerprint dot product")
{
    Fingerprint zero(2048), f(2048), g(2048);
    CHECK(fingerprint_dot(zero, f) == 0.0);
    for (std::size_t bit : {3u, 17u, 64u, 65u, 900u, 1500u, 2047u}) f.set(bit);
    CHECK(fingerprint_dot(f, f) == 7.0);
    Fingerprint a(2048), b(2048);
    for (std::size_t bit : {1u, 5u, 9u}) a.set(bit);
    for (std::size_t bit : {5u, 9u, 100u}) b.set(bit);
    CHECK(fingerprint_dot(a, b) == 2.0);
    CHECK_THROWS_AS(fingerprint_dot(Fingerprint(64), Fingerprint(128)), WidthMismatch);
}

TEST_CASE("expression fingerprints")
{
    const Structure empty;
    CHECK(expr_fingerprint(std::span<const Token>(empty), 2048, 3).popcount() == 0);

    const Structure s = tokenize("sin( v )");
    const auto f = expr_fingerprint(std::span<const Token>(s), 2048, 3);
    CHECK(f == expr_fingerprint(std::span<const Token>(s), 2048, 3));

    std::set<std::size_t> bits;
    std::vector<std::uint64_t> codes;
    for (Token t : s) codes.push_back(static_cast<std::uint64_t>(t));
    for (std::size_t len = 1; len <= 3; ++len)
        for (std::size_t start = 0; start + len <= codes.size(); ++start)
            bits.insert(ngram_hash(std::span<const std::uint64_t>(codes).subspan(start, len)) % 2048);
    CHECK(f.popcount() == bits.size());
    for (std::size_t b : bits) CHECK(f.test(b));
    CHECK(bits.size() <= 6);
}

TEST_CASE("structured kernel wrapper")
{
    const Structure a = tokenize("v + 1"), b = tokenize("v * 1");
    StructuredKernel string_kernel_{StructuredKernelConfig{}};
    CHECK(string_kernel_(a, a) == doctest::Approx(1.0));
    CHECK(string_kernel_(a, b) == doctest::Approx(string_kernel_(b, a)));
    CHECK(string_kernel_(a, b) < 1.0);

    StructuredKernelConfig fp_cfg;
    fp_cfg.kind = StructuredKernelKind::Fingerprint;
    fp_cfg.normalize = false;
    StructuredKernel fp(fp_cfg);
    const auto fa = expr_fingerprint(std::span<const Token>(a), 2048, 3);
    const auto fb = expr_fingerprint(std::span<const Token>(b), 2048, 3);
    CHECK(fp(a, b) == fingerprint_dot(fa, fb));

    std::vector<StructuredKernel::Prepared> prepared{string_kernel_.prepare(a), string_kernel_.prepare(b)};
    const auto gram = string_kernel_.gram(prepared);
    CHECK(gram(0, 1) == doctest::Approx(string_kernel_(a, b)));
    CHECK(string_kernel_.cross(prepared[1], prepared)(0) == doctest::Approx(gram(1, 0)));

    CHECK(parse_structured_kernel_kind("fingerprint") == StructuredKernelKind::Fingerprint);
    CHECK_THROWS_AS(parse_structured_kernel_kind("rbf"), ConfigError);
}
