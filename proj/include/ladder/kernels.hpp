#pragma once

#include <bit>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ladder {

using LatentVector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Matern-5/2 with per-dimension lengthscales
// ---------------------------------------------------------------------------

struct MaternParams {
    Eigen::VectorXd lengthscales;  ///< one per latent dimension, all > 0
    double outputscale = 1.0;

    static MaternParams unit(Eigen::Index dim) { return {Eigen::VectorXd::Ones(dim), 1.0}; }
    void validate() const;
};

/// outputscale * (1 + sqrt(5) r + 5 r^2 / 3) * exp(-sqrt(5) r), with r the
/// lengthscale-weighted Euclidean distance.
double matern52(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                const MaternParams& p);

/// Gram matrix over the rows of `points`.
Eigen::MatrixXd matern_gram(const Eigen::MatrixXd& points, const MaternParams& p);

/// Kernel values between `z` and every row of `points`.
Eigen::VectorXd matern_cross(const Eigen::Ref<const Eigen::VectorXd>& z, const Eigen::MatrixXd& points,
                             const MaternParams& p);

// ---------------------------------------------------------------------------
// Subsequence string kernel
// ---------------------------------------------------------------------------

struct StringKernelParams {
    double gap_decay = 0.75;   ///< lambda_g in (0, 1]
    double match_decay = 1.0;  ///< lambda_m in (0, 1]
    int max_subseq_len = 3;    ///< n >= 1
    bool exact_length = false; ///< only length-n subsequences instead of 1..n

    void validate() const;
};

/// Per-length contributions: entry q-1 holds
///   lambda_m^{2q} * sum over common length-q subsequences u of
///   sum over occurrence pairs lambda_g^{span(s1) + span(s2)},
/// where span = last index - first index. `match(i, j)` tells whether
/// a[i] == b[j]; the matrix is row-major with `rows` rows.
std::vector<double> subsequence_terms(const std::vector<std::uint8_t>& match, std::size_t rows,
                                      std::size_t cols, const StringKernelParams& p);

namespace detail {

template <typename T>
std::vector<std::uint8_t> match_matrix(std::span<const T> a, std::span<const T> b)
{
    std::vector<std::uint8_t> m(a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) m[i * b.size() + j] = a[i] == b[j] ? 1 : 0;
    return m;
}

}  // namespace detail

/// Sum of `subsequence_terms` over lengths 1..n, or only length n when
/// `exact_length` is set. Empty inputs give 0.
template <std::equality_comparable T>
double string_kernel(std::span<const T> a, std::span<const T> b, const StringKernelParams& p)
{
    if (a.empty() || b.empty()) return 0.0;
    const auto terms = subsequence_terms(detail::match_matrix(a, b), a.size(), b.size(), p);
    if (p.exact_length) return terms.back();
    double total = 0.0;
    for (double t : terms) total += t;
    return total;
}

/// Cosine-normalized string kernel, in [0, 1]. Throws
/// DegenerateSelfSimilarity when either self-kernel vanishes.
double normalize_kernel(double cross, double self_a, double self_b);

template <std::equality_comparable T>
double string_kernel_normalized(std::span<const T> a, std::span<const T> b, const StringKernelParams& p)
{
    return normalize_kernel(string_kernel(a, b, p), string_kernel(a, a, p), string_kernel(b, b, p));
}

// ---------------------------------------------------------------------------
// Binary fingerprints
// ---------------------------------------------------------------------------

class Fingerprint {
public:
    explicit Fingerprint(std::size_t width = 2048);

    std::size_t width() const noexcept { return width_; }
    void set(std::size_t bit);
    bool test(std::size_t bit) const;
    std::size_t popcount() const noexcept;
    std::span<const std::uint64_t> words() const noexcept { return words_; }

    bool operator==(const Fingerprint&) const = default;

private:
    std::size_t width_;
    std::vector<std::uint64_t> words_;
};

/// popcount(a AND b). Throws WidthMismatch on unequal widths.
double fingerprint_dot(const Fingerprint& a, const Fingerprint& b);

/// FNV-1a over the symbol codes of an n-gram, mixed with its length.
std::uint64_t ngram_hash(std::span<const std::uint64_t> codes);

/// Calls `visit(hash)` once per contiguous n-gram of length 1..max_ngram.
template <typename T, typename Visit>
void for_each_ngram_hash(std::span<const T> tokens, int max_ngram, Visit&& visit)
{
    std::vector<std::uint64_t> codes(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) codes[i] = static_cast<std::uint64_t>(tokens[i]);
    const std::span<const std::uint64_t> all(codes);
    for (int len = 1; len <= max_ngram; ++len) {
        const auto n = static_cast<std::size_t>(len);
        for (std::size_t start = 0; start + n <= codes.size(); ++start) visit(ngram_hash(all.subspan(start, n)));
    }
}

/// Hashed n-gram fingerprint: bit hash(ngram) mod width is set for every
/// contiguous n-gram of length 1..max_ngram. Requires width >= 64.
template <typename T>
Fingerprint expr_fingerprint(std::span<const T> tokens, std::size_t width, int max_ngram)
{
    Fingerprint fp(width);
    for_each_ngram_hash(tokens, max_ngram, [&](std::uint64_t h) { fp.set(h % width); });
    return fp;
}

/// Same hashing as expr_fingerprint, but accumulating occurrence counts.
template <typename T>
Eigen::VectorXd ngram_count_vector(std::span<const T> tokens, std::size_t width, int max_ngram)
{
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width));
    for_each_ngram_hash(tokens, max_ngram,
                        [&](std::uint64_t h) { counts(static_cast<Eigen::Index>(h % width)) += 1.0; });
    return counts;
}

}  // namespace ladder
