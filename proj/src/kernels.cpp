#include "ladder/kernels.hpp"

#include <cmath>
#include <string>

#include "ladder/errors.hpp"

namespace ladder {

void MaternParams::validate() const
{
    if (!(outputscale > 0.0)) throw ConfigError("matern: outputscale must be positive");
    if (lengthscales.size() == 0) throw ConfigError("matern: no lengthscales");
    if (!(lengthscales.array() > 0.0).all()) throw ConfigError("matern: lengthscales must be positive");
}

namespace {

double matern_from_r2(double r2, double outputscale)
{
    const double r = std::sqrt(r2);
    const double s5r = std::sqrt(5.0) * r;
    return outputscale * (1.0 + s5r + 5.0 * r2 / 3.0) * std::exp(-s5r);
}

void require_dim(Eigen::Index got, Eigen::Index want, const char* what)
{
    if (got != want)
        throw DimensionMismatch(std::string(what) + ": dimension " + std::to_string(got) + " != " +
                                std::to_string(want));
}

}  // namespace

double matern52(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                const MaternParams& p)
{
    require_dim(a.size(), p.lengthscales.size(), "matern52");
    require_dim(b.size(), p.lengthscales.size(), "matern52");
    const double r2 = ((a - b).array() / p.lengthscales.array()).square().sum();
    return matern_from_r2(r2, p.outputscale);
}

Eigen::MatrixXd matern_gram(const Eigen::MatrixXd& points, const MaternParams& p)
{
    require_dim(points.cols(), p.lengthscales.size(), "matern_gram");
    const Eigen::Index m = points.rows();
    const Eigen::MatrixXd scaled = points.array().rowwise() / p.lengthscales.transpose().array();
    Eigen::MatrixXd g(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        g(i, i) = p.outputscale;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = matern_from_r2((scaled.row(i) - scaled.row(j)).squaredNorm(), p.outputscale);
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

Eigen::VectorXd matern_cross(const Eigen::Ref<const Eigen::VectorXd>& z, const Eigen::MatrixXd& points,
                             const MaternParams& p)
{
    require_dim(points.cols(), p.lengthscales.size(), "matern_cross");
    require_dim(z.size(), p.lengthscales.size(), "matern_cross");
    Eigen::VectorXd out(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const double r2 = ((points.row(i).transpose() - z).array() / p.lengthscales.array()).square().sum();
        out(i) = matern_from_r2(r2, p.outputscale);
    }
    return out;
}

void StringKernelParams::validate() const
{
    if (!(gap_decay > 0.0 && gap_decay <= 1.0)) throw ConfigError("string kernel: gap decay must lie in (0, 1]");
    if (!(match_decay > 0.0 && match_decay <= 1.0))
        throw ConfigError("string kernel: match decay must lie in (0, 1]");
    if (max_subseq_len < 1) throw ConfigError("string kernel: max subsequence length must be >= 1");
}

// prefix(i, j) accumulates, over all common length-q occurrences whose last
// matched pair is (a, b) with a <= i, b <= j, the weight
// lambda_g^{(i - first_a) + (j - first_b)}. Extending an occurrence that ends
// at (a - 1, b - 1) or earlier by a match at (a, b) multiplies by lambda_g^2.
std::vector<double> subsequence_terms(const std::vector<std::uint8_t>& match, std::size_t rows,
                                      std::size_t cols, const StringKernelParams& p)
{
    p.validate();
    const auto n = static_cast<std::size_t>(p.max_subseq_len);
    std::vector<double> terms(n, 0.0);
    if (rows == 0 || cols == 0) return terms;

    const double g = p.gap_decay;
    const double g2 = g * g;
    const double m2 = p.match_decay * p.match_decay;

    // prev(i, j) with a one-cell zero border: index (i + 1) * (cols + 1) + (j + 1)
    const std::size_t stride = cols + 1;
    std::vector<double> prev((rows + 1) * stride, 0.0);
    std::vector<double> cur((rows + 1) * stride, 0.0);
    std::vector<double> rowsum(cols, 0.0);

    double match_weight = 1.0;
    for (std::size_t q = 1; q <= n; ++q) {
        match_weight *= m2;
        double total = 0.0;
        std::fill(cur.begin(), cur.end(), 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            // Row-wise accumulation first, then fold in the row above.
            double running = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
                double here = 0.0;
                if (match[i * cols + j]) {
                    here = q == 1 ? 1.0 : g2 * prev[i * stride + j];
                    total += here;
                }
                running = here + g * running;
                rowsum[j] = running;
            }
            for (std::size_t j = 0; j < cols; ++j)
                cur[(i + 1) * stride + (j + 1)] = rowsum[j] + g * cur[i * stride + (j + 1)];
        }
        terms[q - 1] = match_weight * total;
        std::swap(prev, cur);
    }
    return terms;
}

double normalize_kernel(double cross, double self_a, double self_b)
{
    if (!(self_a > 0.0) || !(self_b > 0.0))
        throw DegenerateSelfSimilarity("normalized kernel: self-similarity is zero");
    return cross / std::sqrt(self_a * self_b);
}

Fingerprint::Fingerprint(std::size_t width) : width_(width), words_((width + 63) / 64, 0)
{
    if (width == 0) throw ConfigError("fingerprint width must be positive");
}

void Fingerprint::set(std::size_t bit)
{
    if (bit >= width_) throw WidthMismatch("fingerprint bit " + std::to_string(bit) + " out of range");
    words_[bit / 64] |= std::uint64_t{1} << (bit % 64);
}

bool Fingerprint::test(std::size_t bit) const
{
    if (bit >= width_) return false;
    return (words_[bit / 64] >> (bit % 64)) & 1U;
}

std::size_t Fingerprint::popcount() const noexcept
{
    std::size_t total = 0;
    for (auto w : words_) total += static_cast<std::size_t>(std::popcount(w));
    return total;
}

double fingerprint_dot(const Fingerprint& a, const Fingerprint& b)
{
    if (a.width() != b.width())
        throw WidthMismatch("fingerprint widths differ: " + std::to_string(a.width()) + " vs " +
                            std::to_string(b.width()));
    std::size_t total = 0;
    const auto wa = a.words();
    const auto wb = b.words();
    for (std::size_t i = 0; i < wa.size(); ++i) total += static_cast<std::size_t>(std::popcount(wa[i] & wb[i]));
    return static_cast<double>(total);
}

std::uint64_t ngram_hash(std::span<const std::uint64_t> codes)
{
    constexpr std::uint64_t kOffset = 14695981039346656037ULL;
    constexpr std::uint64_t kPrime = 1099511628211ULL;
    std::uint64_t h = kOffset;
    auto mix_byte = [&](std::uint64_t byte) {
        h ^= byte & 0xFFU;
        h *= kPrime;
    };
    mix_byte(codes.size());
    for (auto c : codes) {
        for (int shift = 0; shift < 16; shift += 8) mix_byte(c >> shift);
    }
    // Final avalanche so that the low bits used by `mod width` are well mixed.
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return h;
}

}  // namespace ladder
