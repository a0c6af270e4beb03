#include "ladder/structured_kernel.hpp"

#include "ladder/errors.hpp"

namespace ladder {

std::string to_string(StructuredKernelKind kind)
{
    return kind == StructuredKernelKind::String ? "string" : "fingerprint";
}

StructuredKernelKind parse_structured_kernel_kind(const std::string& text)
{
    if (text == "string") return StructuredKernelKind::String;
    if (text == "fingerprint") return StructuredKernelKind::Fingerprint;
    throw ConfigError("structured_kernel: expected 'string' or 'fingerprint', got '" + text + "'");
}

StructuredKernel::StructuredKernel(StructuredKernelConfig cfg) : cfg_(cfg)
{
    cfg_.string.validate();
    if (cfg_.fingerprint_width < 64) throw ConfigError("fingerprint width must be >= 64");
    if (cfg_.fingerprint_max_ngram < 1) throw ConfigError("fingerprint n-gram length must be >= 1");
}

StructuredKernel::Prepared StructuredKernel::prepare(const Structure& x) const
{
    Prepared p{x, Fingerprint(cfg_.kind == StructuredKernelKind::Fingerprint ? cfg_.fingerprint_width : 64), 0.0};
    if (cfg_.kind == StructuredKernelKind::Fingerprint) {
        p.fingerprint = expr_fingerprint(std::span<const Token>(x), cfg_.fingerprint_width, cfg_.fingerprint_max_ngram);
        p.self = static_cast<double>(p.fingerprint.popcount());
    } else {
        p.self = string_kernel(std::span<const Token>(x), std::span<const Token>(x), cfg_.string);
    }
    return p;
}

double StructuredKernel::raw(const Prepared& a, const Prepared& b) const
{
    if (cfg_.kind == StructuredKernelKind::Fingerprint) return fingerprint_dot(a.fingerprint, b.fingerprint);
    return string_kernel(std::span<const Token>(a.tokens), std::span<const Token>(b.tokens), cfg_.string);
}

double StructuredKernel::value(const Prepared& a, const Prepared& b) const
{
    const double k = raw(a, b);
    return cfg_.normalize ? normalize_kernel(k, a.self, b.self) : k;
}

Eigen::MatrixXd StructuredKernel::gram(std::span<const Prepared> xs) const
{
    const auto m = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd g(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& a = xs[static_cast<std::size_t>(i)];
        g(i, i) = cfg_.normalize ? normalize_kernel(a.self, a.self, a.self) : a.self;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = value(a, xs[static_cast<std::size_t>(j)]);
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

Eigen::VectorXd StructuredKernel::cross(const Prepared& x, std::span<const Prepared> xs) const
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) out(static_cast<Eigen::Index>(i)) = value(x, xs[i]);
    return out;
}

}  // namespace ladder
