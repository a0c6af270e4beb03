#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ladder/expr.hpp"
#include "ladder/kernels.hpp"

namespace ladder {

enum class StructuredKernelKind { String, Fingerprint };

std::string to_string(StructuredKernelKind kind);
StructuredKernelKind parse_structured_kernel_kind(const std::string& text);

struct StructuredKernelConfig {
    StructuredKernelKind kind = StructuredKernelKind::String;
    StringKernelParams string;
    bool normalize = true;  ///< cosine normalization k(a,b) / sqrt(k(a,a) k(b,b))
    std::size_t fingerprint_width = 2048;
    int fingerprint_max_ngram = 3;
};

/// Kernel over decoded structures: either the subsequence string kernel on
/// token sequences or the dot product of hashed n-gram fingerprints.
class StructuredKernel {
public:
    /// A structure with the per-item quantities the kernel reuses.
    struct Prepared {
        Structure tokens;
        Fingerprint fingerprint;
        double self = 0.0;  ///< raw self-similarity
    };

    explicit StructuredKernel(StructuredKernelConfig cfg = {});

    const StructuredKernelConfig& config() const noexcept { return cfg_; }

    Prepared prepare(const Structure& x) const;
    double raw(const Prepared& a, const Prepared& b) const;
    double value(const Prepared& a, const Prepared& b) const;
    double operator()(const Structure& a, const Structure& b) const { return value(prepare(a), prepare(b)); }

    Eigen::MatrixXd gram(std::span<const Prepared> xs) const;
    Eigen::VectorXd cross(const Prepared& x, std::span<const Prepared> xs) const;

private:
    StructuredKernelConfig cfg_;
};

}  // namespace ladder
