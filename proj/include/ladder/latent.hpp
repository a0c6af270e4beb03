#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "ladder/expr.hpp"
#include "ladder/kernels.hpp"

namespace ladder {

struct StructureHash {
    std::size_t operator()(const Structure& s) const noexcept;
};

/// Encoder/decoder pair over a fixed database of unsupervised structures.
class LatentModel {
public:
    virtual ~LatentModel() = default;

    virtual Eigen::Index dim() const = 0;
    virtual LatentVector encode(const Structure& x) const = 0;
    /// Total: every finite vector of dimension dim() maps to a structure.
    virtual const Structure& decode(const Eigen::Ref<const LatentVector>& z) const = 0;
    virtual std::span<const Structure> database() const = 0;
};

struct CodebookOptions {
    std::size_t feature_width = 1024;
    int max_ngram = 4;
};

/// Nearest-neighbour codebook. Decoding returns the database entry whose
/// embedding is closest in Euclidean distance (lowest index on ties), so
/// decoded structures are always database members.
class CodebookModel final : public LatentModel {
public:
    Eigen::Index dim() const override { return embeddings_.cols(); }
    LatentVector encode(const Structure& x) const override;
    const Structure& decode(const Eigen::Ref<const LatentVector>& z) const override;
    std::span<const Structure> database() const override { return structures_; }

    /// Database index of the nearest embedding.
    std::size_t nearest(const Eigen::Ref<const LatentVector>& z) const;
    std::optional<std::size_t> index_of(const Structure& x) const;

    /// One embedding per row, aligned with database().
    const Eigen::MatrixXd& embeddings() const noexcept { return embeddings_; }
    /// Whether unknown structures can be featurized (false for loaded files).
    bool has_featurizer() const noexcept { return projection_.size() > 0; }
    std::uint64_t seed() const noexcept { return seed_; }

    friend CodebookModel build_codebook(std::span<const Structure>, Eigen::Index, std::uint64_t,
                                        const CodebookOptions&);
    friend CodebookModel load_external_model(const std::filesystem::path&);
    friend CodebookModel codebook_from_embeddings(std::vector<Structure>, Eigen::MatrixXd);

private:
    LatentVector featurize(const Structure& x) const;
    void index_database();
    void verify() const;

    std::vector<Structure> structures_;
    Eigen::MatrixXd embeddings_;
    std::unordered_map<Structure, std::size_t, StructureHash> lookup_;

    Eigen::MatrixXd projection_;  // d x W; empty for loaded models
    Eigen::VectorXd center_;
    Eigen::VectorXd scale_;
    CodebookOptions options_;
    std::uint64_t seed_ = 0;
};

/// Embeds each distinct structure as projection * (L2-normalized hashed
/// n-gram counts), standardized per dimension over the database. Duplicates
/// are dropped (first occurrence kept). Throws EmbeddingCollision when two
/// structures share an embedding even after one re-seed.
CodebookModel build_codebook(std::span<const Structure> structures, Eigen::Index dim, std::uint64_t seed,
                             const CodebookOptions& options = {});

/// Codebook over given (structure, embedding) pairs. Throws
/// EmbeddingCollision on duplicate embeddings.
CodebookModel codebook_from_embeddings(std::vector<Structure> structures, Eigen::MatrixXd embeddings);

/// Reads `structure TAB v1,v2,...,vd` records; '#' lines and blank lines are
/// skipped. Throws ParseError / DimensionMismatch (with the line number) /
/// EmbeddingCollision.
CodebookModel load_external_model(const std::filesystem::path& path);

/// Writes the database in the format read by load_external_model, with
/// shortest round-trip decimal representations.
void save_embeddings(const CodebookModel& model, const std::filesystem::path& path);

/// Mixes a seed with a stream identifier (splitmix64).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ladder
