#include "ladder/latent.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "ladder/errors.hpp"

namespace ladder {

std::size_t StructureHash::operator()(const Structure& s) const noexcept
{
    std::uint64_t h = 14695981039346656037ULL;
    for (Token t : s) {
        h ^= static_cast<std::uint64_t>(t);
        h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

LatentVector CodebookModel::featurize(const Structure& x) const
{
    Eigen::VectorXd counts = ngram_count_vector(std::span<const Token>(x), options_.feature_width, options_.max_ngram);
    const double norm = counts.norm();
    if (norm > 0.0) counts /= norm;
    LatentVector z = projection_ * counts;
    return ((z - center_).array() / scale_.array()).matrix();
}

LatentVector CodebookModel::encode(const Structure& x) const
{
    if (auto idx = index_of(x)) return embeddings_.row(static_cast<Eigen::Index>(*idx)).transpose();
    if (!has_featurizer()) throw Error("encode: '" + to_string(x) + "' is not in the loaded embedding table");
    return featurize(x);
}

std::size_t CodebookModel::nearest(const Eigen::Ref<const LatentVector>& z) const
{
    const Eigen::Index d = dim();
    if (z.size() != d)
        throw DimensionMismatch("decode: latent dimension " + std::to_string(z.size()) + " != " + std::to_string(d));
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    const Eigen::Index m = embeddings_.rows();
    for (Eigen::Index i = 0; i < m; ++i) {
        double dist = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) {
            const double diff = embeddings_(i, k) - z(k);
            dist += diff * diff;
            if (dist >= best_dist) break;
        }
        if (dist < best_dist) {
            best_dist = dist;
            best = static_cast<std::size_t>(i);
        }
    }
    return best;
}

const Structure& CodebookModel::decode(const Eigen::Ref<const LatentVector>& z) const
{
    return structures_[nearest(z)];
}

std::optional<std::size_t> CodebookModel::index_of(const Structure& x) const
{
    auto it = lookup_.find(x);
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

void CodebookModel::index_database()
{
    lookup_.clear();
    lookup_.reserve(structures_.size());
    for (std::size_t i = 0; i < structures_.size(); ++i) lookup_.emplace(structures_[i], i);
}

void CodebookModel::verify() const
{
    const Eigen::Index m = embeddings_.rows();
    if (!embeddings_.allFinite()) throw EmbeddingCollision("codebook: non-finite embedding");

    // Identical rows are adjacent after a lexicographic sort.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    auto row_less = [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index k = 0; k < embeddings_.cols(); ++k) {
            if (embeddings_(a, k) != embeddings_(b, k)) return embeddings_(a, k) < embeddings_(b, k);
        }
        return false;
    };
    std::sort(order.begin(), order.end(), row_less);
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (!row_less(order[i - 1], order[i]))
            throw EmbeddingCollision("codebook: '" + to_string(structures_[static_cast<std::size_t>(order[i - 1])]) +
                                     "' and '" + to_string(structures_[static_cast<std::size_t>(order[i])]) +
                                     "' share an embedding");
    }

    for (Eigen::Index i = 0; i < m; ++i) {
        if (nearest(embeddings_.row(i).transpose()) != static_cast<std::size_t>(i))
            throw EmbeddingCollision("codebook: round trip failed for '" +
                                     to_string(structures_[static_cast<std::size_t>(i)]) + "'");
    }
}

CodebookModel build_codebook(std::span<const Structure> structures, Eigen::Index dim, std::uint64_t seed,
                             const CodebookOptions& options)
{
    if (structures.empty()) throw ConfigError("build_codebook: empty structure list");
    if (dim < 1) throw ConfigError("build_codebook: latent dimension must be positive");
    if (options.feature_width < 1 || options.max_ngram < 1) throw ConfigError("build_codebook: bad feature options");

    CodebookModel model;
    model.options_ = options;
    {
        std::unordered_set<Structure, StructureHash> seen;
        for (const auto& s : structures) {
            if (seen.insert(s).second) model.structures_.push_back(s);
        }
    }
    const auto m = static_cast<Eigen::Index>(model.structures_.size());
    const auto width = static_cast<Eigen::Index>(options.feature_width);

    Eigen::MatrixXd features(m, width);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& s = model.structures_[static_cast<std::size_t>(i)];
        Eigen::VectorXd counts = ngram_count_vector(std::span<const Token>(s), options.feature_width, options.max_ngram);
        const double norm = counts.norm();
        if (norm > 0.0) counts /= norm;
        features.row(i) = counts.transpose();
    }

    for (int attempt = 0; attempt < 2; ++attempt) {
        const std::uint64_t effective_seed = attempt == 0 ? seed : mix_seed(seed, 0xC0DEB00CULL);
        std::mt19937_64 rng(effective_seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        model.projection_.resize(dim, width);
        for (Eigen::Index r = 0; r < dim; ++r)
            for (Eigen::Index c = 0; c < width; ++c) model.projection_(r, c) = normal(rng);

        Eigen::MatrixXd raw = features * model.projection_.transpose();
        model.center_ = raw.colwise().mean().transpose();
        model.scale_.resize(dim);
        for (Eigen::Index k = 0; k < dim; ++k) {
            const double var = (raw.col(k).array() - model.center_(k)).square().mean();
            model.scale_(k) = var > 0.0 ? std::sqrt(var) : 1.0;
        }
        model.embeddings_ = (raw.rowwise() - model.center_.transpose()).array().rowwise() /
                            model.scale_.transpose().array();
        model.seed_ = effective_seed;
        model.index_database();
        try {
            model.verify();
            return model;
        } catch (const EmbeddingCollision&) {
            if (attempt == 1) throw;
        }
    }
    return model;  // unreachable
}

CodebookModel codebook_from_embeddings(std::vector<Structure> structures, Eigen::MatrixXd embeddings)
{
    if (structures.empty()) throw ConfigError("codebook: empty structure list");
    if (static_cast<Eigen::Index>(structures.size()) != embeddings.rows())
        throw DimensionMismatch("codebook: structure count does not match embedding rows");
    CodebookModel model;
    model.structures_ = std::move(structures);
    model.embeddings_ = std::move(embeddings);
    model.index_database();
    if (model.lookup_.size() != model.structures_.size())
        throw EmbeddingCollision("codebook: duplicate structure in embedding table");
    model.verify();
    return model;
}

CodebookModel load_external_model(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open '" + path.string() + "'");

    std::vector<Structure> structures;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    std::size_t dim = 0;
    std::size_t dim_line = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError(line_no, "missing TAB separator");
        Structure s;
        try {
            s = tokenize(std::string_view(line).substr(0, tab));
            parse(s);
        } catch (const SyntaxError& e) {
            throw ParseError(line_no, std::string("bad structure: ") + e.what());
        }
        if (s.empty()) throw ParseError(line_no, "empty structure");

        std::vector<double> values;
        const std::string_view rest = std::string_view(line).substr(tab + 1);
        std::size_t pos = 0;
        while (pos <= rest.size()) {
            const auto comma = std::min(rest.find(',', pos), rest.size());
            std::string_view field = rest.substr(pos, comma - pos);
            while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
            while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
            double v = 0.0;
            const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (ec != std::errc() || end != field.data() + field.size() || field.empty())
                throw ParseError(line_no, "bad number '" + std::string(field) + "'");
            values.push_back(v);
            pos = comma + 1;
        }
        if (dim == 0) {
            dim = values.size();
            dim_line = line_no;
        } else if (values.size() != dim) {
            throw DimensionMismatch("line " + std::to_string(line_no) + ": " + std::to_string(values.size()) +
                                    " components, expected " + std::to_string(dim) + " (from line " +
                                    std::to_string(dim_line) + ")");
        }
        structures.push_back(std::move(s));
        rows.push_back(std::move(values));
    }
    if (structures.empty()) throw ParseError(line_no, "no records");

    Eigen::MatrixXd emb(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < dim; ++k) emb(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    return codebook_from_embeddings(std::move(structures), std::move(emb));
}

void save_embeddings(const CodebookModel& model, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    const auto db = model.database();
    const auto& emb = model.embeddings();
    char buf[64];
    for (std::size_t i = 0; i < db.size(); ++i) {
        out << to_string(db[i]) << '\t';
        for (Eigen::Index k = 0; k < emb.cols(); ++k) {
            if (k) out << ',';
            const auto res = std::to_chars(buf, buf + sizeof buf, emb(static_cast<Eigen::Index>(i), k));
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
}

}  // namespace ladder
