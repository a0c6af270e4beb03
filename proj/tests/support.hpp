#pragma once

// Shared fixtures for the unit tests.

#include <random>
#include <vector>

#include "ladder/coupled_kernel.hpp"
#include "ladder/expr.hpp"
#include "ladder/latent.hpp"

namespace fixture {

inline ladder::Structure random_structure(std::mt19937_64& rng, int depth = 4)
{
    return ladder::serialize(ladder::generate_expression(rng, depth));
}

/// m triples with Gaussian latent points, random expressions and the
/// expression objective as targets.
inline std::vector<ladder::EvaluatedTriple> random_triples(int m, int dim, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    static const ladder::ExprObjective objective;
    std::vector<ladder::EvaluatedTriple> out;
    for (int i = 0; i < m; ++i) {
        ladder::EvaluatedTriple t;
        t.z = ladder::LatentVector(dim);
        for (int k = 0; k < dim; ++k) t.z(k) = g(rng);
        t.x = random_structure(rng);
        t.y = objective(t.x);
        out.push_back(std::move(t));
    }
    return out;
}

/// A small codebook shared across tests (built once).
inline const ladder::CodebookModel& small_codebook()
{
    static const ladder::CodebookModel model =
        ladder::build_codebook(ladder::generate_database(300, 5, 99), 4, 3);
    return model;
}

}  // namespace fixture
