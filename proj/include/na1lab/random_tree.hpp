#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "na1lab/scenario_tree.hpp"
#include "na1lab/trading.hpp"

namespace na1lab {

/// Deterministic engine for item `index` of a seeded family.
std::mt19937_64 derived_engine(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0);

struct RandomTreeOptions {
    std::size_t max_assets = 3;
    std::size_t max_depth = 4;
    std::size_t max_children = 3;
    /// Positive price levels; zeros are drawn separately.
    std::vector<double> price_levels{0.5, 1.0, 1.5, 2.0, 3.0};
    /// Chance that a positive price drops to zero at a child.
    double default_prob = 0.2;
    /// Chance that a zero price stays at zero at a child.
    double absorb_prob = 0.6;
};

/// Random tree with times on the half-integer grid (0, 1/2, 1, ...), every
/// leaf at the same depth, and strictly positive root prices.
ScenarioTree random_tree(std::mt19937_64& rng, const RandomTreeOptions& options = {});

/// Random point of {pi >= 0, sum pi <= 1}; occasionally a vertex.
Vec random_simplex_point(std::mt19937_64& rng, std::size_t d);
ProportionProcess random_proportions(const ScenarioTree& tree, std::mt19937_64& rng);

/// No-short-sales holdings built forward from capital x; keeps random
/// residual cash and buys arbitrary amounts of zero-priced assets.
SimpleStrategy random_admissible_strategy(const ScenarioTree& tree, double x, std::mt19937_64& rng);

}  // namespace na1lab
