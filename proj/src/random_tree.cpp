#include "na1lab/random_tree.hpp"

#include <algorithm>
#include <string>

namespace na1lab {

std::mt19937_64 derived_engine(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

namespace {

template <class T>
T uniform_int(std::mt19937_64& rng, T lo, T hi) {
    return std::uniform_int_distribution<T>(lo, hi)(rng);
}

bool coin(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

}  // namespace

ScenarioTree random_tree(std::mt19937_64& rng, const RandomTreeOptions& o) {
    const std::size_t d = uniform_int<std::size_t>(rng, 1, o.max_assets);
    const std::size_t depth = uniform_int<std::size_t>(rng, 1, o.max_depth);
    const auto level = [&] { return o.price_levels[uniform_int<std::size_t>(rng, 0, o.price_levels.size() - 1)]; };

    TreeSpec spec;
    spec.d = d;
    // Half-unit steps, expressed at the coarsest resolution whose grid reaches the horizon.
    const int res = std::max<int>(1, static_cast<int>((depth + 1) / 2));
    const auto at = [res](std::size_t j) { return GridTime(static_cast<std::int64_t>(j) << (res - 1), res); };
    spec.horizon = at(depth);
    spec.root = "n0";
    struct Pending {
        std::string id;
        Vec prices;
    };
    Vec root_prices(d);
    for (auto& s : root_prices) s = level();
    std::vector<Pending> current{{"n0", root_prices}};
    std::size_t counter = 1;
    for (std::size_t j = 0; j <= depth; ++j) {
        std::vector<Pending> next;
        for (auto& p : current) {
            NodeSpec n{p.id, at(j), p.prices, {}};
            if (j < depth) {
                const std::size_t kids = uniform_int<std::size_t>(rng, 1, o.max_children);
                std::vector<double> w(kids);
                double total = 0.0;
                for (auto& x : w) total += (x = static_cast<double>(uniform_int(rng, 1, 4)));
                double assigned = 0.0;
                for (std::size_t c = 0; c < kids; ++c) {
                    const double prob = c + 1 == kids ? 1.0 - assigned : w[c] / total;
                    assigned += prob;
                    Vec prices(d);
                    for (std::size_t i = 0; i < d; ++i) {
                        if (p.prices[i] == 0.0)
                            prices[i] = coin(rng, o.absorb_prob) ? 0.0 : level();
                        else
                            prices[i] = coin(rng, o.default_prob) ? 0.0 : level();
                    }
                    const std::string id = "n" + std::to_string(counter++);
                    n.children.push_back({id, prob});
                    next.push_back({id, std::move(prices)});
                }
            }
            spec.nodes.push_back(std::move(n));
        }
        current = std::move(next);
    }
    return ScenarioTree::build(spec);
}

Vec random_simplex_point(std::mt19937_64& rng, std::size_t d) {
    Vec pi(d, 0.0);
    const int kind = uniform_int(rng, 0, 9);
    if (kind == 0) return pi;
    if (kind == 1) {
        pi[uniform_int<std::size_t>(rng, 0, d - 1)] = 1.0;
        return pi;
    }
    std::exponential_distribution<double> e(1.0);
    Vec w(d + 1);
    double total = 0.0;
    for (auto& x : w) total += (x = e(rng));
    for (std::size_t i = 0; i < d; ++i) pi[i] = w[i] / total;
    return pi;
}

ProportionProcess random_proportions(const ScenarioTree& tree, std::mt19937_64& rng) {
    auto pi = ProportionProcess::zero(tree);
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (!tree.node(n).is_leaf()) pi.weights[n] = random_simplex_point(rng, tree.assets());
    }
    return pi;
}

SimpleStrategy random_admissible_strategy(const ScenarioTree& tree, double x, std::mt19937_64& rng) {
    auto theta = SimpleStrategy::zero(tree);
    std::vector<double> X(tree.size(), 0.0);
    X[0] = x;
    std::uniform_real_distribution<double> units(0.0, 5.0);
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto& node = tree.node(n);
        if (node.is_leaf()) continue;
        const Vec pi = random_simplex_point(rng, tree.assets());
        for (std::size_t i = 0; i < tree.assets(); ++i) {
            const double s = node.prices[i];
            theta.holdings[n][i] = s > 0.0 ? pi[i] * X[n] / s : units(rng);
        }
        for (const auto& c : node.children) {
            double gain = 0.0;
            for (std::size_t i = 0; i < tree.assets(); ++i)
                gain += theta.holdings[n][i] * (tree.price(c.node, i) - node.prices[i]);
            X[c.node] = X[n] + gain;
        }
    }
    return theta;
}

}  // namespace na1lab
