#include "na1lab/property_suite.hpp"

#include <chrono>
#include <cmath>

namespace na1lab {

namespace {

bool roundtrip_ok(const ScenarioTree& tree, std::size_t asset, double rel_tol, bool& rejected) {
    const auto s = asset_prices(tree, asset);
    std::vector<double> dR;
    try {
        dR = stoch_log(tree, s);
    } catch (const RevivalError&) {
        rejected = true;
        return false;
    }
    rejected = false;
    const auto back = stoch_exp(tree, dR, s[0]);
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (std::abs(back[n] - s[n]) > rel_tol * std::abs(s[n])) return false;
    }
    return true;
}

}  // namespace

PropertySuiteReport run_property_suite(const PropertySuiteOptions& o) {
    const auto start = std::chrono::steady_clock::now();
    PropertySuiteReport r;
    for (std::size_t i = 0; i < o.trees; ++i) {
        auto rng = derived_engine(o.seed, i);
        const auto tree = random_tree(rng, o.generator);
        ++r.trees;
        const std::string tag = "tree " + std::to_string(i) + ": ";

        ViabilityVerdict verdict;
        try {
            verdict = na1_check(tree, o.viability);
        } catch (const InconsistentRoutes& e) {
            ++r.route_disagreements;
            r.messages.push_back(tag + e.what());
            continue;
        }
        const bool holds = verdict.outcome == Outcome::Holds;
        (holds ? r.holds : r.fails)++;

        bool all_roundtrip = true;
        for (std::size_t a = 0; a < tree.assets(); ++a) {
            bool rejected = false;
            const bool ok = roundtrip_ok(tree, a, o.roundtrip_rel_tol, rejected);
            if (!ok && !rejected) {
                ++r.roundtrip_failures;
                r.messages.push_back(tag + "stochastic exponential round trip mismatch for asset " + std::to_string(a + 1));
            }
            all_roundtrip = all_roundtrip && ok;
        }
        if (all_roundtrip != holds) {
            ++r.roundtrip_failures;
            r.messages.push_back(tag + "round-trip success does not match the verdict");
        }

        if (!holds) {
            const auto replay = replay_witness(tree, *verdict.witness);
            if (!replay.ok() || replay.entries.size() != o.viability.capitals.size()) {
                ++r.witness_failures;
                r.messages.push_back(tag + "witness replay failed");
            }
            continue;
        }

        const auto p = numeraire_portfolio(tree, o.viability.solver);
        for (NodeIndex n = 0; n < tree.size(); ++n) {
            if (tree.node(n).is_leaf()) continue;
            if (!verify_numeraire(p.problems[n], p.rho.weights[n], o.numeraire_tol).ok) {
                ++r.numeraire_failures;
                r.messages.push_back(tag + "numeraire check failed at node '" + tree.node(n).id + "'");
            }
        }
        const auto& y = p.deflator.values;
        auto check = [&](const std::vector<double>& wealth, const std::string& what) {
            ++r.deflation_checks;
            if (!verify_deflation(tree, y, wealth, o.deflation_tol).ok()) {
                ++r.deflation_failures;
                r.messages.push_back(tag + "deflation fails for " + what);
            }
        };
        check(std::vector<double>(tree.size(), 1.0), "cash");
        for (std::size_t a = 0; a < tree.assets(); ++a) check(asset_prices(tree, a), "asset " + std::to_string(a + 1));
        auto srng = derived_engine(o.seed, i, 1);
        for (std::size_t s = 0; s < o.random_proportions; ++s)
            check(wealth_from_proportions(tree, random_proportions(tree, srng)).values, "random proportions");
        for (std::size_t s = 0; s < o.random_holdings; ++s) {
            const auto theta = random_admissible_strategy(tree, 1.0, srng);
            check(wealth_from_holdings(tree, 1.0, theta).wealth.values, "random holdings");
        }
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace na1lab
