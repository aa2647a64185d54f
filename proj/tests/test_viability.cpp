#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "na1lab/random_tree.hpp"
#include "na1lab/viability.hpp"
#include "support.hpp"

using namespace na1lab;
using na1lab::testing::chain;
using na1lab::testing::load_fixture;

namespace {

// Oracle: walk every root-to-leaf path; a revival is a zero price followed
// later on the same path by a positive one.
std::set<std::pair<std::size_t, NodeIndex>> revivals_by_paths(const ScenarioTree& tree) {
    std::set<std::pair<std::size_t, NodeIndex>> out;
    for (NodeIndex leaf : tree.leaves()) {
        const auto path = tree.path_to(leaf);
        for (std::size_t a = 0; a < tree.assets(); ++a) {
            for (std::size_t i = 0; i < path.size(); ++i) {
                if (tree.price(path[i], a) != 0.0) continue;
                for (std::size_t j = i + 1; j < path.size(); ++j) {
                    if (tree.price(path[j], a) > 0.0) {
                        out.insert({a, path[i]});
                        break;
                    }
                }
            }
        }
    }
    return out;
}

// Oracle: the LP's constraints, checked directly on a candidate deflator.
bool satisfies_deflator_constraints(const ScenarioTree& tree, const std::vector<double>& y, double tol) {
    if (std::abs(y[0] - 1.0) > tol) return false;
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (!(y[n] > 0.0)) return false;
        const auto& node = tree.node(n);
        if (node.is_leaf()) continue;
        double cash = 0.0;
        std::vector<double> asset(tree.assets(), 0.0);
        for (const auto& c : node.children) {
            cash += c.prob * y[c.node];
            for (std::size_t a = 0; a < tree.assets(); ++a) asset[a] += c.prob * y[c.node] * tree.price(c.node, a);
        }
        if (cash > y[n] + tol) return false;
        for (std::size_t a = 0; a < tree.assets(); ++a) {
            if (asset[a] > y[n] * tree.price(n, a) + tol) return false;
        }
    }
    return true;
}

}  // namespace

TEST(DetectRevival, Examples) {
    EXPECT_TRUE(detect_revival(load_fixture("binomial.json")).empty());

    const auto revive = chain({1, 0, 1});
    const auto r = detect_revival(revive);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].asset, 0u);
    EXPECT_EQ(revive.node(r[0].node).id, "c1");

    EXPECT_TRUE(detect_revival(chain({1, 0, 0})).empty());
}

TEST(DetectRevival, MatchesPathOracle) {
    for (std::uint64_t i = 0; i < 500; ++i) {
        auto rng = derived_engine(51, i);
        const auto tree = random_tree(rng);
        std::set<std::pair<std::size_t, NodeIndex>> got;
        for (const auto& r : detect_revival(tree)) got.insert({r.asset, r.node});
        EXPECT_EQ(got, revivals_by_paths(tree)) << "tree " << i;
    }
}

TEST(DeflatorLp, Fixtures) {
    const auto bin = load_fixture("binomial.json");
    const auto r = deflator_lp(bin);
    EXPECT_TRUE(r.feasible);
    ASSERT_TRUE(r.deflator.has_value());
    EXPECT_TRUE(satisfies_deflator_constraints(bin, r.deflator->values, 1e-9));
    // the numeraire deflator is one feasible point
    EXPECT_TRUE(satisfies_deflator_constraints(bin, {1.0, 2.0 / 3.0, 4.0 / 3.0}, 1e-12));

    const auto rev = deflator_lp(load_fixture("revival.json"));
    EXPECT_FALSE(rev.feasible);
    EXPECT_LT(rev.min_value, 1e-9);

    const auto cash = load_fixture("cash_only.json");
    const auto c = deflator_lp(cash);
    ASSERT_TRUE(c.feasible);
    for (double y : c.deflator->values) EXPECT_NEAR(y, 1.0, 1e-12);
}

TEST(DeflatorLp, RevivalInfeasibleForAnyEpsilon) {
    const auto tree = load_fixture("revival.json");
    for (double eps : {1e-3, 1e-6, 1e-9, 1e-11}) {
        DeflatorLpOptions o;
        o.epsilon = eps;
        EXPECT_FALSE(deflator_lp(tree, o).feasible) << eps;
        EXPECT_EQ(deflator_lp(tree, o).min_value, 0.0);
    }
    // once the slack reaches the floor, a zero minimum is accepted
    DeflatorLpOptions loose;
    loose.epsilon = 1e-12;
    loose.tolerance = 1e-12;
    EXPECT_TRUE(deflator_lp(tree, loose).feasible);
}

TEST(DeflatorLp, FeasiblePointsSatisfyConstraints) {
    for (std::uint64_t i = 0; i < 300; ++i) {
        auto rng = derived_engine(53, i);
        const auto tree = random_tree(rng);
        const auto r = deflator_lp(tree);
        EXPECT_EQ(r.feasible, detect_revival(tree).empty());
        if (r.feasible) EXPECT_TRUE(satisfies_deflator_constraints(tree, r.deflator->values, 1e-9));
    }
}

TEST(Na1Check, BinomialHolds) {
    const auto tree = load_fixture("binomial.json");
    const auto v = na1_check(tree);
    EXPECT_EQ(v.outcome, Outcome::Holds);
    ASSERT_TRUE(v.deflator.has_value());
    EXPECT_NEAR(v.deflator->values[tree.index_of("u")], 2.0 / 3.0, 1e-9);
    EXPECT_NEAR(v.deflator->values[tree.index_of("d")], 4.0 / 3.0, 1e-9);
    EXPECT_TRUE(v.diagnostics.certificate_verified);
}

TEST(Na1Check, RevivalFails) {
    const auto tree = load_fixture("revival.json");
    const auto v = na1_check(tree);
    EXPECT_EQ(v.outcome, Outcome::Fails);
    ASSERT_TRUE(v.witness.has_value());
    ASSERT_TRUE(v.replay.has_value());
    EXPECT_TRUE(v.replay->ok());
    EXPECT_EQ(v.replay->entries.size(), 11u);
}

TEST(Na1Check, TwoPointHoldsWithBoundedGains) {
    const auto tree = load_fixture("two_point.json");
    EXPECT_EQ(na1_check(tree).outcome, Outcome::Holds);
    // |b - a| / a with a = 2, b = 1
    EXPECT_DOUBLE_EQ(max_one_step_gain(tree, 1.0), 0.5);
    // no admissible holding from x = 1 gains more than that in absolute value
    for (double units : {0.0, 0.1, 0.25, 0.5}) {
        auto th = SimpleStrategy::zero(tree);
        th.holdings[0][0] = units;
        ASSERT_TRUE(check_no_short_sales(tree, th, 1.0).admissible());
        EXPECT_LE(std::abs(wealth_from_holdings(tree, 1.0, th).wealth.values[1] - 1.0), 0.5);
    }
}

TEST(Na1Check, FaultInjectionIsDetected) {
    ViabilityOptions o;
    o.lp.tolerance = 1e-2;
    EXPECT_THROW(na1_check(load_fixture("revival.json"), o), InconsistentRoutes);
}

TEST(BuildWitness, RevivalFixture) {
    const auto tree = load_fixture("revival.json");
    const auto revival = detect_revival(tree).front();
    const auto w = build_witness(tree, revival, {1.0, 0.5, 0.25});
    ASSERT_EQ(w.claim.size(), 2u);
    for (std::size_t l = 0; l < tree.leaves().size(); ++l) {
        const auto& id = tree.node(tree.leaves()[l]).id;
        EXPECT_EQ(w.claim[l], id == "revived" ? 1.0 : 0.0);
    }
    for (const auto& s : w.strategies) {
        const auto x = wealth_from_holdings(tree, s.capital, s.strategy).wealth.values;
        EXPECT_EQ(x[tree.index_of("revived")], s.capital + 1.0);
        EXPECT_EQ(s.strategy.holdings[tree.index_of("zero")][0], 1.0);
        EXPECT_EQ(s.strategy.holdings[0][0], 0.0);
    }
    EXPECT_TRUE(replay_witness(tree, w).ok());
}

TEST(BuildWitness, TinyCapitalStillDominates) {
    const auto tree = load_fixture("revival.json");
    const auto w = build_witness(tree, detect_revival(tree).front(), {1e-6});
    const auto r = replay_witness(tree, w);
    ASSERT_TRUE(r.ok());
    EXPECT_GE(r.entries[0].margin, 0.0);
}

TEST(BuildWitness, RejectsNonRevival) {
    const auto tree = load_fixture("binomial.json");
    EXPECT_THROW(build_witness(tree, Revival{0, 0}, {1.0}), NotARevival);
}

TEST(BuildWitness, ReplayDetectsTampering) {
    const auto tree = load_fixture("revival.json");
    auto w = build_witness(tree, detect_revival(tree).front(), {1.0});
    w.claim[0] = w.claim[1] = 5.0;
    EXPECT_FALSE(replay_witness(tree, w).ok());
}

TEST(LogUtility, Examples) {
    const auto bin = load_fixture("binomial.json");
    EXPECT_NEAR(log_utility_value(bin, 1.0).value, 0.5 * std::log(1.5) + 0.5 * std::log(0.75), 1e-12);
    EXPECT_NEAR(log_utility_value(bin, 2.0).value, std::log(2.0) + 0.5 * std::log(1.5) + 0.5 * std::log(0.75), 1e-12);

    const auto cash = load_fixture("cash_only.json");
    EXPECT_NEAR(log_utility_value(cash, 3.0).value, std::log(3.0), 1e-15);

    const auto rev = log_utility_value(load_fixture("revival.json"), 1.0);
    EXPECT_TRUE(std::isinf(rev.value));
    EXPECT_GT(rev.value, 0.0);
    ASSERT_GE(rev.scaling_witness.size(), 2u);
    for (std::size_t i = 1; i < rev.scaling_witness.size(); ++i)
        EXPECT_GT(rev.scaling_witness[i].expected_log, rev.scaling_witness[i - 1].expected_log);
    // p log N lower bound on the revived branch
    const auto& last = rev.scaling_witness.back();
    EXPECT_GE(last.expected_log, 0.5 * std::log(last.units));
}

TEST(LogUtility, TwoPeriodMatchesIndependentSum) {
    const auto tree = binomial_tree(2, 1.0, 2.0, 0.5, 0.5, GridTime(1, 1));
    const double step = 0.5 * std::log(1.5) + 0.5 * std::log(0.75);
    EXPECT_NEAR(log_utility_value(tree, 1.0).value, 2 * step, 1e-12);
}

TEST(TailCurve, Examples) {
    const std::vector<double> levels{0.5, 0.999, 1.0, 1.5, 1.999, 2.0, 3.0};
    const auto cash = tail_curve(load_fixture("cash_only.json"), levels);
    for (std::size_t i = 0; i < levels.size(); ++i) EXPECT_EQ(cash.probabilities[i], levels[i] < 1.0 ? 1.0 : 0.0);

    const auto bin = tail_curve(load_fixture("binomial.json"), levels);
    EXPECT_EQ(bin.pathwise_bound, 2.0);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] >= 2.0) EXPECT_EQ(bin.probabilities[i], 0.0);
        if (levels[i] < 1.0) EXPECT_EQ(bin.probabilities[i], 1.0);
    }
    EXPECT_TRUE(std::is_sorted(bin.probabilities.rbegin(), bin.probabilities.rend()));

    const auto rev = tail_curve(load_fixture("revival.json"), levels);
    EXPECT_TRUE(rev.unbounded);
}

TEST(TailCurve, NonincreasingOnRandomTrees) {
    std::vector<double> levels;
    for (double l = 0.25; l < 40; l *= 1.5) levels.push_back(l);
    for (std::uint64_t i = 0; i < 200; ++i) {
        auto rng = derived_engine(57, i);
        const auto tree = random_tree(rng);
        if (!detect_revival(tree).empty()) continue;
        auto with_bound = levels;
        const auto c0 = tail_curve(tree, levels);
        with_bound.push_back(c0.pathwise_bound);
        const auto c = tail_curve(tree, with_bound);
        EXPECT_TRUE(std::is_sorted(c.probabilities.rbegin(), c.probabilities.rend()));
        EXPECT_EQ(c.probabilities.back(), 0.0);
        // the envelope dominates any particular strategy's tail
        const auto x = wealth_from_proportions(tree, random_proportions(tree, rng));
        for (std::size_t j = 0; j < levels.size(); ++j) {
            double p = 0.0;
            for (NodeIndex l : tree.leaves()) p += x.values[l] > levels[j] ? tree.node(l).path_prob : 0.0;
            EXPECT_LE(p, c.probabilities[j] + 1e-12);
        }
    }
}

TEST(Na1Check, ExponentialCornerAgreesWithVerdict) {
    int checked = 0;
    for (std::uint64_t i = 0; i < 500; ++i) {
        auto rng = derived_engine(59, i);
        const auto tree = random_tree(rng);
        const bool holds = na1_check(tree).outcome == Outcome::Holds;
        bool round_trip = true;
        for (std::size_t a = 0; a < tree.assets(); ++a) {
            try {
                const auto s = asset_prices(tree, a);
                const auto back = stoch_exp(tree, stoch_log(tree, s), s[0]);
                for (NodeIndex n = 0; n < tree.size(); ++n) round_trip = round_trip && std::abs(back[n] - s[n]) <= 1e-12 * s[n];
            } catch (const RevivalError&) {
                round_trip = false;
            }
        }
        EXPECT_EQ(holds, round_trip) << "tree " << i;
        ++checked;
    }
    EXPECT_EQ(checked, 500);
}
