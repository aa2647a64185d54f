#include <gtest/gtest.h>

#include <cmath>

#include "na1lab/random_tree.hpp"
#include "na1lab/trading.hpp"
#include "na1lab/viability.hpp"
#include "support.hpp"

using namespace na1lab;
using na1lab::testing::chain;
using na1lab::testing::load_fixture;

namespace {

SimpleStrategy root_holding(const ScenarioTree& tree, double units) {
    auto th = SimpleStrategy::zero(tree);
    th.holdings[0][0] = units;
    return th;
}

std::vector<double> at_ids(const ScenarioTree& tree, const std::vector<double>& v, std::initializer_list<const char*> ids) {
    std::vector<double> out;
    for (const char* id : ids) out.push_back(v[tree.index_of(id)]);
    return out;
}

}  // namespace

TEST(WealthFromHoldings, CashOnly) {
    const auto tree = load_fixture("cash_only.json");
    const auto r = wealth_from_holdings(tree, 3.0, SimpleStrategy::zero(tree));
    for (double x : r.wealth.values) EXPECT_EQ(x, 3.0);
    EXPECT_TRUE(r.negative_nodes.empty());
}

TEST(WealthFromHoldings, Binomial) {
    const auto tree = load_fixture("binomial.json");
    const auto r = wealth_from_holdings(tree, 1.0, root_holding(tree, 0.6));
    EXPECT_DOUBLE_EQ(r.wealth.values[tree.index_of("u")], 1.6);
    EXPECT_DOUBLE_EQ(r.wealth.values[tree.index_of("d")], 0.7);
}

TEST(WealthFromHoldings, TwoPointJump) {
    // a = 1, b = 2: hold one unit throughout
    auto spec = load_fixture("two_point.json").spec();
    spec.nodes[0].prices = {1.0};
    spec.nodes[1].prices = {2.0};
    const auto tree = ScenarioTree::build(spec);
    const auto r = wealth_from_holdings(tree, 1.0, root_holding(tree, 1.0));
    EXPECT_EQ(r.wealth.values[0], 1.0);
    EXPECT_EQ(r.wealth.values[1], 2.0);
}

TEST(WealthFromHoldings, FlagsNegativeWealth) {
    const auto tree = load_fixture("binomial.json");
    const auto r = wealth_from_holdings(tree, 1.0, root_holding(tree, 3.0));  // 1 + 3 (0.5 - 1) < 0
    ASSERT_EQ(r.negative_nodes.size(), 1u);
    EXPECT_EQ(r.negative_nodes[0], tree.index_of("d"));
}

TEST(NoShortSales, Examples) {
    const auto tree = load_fixture("binomial.json");
    EXPECT_TRUE(check_no_short_sales(tree, SimpleStrategy::zero(tree), 1.0).admissible());

    const auto over = check_no_short_sales(tree, root_holding(tree, 1.5), 1.0);
    ASSERT_FALSE(over.admissible());
    bool budget = false;
    for (const auto& v : over.violations) budget = budget || v.kind == AdmissibilityViolation::Kind::Budget;
    EXPECT_TRUE(budget);

    EXPECT_FALSE(check_no_short_sales(tree, root_holding(tree, -0.1), 1.0).admissible());
}

TEST(NoShortSales, ZeroPriceNodeHasNoBudget) {
    const auto tree = load_fixture("revival.json");
    auto th = SimpleStrategy::zero(tree);
    th.holdings[tree.index_of("zero")][0] = 1e6;
    EXPECT_TRUE(check_no_short_sales(tree, th, 0.25).admissible());
}

TEST(ReturnsProcess, Masking) {
    const auto down = chain({4, 2});
    EXPECT_EQ(returns_process(down).returns[1][0], -0.5);
    const auto revive = chain({0, 5});
    EXPECT_EQ(returns_process(revive).returns[1][0], 0.0);
    const auto bust = chain({1, 0});
    EXPECT_EQ(returns_process(bust).returns[1][0], -1.0);
}

TEST(WealthFromProportions, Examples) {
    const auto tree = load_fixture("binomial.json");
    const auto zero = wealth_from_proportions(tree, ProportionProcess::zero(tree));
    for (double x : zero.values) EXPECT_EQ(x, 1.0);

    auto pi = ProportionProcess::zero(tree);
    pi.weights[0][0] = 0.5;
    const auto x = wealth_from_proportions(tree, pi);
    EXPECT_EQ(at_ids(tree, x.values, {"u", "d"}), (std::vector<double>{1.5, 0.75}));
}

TEST(WealthFromProportions, FullFirstAssetTracksPrice) {
    const auto tree = chain({2, 3, 1.5, 0, 0});
    auto pi = ProportionProcess::zero(tree);
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (!tree.node(n).is_leaf()) pi.weights[n][0] = 1.0;
    }
    const auto x = wealth_from_proportions(tree, pi);
    for (NodeIndex n = 0; n < tree.size(); ++n) EXPECT_DOUBLE_EQ(x.values[n], tree.price(n, 0) / 2.0);
}

TEST(WealthFromProportions, RejectsRevivalAndBadSimplex) {
    const auto tree = load_fixture("revival.json");
    EXPECT_THROW(wealth_from_proportions(tree, ProportionProcess::zero(tree)), RevivalError);

    const auto bin = load_fixture("binomial.json");
    auto pi = ProportionProcess::zero(bin);
    pi.weights[0][0] = 1.5;
    EXPECT_THROW(wealth_from_proportions(bin, pi), std::invalid_argument);
}

TEST(Conversion, BinomialHalf) {
    const auto tree = load_fixture("binomial.json");
    auto pi = ProportionProcess::zero(tree);
    pi.weights[0][0] = 0.5;
    const auto th = proportions_to_holdings(tree, pi);
    EXPECT_EQ(th.holdings[0][0], 0.5);
    EXPECT_EQ(holdings_to_proportions(tree, th, 1.0).weights[0][0], 0.5);
}

TEST(Conversion, ParametrizationEquivalence) {
    const WealthTolerance tol;
    int checked = 0;
    for (std::uint64_t i = 0; i < 300; ++i) {
        auto rng = derived_engine(17, i);
        const auto tree = random_tree(rng);
        if (!find_revivals(tree).empty()) continue;
        ++checked;
        const auto pi = random_proportions(tree, rng);
        const auto mult = wealth_from_proportions(tree, pi);
        const auto add = wealth_from_holdings(tree, 1.0, proportions_to_holdings(tree, pi));
        EXPECT_TRUE(check_no_short_sales(tree, proportions_to_holdings(tree, pi), 1.0).admissible());
        for (NodeIndex n = 0; n < tree.size(); ++n) EXPECT_TRUE(tol.close(mult.values[n], add.wealth.values[n]));

        // residual cash survives the round trip
        const auto theta = random_admissible_strategy(tree, 1.0, rng);
        const auto back = holdings_to_proportions(tree, theta, 1.0);
        const auto direct = wealth_from_holdings(tree, 1.0, theta).wealth.values;
        const auto via = wealth_from_proportions(tree, back).values;
        for (NodeIndex n = 0; n < tree.size(); ++n) EXPECT_TRUE(tol.close(direct[n], via[n])) << n;
    }
    EXPECT_GT(checked, 100);
}

TEST(WealthProperties, ScalingAndConvexity) {
    const WealthTolerance tol;
    for (std::uint64_t i = 0; i < 100; ++i) {
        auto rng = derived_engine(23, i);
        const auto tree = random_tree(rng);
        const auto t1 = random_admissible_strategy(tree, 1.0, rng);
        const auto t2 = random_admissible_strategy(tree, 2.0, rng);

        const double x = 3.5;
        auto scaled = t1;
        for (auto& h : scaled.holdings)
            for (auto& v : h) v *= x;
        const auto a = wealth_from_holdings(tree, x, scaled).wealth.values;
        const auto b = wealth_from_holdings(tree, 1.0, t1).wealth.values;
        for (NodeIndex n = 0; n < tree.size(); ++n) EXPECT_TRUE(tol.close(a[n], x * b[n]));

        const double al = 0.3;
        auto mix = t1;
        for (NodeIndex n = 0; n < tree.size(); ++n)
            for (std::size_t j = 0; j < mix.holdings[n].size(); ++j)
                mix.holdings[n][j] = al * t1.holdings[n][j] + (1 - al) * t2.holdings[n][j];
        const double xm = al * 1.0 + (1 - al) * 2.0;
        EXPECT_TRUE(check_no_short_sales(tree, mix, xm).admissible());
        const auto wm = wealth_from_holdings(tree, xm, mix).wealth.values;
        const auto w2 = wealth_from_holdings(tree, 2.0, t2).wealth.values;
        for (NodeIndex n = 0; n < tree.size(); ++n) EXPECT_TRUE(tol.close(wm[n], al * b[n] + (1 - al) * w2[n]));
    }
}

TEST(WealthProperties, EachAssetIsAWealthProcess) {
    for (std::uint64_t i = 0; i < 100; ++i) {
        auto rng = derived_engine(29, i);
        const auto tree = random_tree(rng);
        for (std::size_t a = 0; a < tree.assets(); ++a) {
            auto th = SimpleStrategy::zero(tree);
            for (NodeIndex n = 0; n < tree.size(); ++n) {
                if (!tree.node(n).is_leaf()) th.holdings[n][a] = 1.0;
            }
            const double s0 = tree.price(0, a);
            EXPECT_TRUE(check_no_short_sales(tree, th, s0).admissible());
            const auto w = wealth_from_holdings(tree, s0, th).wealth.values;
            for (NodeIndex n = 0; n < tree.size(); ++n) EXPECT_DOUBLE_EQ(w[n], tree.price(n, a));
        }
    }
}

TEST(Bankruptcy, PathExamples) {
    const std::vector<double> a{1, 0.5, 0, 0};
    EXPECT_EQ(bankruptcy_index(a), 2u);
    EXPECT_TRUE(cannot_revive(a));
    const std::vector<double> b{1, 0, 3};
    EXPECT_EQ(bankruptcy_index(b), 1u);
    EXPECT_FALSE(cannot_revive(b));
    const std::vector<double> c{1, 1, 1};
    EXPECT_FALSE(bankruptcy_index(c).has_value());
    EXPECT_TRUE(cannot_revive(c));
}

TEST(Bankruptcy, OnTrees) {
    const auto tree = load_fixture("revival.json");
    const auto s = asset_prices(tree, 0);
    EXPECT_FALSE(cannot_revive(tree, s));
    const auto times = bankruptcy_times(tree, s);
    ASSERT_EQ(times.size(), 2u);
    int hit = 0;
    for (const auto& t : times) hit += t.has_value();
    EXPECT_EQ(hit, 1);
}

TEST(StochasticExponential, PathExamples) {
    const std::vector<double> s{4, 2, 3};
    const auto r = stoch_log(s);
    EXPECT_EQ(r, (std::vector<double>{-0.5, 0.5}));
    EXPECT_EQ(stoch_exp(r, 4.0), s);

    const std::vector<double> bust{1, 0, 0};
    const auto rb = stoch_log(bust);
    EXPECT_EQ(rb, (std::vector<double>{-1.0, 0.0}));
    EXPECT_EQ(stoch_exp(rb, 1.0), bust);

    EXPECT_THROW(stoch_log(std::vector<double>{1, 0, 2}), RevivalError);
    EXPECT_THROW(stoch_exp(std::vector<double>{-1.5}, 1.0), std::domain_error);
}

TEST(StochasticExponential, TreeRoundTrip) {
    for (std::uint64_t i = 0; i < 200; ++i) {
        auto rng = derived_engine(31, i);
        const auto tree = random_tree(rng);
        for (std::size_t a = 0; a < tree.assets(); ++a) {
            const auto s = asset_prices(tree, a);
            if (!cannot_revive(tree, s)) {
                EXPECT_THROW(stoch_log(tree, s), RevivalError);
                continue;
            }
            const auto back = stoch_exp(tree, stoch_log(tree, s), s[0]);
            for (NodeIndex n = 0; n < tree.size(); ++n) EXPECT_NEAR(back[n], s[n], 1e-12 * s[n]);
        }
    }
}
