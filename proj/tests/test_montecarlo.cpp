#include <gtest/gtest.h>

#include <cmath>

#include "na1lab/montecarlo.hpp"
#include "na1lab/numeraire.hpp"
#include "support.hpp"

using namespace na1lab;
using na1lab::testing::load_fixture;

namespace {

struct Moments {
    double mean, var, se_mean, se_var;
};

// Oracle: plain two-pass moments, written independently of sample_moments.
Moments moments(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double s = 0.0;
    for (double x : xs) s += x;
    const double m = s / n;
    double s2 = 0.0, s4 = 0.0;
    for (double x : xs) {
        s2 += (x - m) * (x - m);
        s4 += std::pow(x - m, 4);
    }
    const double var = s2 / (n - 1);
    const double mu2 = s2 / n;
    return {m, var, std::sqrt(var / n), std::sqrt((s4 / n - mu2 * mu2) / n)};
}

CounterexampleConfig small(int k, std::size_t paths) {
    CounterexampleConfig c;
    c.k = k;
    c.paths = paths;
    c.seed = 777;
    c.inner_steps_per_unit = 256;
    c.threads = 1;
    return c;
}

}  // namespace

TEST(SimulateXi, StartsAtOne) {
    const auto b = simulate_xi(2.0, 16, 50, 1);
    for (std::size_t p = 0; p < b.paths; ++p) EXPECT_EQ(b.at(p, 0), 1.0);
    EXPECT_EQ(b.times.back(), 2.0);
}

TEST(SimulateXi, GaussianMomentsOfLog) {
    const double t = 3.0;
    const auto b = simulate_xi(t, 12, 20000, 2024);
    std::vector<double> logs(b.paths);
    for (std::size_t p = 0; p < b.paths; ++p) logs[p] = std::log(b.at(p, b.times.size() - 1));
    const auto m = moments(logs);
    EXPECT_LE(std::abs(m.mean - (-t / 4)) / m.se_mean, 4.0);
    EXPECT_LE(std::abs(m.var - t) / m.se_var, 4.0);

    const auto sm = sample_moments(logs);
    EXPECT_NEAR(sm.mean, m.mean, 1e-12);
    EXPECT_NEAR(sm.variance, m.var, 1e-12);
    EXPECT_NEAR(sm.se_mean, m.se_mean, 1e-12);
    EXPECT_NEAR(sm.se_variance, m.se_var, 1e-12);
}

TEST(SimulateBrownian, Reproducible) {
    const std::vector<double> times{0, 0.1, 0.5, 2};
    const auto a = simulate_brownian(times, 100, 9);
    const auto b = simulate_brownian(times, 100, 9);
    EXPECT_EQ(a.values, b.values);
    const auto c = simulate_brownian(times, 100, 10);
    EXPECT_NE(a.values, c.values);
    EXPECT_THROW(simulate_brownian(std::vector<double>{0.1, 0.2}, 1, 1), std::invalid_argument);
}

TEST(TimeChange, IndexMapping) {
    const int k = 5;
    const auto xi = simulate_xi(4.0, 8, 10, 3);  // u in steps of 1/2
    const auto s = time_change(xi, k);
    ASSERT_EQ(s.times.size(), xi.times.size() + 1);
    for (std::size_t p = 0; p < s.paths; ++p) {
        // t = 1/2 <-> u = 1 (index 2)
        EXPECT_EQ(s.times[2], 0.5);
        EXPECT_EQ(s.at(p, 2), xi.at(p, 2));
        EXPECT_DOUBLE_EQ(s.times[xi.times.size() - 1], 1.0 - 1.0 / k);
        EXPECT_EQ(s.at(p, xi.times.size() - 1), xi.at(p, xi.times.size() - 1));
        EXPECT_EQ(s.at(p, s.times.size() - 1), 0.0);
    }
    EXPECT_EQ(s.times.back(), 1.0);
}

TEST(TimeChange, RejectsShortHorizon) {
    const auto xi = simulate_xi(3.0, 6, 2, 3);
    EXPECT_THROW(time_change(xi, 5), std::invalid_argument);
    EXPECT_NO_THROW(time_change(xi, 4));
}

TEST(TimeChange, LeftLimitShrinksWithK) {
    double prev = INFINITY;
    for (int k : {2, 8, 32, 128}) {
        const auto xi = simulate_xi(k - 1.0, static_cast<std::size_t>(k - 1), 4000, 5);
        const auto s = time_change(xi, k);
        const double med = quantile(s.column(s.times.size() - 2), 0.5);
        EXPECT_LT(med, prev);
        prev = med;
    }
    EXPECT_LT(prev, 1e-6);
}

TEST(TradingTimes, DyadicAndCapped) {
    const auto c = small(5, 1);
    const auto t = trading_times(c);
    ASSERT_GE(t.size(), 3u);
    EXPECT_EQ(t.front(), 0.0);
    EXPECT_EQ(t.back(), 1.0 - 1.0 / 5);
    for (std::size_t j = 0; j + 1 < t.size(); ++j) {
        const double scaled = std::ldexp(t[j], 40);
        EXPECT_EQ(scaled, std::floor(scaled)) << "not dyadic: " << t[j];
        EXPECT_LT(t[j], t[j + 1]);
    }
}

TEST(Counterexample, ReproducibleAcrossThreads) {
    auto c = small(3, 64);
    const auto a = run_counterexample(c);
    c.threads = 4;
    const auto b = run_counterexample(c);
    EXPECT_EQ(a.prices.values, b.prices.values);
    EXPECT_EQ(a.hat.values, b.hat.values);
    EXPECT_EQ(a.buy_and_hold, b.buy_and_hold);
    EXPECT_EQ(a.hat_recursive, b.hat_recursive);
}

TEST(Counterexample, PricesNonnegativeAbsorbedAtOne) {
    const auto run = run_counterexample(small(4, 200));
    const auto& s = run.prices;
    for (std::size_t p = 0; p < s.paths; ++p) {
        const auto path = s.path(p);
        for (double v : path) EXPECT_GE(v, 0.0);
        EXPECT_EQ(path.back(), 0.0);
        EXPECT_TRUE(cannot_revive(path));
        // strictly positive before the default point, so the round trip is exact
        const std::vector<double> before(path.begin(), path.end() - 1);
        for (double v : before) EXPECT_GT(v, 0.0);
        const auto back = stoch_exp(stoch_log(before), before[0]);
        for (std::size_t j = 0; j < before.size(); ++j) EXPECT_NEAR(back[j], before[j], 1e-12 * before[j]);
    }
}

TEST(Counterexample, ZeroVolatilityIsExact) {
    auto c = small(5, 3);
    c.zero_volatility = true;
    c.inner_steps_per_unit = 0;  // recursion on the trading grid itself
    const auto run = run_counterexample(c);
    // Independent deterministic recursion: xi_u = exp(-u/4).
    const auto times = trading_times(c);
    double x = 1.0;
    double prev = 1.0;
    for (std::size_t j = 1; j < times.size(); ++j) {
        const double u = j + 1 == times.size() ? c.k - 1.0 : times[j] / (1.0 - times[j]);
        const double xi = std::exp(-u / 4.0);
        x *= 1.0 + c.fraction * (xi / prev - 1.0);
        prev = xi;
    }
    for (std::size_t p = 0; p < c.paths; ++p) {
        EXPECT_EQ(run.w_cap[p], 0.0);
        EXPECT_EQ(run.buy_and_hold[p], run.hat_recursive[p]);
        EXPECT_NEAR(run.buy_and_hold[p], x, 1e-14);
    }
}

TEST(Counterexample, BuyAndHoldMatchesPriceBundle) {
    const auto c = small(4, 300);
    const auto run = run_counterexample(c);
    std::vector<double> hat_cap(c.paths);
    for (std::size_t p = 0; p < c.paths; ++p) hat_cap[p] = run.hat.at(p, run.hat.times.size() - 1);
    const auto r = approximate_buy_and_hold(c, run.prices, hat_cap);
    EXPECT_EQ(r.terminal, run.buy_and_hold);
    std::size_t close = 0;
    for (std::size_t p = 0; p < c.paths; ++p) close += std::abs(run.buy_and_hold[p] - hat_cap[p]) < 1.0;
    EXPECT_DOUBLE_EQ(r.within_one_frequency, static_cast<double>(close) / c.paths);
    EXPECT_EQ(r.threshold, 0.75);
    for (std::size_t p = 0; p < c.paths; ++p)
        EXPECT_DOUBLE_EQ(hat_cap[p], std::exp(3.0 / 16 + run.w_cap[p] / 4));
}

TEST(HatWealth, MomentsAndClosedForms) {
    auto c = small(5, 4000);
    const auto run = run_counterexample(c);
    const auto h = hat_wealth(run);
    EXPECT_EQ(h.target, 0.25);
    std::vector<double> logs;
    for (double w : run.w_cap) logs.push_back(0.25 + w / 4);
    const auto m = moments(logs);
    EXPECT_NEAR(h.log_hat.mean, m.mean, 1e-12);
    EXPECT_LE(std::abs(m.mean - 0.25) / m.se_mean, 4.0);
    EXPECT_LE(std::abs(m.var - 0.25) / m.se_var, 4.0);
    for (std::size_t p = 0; p < c.paths; ++p) {
        EXPECT_DOUBLE_EQ(run.hat_stated[p], std::exp(0.25 + run.w_cap[p] / 4));
        EXPECT_DOUBLE_EQ(run.hat_ito[p], std::exp(0.125 + run.w_cap[p] / 4));
    }
}

TEST(HatWealth, RecursiveGapShrinksWithInnerStep) {
    auto c = small(5, 1000);
    c.record_paths = false;
    c.inner_steps_per_unit = 1024;
    const auto coarse = hat_wealth(c);
    c.inner_steps_per_unit = 10000;
    const auto fine = hat_wealth(c);
    EXPECT_LT(fine.ito_gap_p99, coarse.ito_gap_p99);
    EXPECT_LT(fine.ito_gap_p99, 0.01);
}

TEST(BuyAndHold, MediansGrowWithK) {
    double prev = 0.0;
    for (int k : {2, 4, 8, 16}) {
        auto c = small(k, 2000);
        c.inner_steps_per_unit = 0;
        c.record_paths = false;
        const auto run = run_counterexample(c);
        const double med = quantile(run.buy_and_hold, 0.5);
        EXPECT_GT(med, prev) << k;
        prev = med;
    }
}

TEST(Quantile, Interpolates) {
    EXPECT_EQ(quantile({3, 1, 2}, 0.5), 2.0);
    EXPECT_EQ(quantile({1, 2}, 0.5), 1.5);
    EXPECT_EQ(quantile({1, 2, 3, 4, 5}, 0.0), 1.0);
    EXPECT_EQ(quantile({1, 2, 3, 4, 5}, 1.0), 5.0);
    EXPECT_THROW(quantile({}, 0.5), std::invalid_argument);
}

TEST(FailureDiagnostic, ShapeAndControl) {
    auto base = small(2, 2000);
    base.inner_steps_per_unit = 0;
    const auto d = na1_failure_diagnostic(base, {2, 4}, {1.0, 2.0});
    ASSERT_EQ(d.rows.size(), 4u);
    EXPECT_GE(d.estimate(2, 1.0), 0.5);
    EXPECT_GT(d.standard_error(4, 2.0), 0.0);
    EXPECT_THROW(d.estimate(3, 1.0), std::out_of_range);
    // control: 6 periods of gross 2 or 0.5, tail exactly 0 at the pathwise bound 2^6
    EXPECT_EQ(d.control.pathwise_bound, 64.0);
    EXPECT_EQ(d.control.probabilities.back(), 0.0);
    // the control tail is that of the pathwise envelope 2^(ups): P[2^U > 1] and P[2^U > 2]
    EXPECT_NEAR(d.control.probabilities[0], 63 / 64.0, 1e-15);
    EXPECT_NEAR(d.control.probabilities[1], 57 / 64.0, 1e-15);
}

TEST(Refinement, CashOnlyHasNoDispersion) {
    const auto cash = load_fixture("cash_only.json");
    const auto r = grid_refinement_study([&](int k) { return embed_on_grid(cash, k); }, {1, 2, 3},
                                         {GridTime(1, 1), GridTime(1, 0)});
    for (double d : r.mean_dispersion) EXPECT_EQ(d, 0.0);
    for (double d : r.sd_dispersion) EXPECT_EQ(d, 0.0);
    for (const auto& row : r.rows) EXPECT_EQ(row.mean_log_deflator, 0.0);
}

TEST(Refinement, EmbeddedTreeHasIdenticalDeflator) {
    const auto tree = binomial_tree(2, 1.0, 1.5, 0.8, 0.4, GridTime(1, 1));
    EXPECT_EQ(embedded_deflator_gap(tree, 4), 0.0);
    EXPECT_EQ(embedded_deflator_gap(load_fixture("binomial.json"), 3), 0.0);
}

TEST(Refinement, ScaledBinomialReport) {
    const auto r = grid_refinement_study([](int k) { return scaled_binomial_tree(k, 0.05, 0.2); }, {1, 2, 3, 4},
                                         {GridTime(1, 0)});
    ASSERT_EQ(r.rows.size(), 4u);
    ASSERT_EQ(r.successive_mean_gaps.size(), 3u);
    for (const auto& row : r.rows) {
        EXPECT_TRUE(std::isfinite(row.mean_log_deflator));
        EXPECT_LT(row.mean_log_deflator, 0.0);  // positive drift: the deflator falls on average
    }
    // diagnostic only; record the successive gaps
    for (double g : r.successive_mean_gaps) RecordProperty("mean_gap", std::to_string(g));
}
