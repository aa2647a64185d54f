#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "na1lab/grid_time.hpp"
#include "na1lab/scenario_tree.hpp"
#include "na1lab/viability.hpp"

namespace na1lab {

/// Sampled paths on a common time grid, stored path-major.
struct PathBundle {
    std::string label;
    std::uint64_t seed = 0;
    std::vector<double> times;
    std::size_t paths = 0;
    std::vector<double> values;

    double at(std::size_t path, std::size_t j) const { return values[path * times.size() + j]; }
    std::span<const double> path(std::size_t p) const {
        return {values.data() + p * times.size(), times.size()};
    }
    /// Values of every path at time index j.
    std::vector<double> column(std::size_t j) const;
};

/// W on the given increasing times (times[0] must be 0), exact Gaussian increments.
PathBundle simulate_brownian(std::span<const double> times, std::size_t paths, std::uint64_t seed);

/// xi_t = exp(-t/4 + W_t) on `steps` equal steps of [0, horizon].
PathBundle simulate_xi(double horizon, std::size_t steps, std::size_t paths, std::uint64_t seed);
/// Same on arbitrary increasing times starting at 0.
PathBundle simulate_xi_at(std::span<const double> times, std::size_t paths, std::uint64_t seed);

/// S_t = xi_{t/(1-t)} on [0, 1 - 1/k] by index mapping u -> u / (1 + u),
/// plus S_1 = 0. The xi grid must reach u = k - 1 exactly.
PathBundle time_change(const PathBundle& xi, int k);

struct CounterexampleConfig {
    int k = 5;
    std::size_t paths = 10000;
    std::uint64_t seed = 20240601;
    double fraction = 0.25;
    /// Steps per unit of changed time u = t/(1-t) for the recursive wealth.
    /// 0 disables the inner grid (recursion runs on the trading grid).
    int inner_steps_per_unit = 4096;
    /// Rebalancing frequency of the simple strategy, per unit of u.
    int trading_steps_per_unit = 64;
    /// Rebalancing times are floored onto this dyadic grid (and onto T^k when k is finer).
    int trading_resolution = 40;
    /// Keep per-path S and hat-wealth values at the trading times.
    bool record_paths = true;
    /// Replace W by 0 (deterministic returns).
    bool zero_volatility = false;
    unsigned threads = 0;

    /// Throws std::invalid_argument on k < 2, paths < 1, fraction outside [0, 1].
    void validate() const;
    double cap_time() const { return 1.0 - 1.0 / k; }
    double cap_changed_time() const { return static_cast<double>(k - 1); }
};

/// Rebalancing times in t: dyadic times below 1 - 1/k (one per trading step
/// of u, floored onto the grid of resolution max(k, trading_resolution)),
/// followed by the liquidation time 1 - 1/k itself.
std::vector<double> trading_times(const CounterexampleConfig& config);

/// Joint per-path output of one counterexample run.
struct CounterexampleRun {
    CounterexampleConfig config;
    /// S at the trading times in t, then t = 1 with S = 0.
    PathBundle prices;
    /// Stated closed-form hat wealth at the trading times.
    PathBundle hat;
    std::vector<double> w_cap;           // W at u = k - 1
    std::vector<double> hat_stated;      // exp((k-1)/16 + W/4)
    std::vector<double> hat_ito;         // exp((k-1)/32 + W/4)
    std::vector<double> hat_recursive;   // fraction-rebalanced wealth on the inner grid
    std::vector<double> buy_and_hold;    // X^k_1 of the simple strategy
};

CounterexampleRun run_counterexample(const CounterexampleConfig& config);

struct SampleMoments {
    double mean = 0.0;
    double variance = 0.0;
    double se_mean = 0.0;
    double se_variance = 0.0;
};

/// Mean and unbiased variance with standard errors estimated from the sample
/// (the variance's from the fourth central moment).
SampleMoments sample_moments(std::span<const double> xs);

double quantile(std::vector<double> xs, double q);

struct HatWealthReport {
    double target;  // (k-1)/16, for both mean and variance of log hat
    SampleMoments log_hat;
    double mean_z = 0.0;
    double variance_z = 0.0;
    /// Relative gap of the recursive wealth to the stated closed form.
    double stated_gap_max = 0.0;
    double stated_gap_p99 = 0.0;
    /// Relative gap to exp((k-1)/32 + W/4), the closed form of the
    /// fraction-rebalanced dynamics.
    double ito_gap_max = 0.0;
    double ito_gap_p99 = 0.0;
    PathBundle hat;
    bool within(double z) const { return std::abs(mean_z) <= z && std::abs(variance_z) <= z; }
};

HatWealthReport hat_wealth(const CounterexampleRun& run);
HatWealthReport hat_wealth(const CounterexampleConfig& config);

struct BuyAndHoldReport {
    std::vector<double> terminal;  // X^k_1 per path
    double within_one_frequency = 0.0;
    double threshold = 0.0;  // 1 - 1/k
    bool passes = false;
    double median = 0.0;
    double median_target = 0.0;  // exp((k-1)/16)
};

/// Fraction-rebalanced simple strategy on the price bundle's grid, liquidated
/// at 1 - 1/k, compared with hat wealth at 1 - 1/k.
BuyAndHoldReport approximate_buy_and_hold(const CounterexampleConfig& config, const PathBundle& prices,
                                          std::span<const double> hat_at_cap);

struct TailEstimate {
    int k;
    double level;
    double estimate;
    double standard_error;
};

struct FailureDiagnostic {
    std::vector<TailEstimate> rows;
    /// Per level, the first k with estimate > 1/2 (0 if none).
    std::vector<std::pair<double, int>> first_k_above_half;
    /// Control: binomial (+1, -0.5) over control_periods steps; exact tail curve
    /// on the same levels plus its pathwise bound (where it is 0).
    TailCurve control;
    std::size_t control_periods = 0;
    double estimate(int k, double level) const;
    double standard_error(int k, double level) const;
    /// estimate(k_{j+1}) >= estimate(k_j) - z * se(difference) for consecutive ks.
    bool nondecreasing(double level, double z) const;
};

/// Estimates P[X^k_1 > level] for each k (same base config, k overridden).
FailureDiagnostic na1_failure_diagnostic(const CounterexampleConfig& base, const std::vector<int>& ks,
                                         const std::vector<double>& levels, std::size_t control_periods = 6);

struct RefinementRow {
    int k;
    GridTime time;
    double mean_log_deflator;
    double sd_log_deflator;
};

struct RefinementReport {
    std::vector<RefinementRow> rows;
    /// Per common time, max pairwise gap across k of the mean and sd.
    std::vector<double> mean_dispersion;
    std::vector<double> sd_dispersion;
    /// |stat(k_{j+1}) - stat(k_j)| at the last common time.
    std::vector<double> successive_mean_gaps;
    std::vector<double> successive_sd_gaps;
};

/// Numeraire deflators of a tree family on nested grids, summarized by the
/// distribution of log deflator at common times. Diagnostic only.
RefinementReport grid_refinement_study(const std::function<ScenarioTree(int)>& family, const std::vector<int>& ks,
                                       const std::vector<GridTime>& common_times);

/// i.i.d. binomial on [0, horizon] with 2^k steps per unit: returns
/// mu/2^k +- sigma/sqrt(2^k), equally likely.
ScenarioTree scaled_binomial_tree(int k, double mu, double sigma, int horizon = 1);

/// Largest |Y^k(n) - Y^fine(n)| over the original nodes after embedding the
/// tree on the finer grid.
double embedded_deflator_gap(const ScenarioTree& tree, int finer);

}  // namespace na1lab
