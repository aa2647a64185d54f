#include "na1lab/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

#include "na1lab/numeraire.hpp"
#include "na1lab/random_tree.hpp"

namespace na1lab {

std::vector<double> PathBundle::column(std::size_t j) const {
    std::vector<double> out(paths);
    for (std::size_t p = 0; p < paths; ++p) out[p] = at(p, j);
    return out;
}

namespace {

void check_times(std::span<const double> times) {
    if (times.empty() || times[0] != 0.0) throw std::invalid_argument("time grid must start at 0");
    for (std::size_t j = 1; j < times.size(); ++j) {
        if (!(times[j] > times[j - 1])) throw std::invalid_argument("time grid must be strictly increasing");
    }
}

// Runs body(path) for every path, split over threads. Each path owns its
// engine, so results do not depend on the split.
template <class F>
void for_each_path(std::size_t paths, unsigned threads, F&& body) {
    unsigned n = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    n = static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(paths, 1)));
    if (n <= 1) {
        for (std::size_t p = 0; p < paths; ++p) body(p);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (paths + n - 1) / n;
    for (unsigned t = 0; t < n; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(paths, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t p = lo; p < hi; ++p) body(p);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

PathBundle simulate_brownian(std::span<const double> times, std::size_t paths, std::uint64_t seed) {
    check_times(times);
    PathBundle b{"W", seed, {times.begin(), times.end()}, paths, std::vector<double>(paths * times.size(), 0.0)};
    for (std::size_t p = 0; p < paths; ++p) {
        auto rng = derived_engine(seed, p);
        std::normal_distribution<double> z(0.0, 1.0);
        double w = 0.0;
        for (std::size_t j = 1; j < times.size(); ++j) {
            w += std::sqrt(times[j] - times[j - 1]) * z(rng);
            b.values[p * times.size() + j] = w;
        }
    }
    return b;
}

PathBundle simulate_xi_at(std::span<const double> times, std::size_t paths, std::uint64_t seed) {
    auto b = simulate_brownian(times, paths, seed);
    b.label = "xi";
    for (std::size_t p = 0; p < paths; ++p) {
        for (std::size_t j = 0; j < b.times.size(); ++j) {
            double& v = b.values[p * b.times.size() + j];
            v = std::exp(-b.times[j] / 4.0 + v);
        }
    }
    return b;
}

PathBundle simulate_xi(double horizon, std::size_t steps, std::size_t paths, std::uint64_t seed) {
    if (steps < 1) throw std::invalid_argument("simulate_xi: steps must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("simulate_xi: horizon must be positive");
    std::vector<double> times(steps + 1);
    for (std::size_t j = 0; j <= steps; ++j) times[j] = horizon * static_cast<double>(j) / static_cast<double>(steps);
    times.back() = horizon;
    return simulate_xi_at(times, paths, seed);
}

PathBundle time_change(const PathBundle& xi, int k) {
    if (k < 2) throw std::invalid_argument("time_change: k must be >= 2");
    const double cap = static_cast<double>(k - 1);
    if (xi.times.empty() || xi.times.back() < cap - 1e-9)
        throw std::invalid_argument("time_change: xi horizon " + std::to_string(xi.times.empty() ? 0.0 : xi.times.back()) +
                                    " is shorter than k - 1 = " + std::to_string(k - 1));
    std::size_t last = 0;
    while (last + 1 < xi.times.size() && xi.times[last + 1] <= cap + 1e-9) ++last;
    if (std::abs(xi.times[last] - cap) > 1e-9)
        throw std::invalid_argument("time_change: xi grid does not contain u = k - 1");

    PathBundle s;
    s.label = "S";
    s.seed = xi.seed;
    s.paths = xi.paths;
    for (std::size_t j = 0; j <= last; ++j) {
        const double u = j == last ? cap : xi.times[j];
        s.times.push_back(u / (1.0 + u));
    }
    s.times.push_back(1.0);
    const std::size_t width = s.times.size();
    s.values.assign(s.paths * width, 0.0);
    for (std::size_t p = 0; p < s.paths; ++p) {
        for (std::size_t j = 0; j <= last; ++j) s.values[p * width + j] = xi.at(p, j);
    }
    return s;
}

void CounterexampleConfig::validate() const {
    if (k < 2) throw std::invalid_argument("counterexample: k must be >= 2");
    if (paths < 1) throw std::invalid_argument("counterexample: need at least one path");
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("counterexample: fraction must be in [0, 1]");
    if (inner_steps_per_unit < 0 || trading_steps_per_unit < 1)
        throw std::invalid_argument("counterexample: step counts must be positive");
    if (trading_resolution < 1 || trading_resolution > 50)
        throw std::invalid_argument("counterexample: trading resolution must be in [1, 50]");
}

std::vector<double> trading_times(const CounterexampleConfig& c) {
    c.validate();
    const int res = std::max(c.k, c.trading_resolution);
    const double cap_u = c.cap_changed_time();
    std::vector<double> out;
    for (std::int64_t j = 0;; ++j) {
        const double u = static_cast<double>(j) / c.trading_steps_per_unit;
        if (u >= cap_u) break;
        const double t = floor_to_grid(u / (1.0 + u), res).to_double();
        if (out.empty() || t > out.back()) out.push_back(t);
    }
    out.push_back(c.cap_time());
    return out;
}

namespace {

double changed_time(double t, const CounterexampleConfig& c, bool is_cap) {
    return is_cap ? c.cap_changed_time() : t / (1.0 - t);
}

}  // namespace

CounterexampleRun run_counterexample(const CounterexampleConfig& c) {
    c.validate();
    const auto trade_t = trading_times(c);
    std::vector<double> trade_u(trade_t.size());
    for (std::size_t j = 0; j < trade_t.size(); ++j) trade_u[j] = changed_time(trade_t[j], c, j + 1 == trade_t.size());

    // Merged grid in u: inner grid plus trading times.
    std::vector<double> grid = trade_u;
    if (c.inner_steps_per_unit > 0) {
        const auto steps = static_cast<std::int64_t>(c.k - 1) * c.inner_steps_per_unit;
        for (std::int64_t i = 0; i < steps; ++i) grid.push_back(static_cast<double>(i) / c.inner_steps_per_unit);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    std::vector<std::size_t> trade_at(grid.size(), SIZE_MAX);
    for (std::size_t j = 0; j < trade_u.size(); ++j) {
        const auto it = std::lower_bound(grid.begin(), grid.end(), trade_u[j]);
        trade_at[static_cast<std::size_t>(it - grid.begin())] = j;
    }
    std::vector<double> root_dt(grid.size(), 0.0);
    for (std::size_t i = 1; i < grid.size(); ++i) root_dt[i] = std::sqrt(grid[i] - grid[i - 1]);

    CounterexampleRun run;
    run.config = c;
    const std::size_t n = c.paths;
    const std::size_t width = trade_t.size();
    if (c.record_paths) {
        run.prices = {"S", c.seed, trade_t, n, std::vector<double>(n * (width + 1), 0.0)};
        run.prices.times.push_back(1.0);
        run.hat = {"hat_wealth", c.seed, trade_t, n, std::vector<double>(n * width, 0.0)};
    }
    run.w_cap.resize(n);
    run.hat_stated.resize(n);
    run.hat_ito.resize(n);
    run.hat_recursive.resize(n);
    run.buy_and_hold.resize(n);

    const double f = c.fraction;
    const double cap_u = c.cap_changed_time();
    for_each_path(n, c.threads, [&](std::size_t p) {
        auto rng = derived_engine(c.seed, p, static_cast<std::uint64_t>(c.k));
        std::normal_distribution<double> z(0.0, 1.0);
        double w = 0.0;
        double xi_prev = 1.0;
        double xi_trade = 1.0;
        double x_rec = 1.0;
        double x_bh = 1.0;
        if (c.record_paths) {
            run.prices.values[p * (width + 1)] = 1.0;
            run.hat.values[p * width] = 1.0;
        }
        for (std::size_t i = 1; i < grid.size(); ++i) {
            const double dz = z(rng);
            if (!c.zero_volatility) w += root_dt[i] * dz;
            const double u = grid[i];
            const double xi = std::exp(-u / 4.0 + w);
            x_rec *= 1.0 + f * (xi / xi_prev - 1.0);
            xi_prev = xi;
            if (const auto j = trade_at[i]; j != SIZE_MAX) {
                x_bh *= 1.0 + f * (xi / xi_trade - 1.0);
                xi_trade = xi;
                if (c.record_paths) {
                    run.prices.values[p * (width + 1) + j] = xi;
                    run.hat.values[p * width + j] = std::exp(u / 16.0 + w / 4.0);
                }
            }
        }
        run.w_cap[p] = w;
        run.hat_stated[p] = std::exp(cap_u / 16.0 + w / 4.0);
        run.hat_ito[p] = std::exp((f / 4.0 - f * f / 2.0) * cap_u + f * w);
        run.hat_recursive[p] = x_rec;
        run.buy_and_hold[p] = x_bh;
    });
    return run;
}

SampleMoments sample_moments(std::span<const double> xs) {
    const double n = static_cast<double>(xs.size());
    if (xs.size() < 2) throw std::invalid_argument("sample_moments: need at least two samples");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double m2 = 0.0;
    double m4 = 0.0;
    for (double x : xs) {
        const double d = x - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    SampleMoments m;
    m.mean = mean;
    m.variance = m2 / (n - 1.0);
    m.se_mean = std::sqrt(m.variance / n);
    const double pm2 = m2 / n;
    m.se_variance = std::sqrt(std::max(0.0, m4 / n - pm2 * pm2) / n);
    return m;
}

double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

HatWealthReport hat_wealth(const CounterexampleRun& run) {
    const auto& c = run.config;
    HatWealthReport r;
    r.target = c.cap_changed_time() / 16.0;
    std::vector<double> logs(run.w_cap.size());
    for (std::size_t p = 0; p < logs.size(); ++p) logs[p] = c.cap_changed_time() / 16.0 + run.w_cap[p] / 4.0;
    r.log_hat = sample_moments(logs);
    r.mean_z = (r.log_hat.mean - r.target) / r.log_hat.se_mean;
    r.variance_z = (r.log_hat.variance - r.target) / r.log_hat.se_variance;

    std::vector<double> stated(logs.size());
    std::vector<double> ito(logs.size());
    for (std::size_t p = 0; p < logs.size(); ++p) {
        stated[p] = std::abs(run.hat_recursive[p] - run.hat_stated[p]) / run.hat_stated[p];
        ito[p] = std::abs(run.hat_recursive[p] - run.hat_ito[p]) / run.hat_ito[p];
    }
    r.stated_gap_max = *std::max_element(stated.begin(), stated.end());
    r.ito_gap_max = *std::max_element(ito.begin(), ito.end());
    r.stated_gap_p99 = quantile(std::move(stated), 0.99);
    r.ito_gap_p99 = quantile(std::move(ito), 0.99);
    r.hat = run.hat;
    return r;
}

HatWealthReport hat_wealth(const CounterexampleConfig& config) { return hat_wealth(run_counterexample(config)); }

BuyAndHoldReport approximate_buy_and_hold(const CounterexampleConfig& c, const PathBundle& prices,
                                          std::span<const double> hat_at_cap) {
    c.validate();
    if (prices.times.size() < 3 || prices.times.back() != 1.0)
        throw std::invalid_argument("approximate_buy_and_hold: price bundle must end with the t = 1 default point");
    if (hat_at_cap.size() != prices.paths) throw std::invalid_argument("approximate_buy_and_hold: one hat value per path");
    // Last trading index is 1 - 1/k; the position is liquidated there.
    const std::size_t cap = prices.times.size() - 2;
    BuyAndHoldReport r;
    r.threshold = 1.0 - 1.0 / c.k;
    r.median_target = std::exp(c.cap_changed_time() / 16.0);
    r.terminal.resize(prices.paths);
    std::size_t close = 0;
    for (std::size_t p = 0; p < prices.paths; ++p) {
        const auto s = prices.path(p);
        double x = 1.0;
        for (std::size_t j = 1; j <= cap; ++j) x *= 1.0 + c.fraction * (s[j] / s[j - 1] - 1.0);
        r.terminal[p] = x;
        if (std::abs(x - hat_at_cap[p]) < 1.0) ++close;
    }
    r.within_one_frequency = static_cast<double>(close) / static_cast<double>(prices.paths);
    r.passes = r.within_one_frequency > r.threshold;
    r.median = quantile(r.terminal, 0.5);
    return r;
}

double FailureDiagnostic::estimate(int k, double level) const {
    for (const auto& r : rows) {
        if (r.k == k && r.level == level) return r.estimate;
    }
    throw std::out_of_range("FailureDiagnostic: no estimate for that (k, level)");
}

double FailureDiagnostic::standard_error(int k, double level) const {
    for (const auto& r : rows) {
        if (r.k == k && r.level == level) return r.standard_error;
    }
    throw std::out_of_range("FailureDiagnostic: no estimate for that (k, level)");
}

bool FailureDiagnostic::nondecreasing(double level, double z) const {
    std::vector<const TailEstimate*> seq;
    for (const auto& r : rows) {
        if (r.level == level) seq.push_back(&r);
    }
    for (std::size_t j = 1; j < seq.size(); ++j) {
        const double se = std::hypot(seq[j - 1]->standard_error, seq[j]->standard_error);
        if (seq[j]->estimate < seq[j - 1]->estimate - z * se) return false;
    }
    return true;
}

FailureDiagnostic na1_failure_diagnostic(const CounterexampleConfig& base, const std::vector<int>& ks,
                                         const std::vector<double>& levels, std::size_t control_periods) {
    FailureDiagnostic out;
    for (int k : ks) {
        auto c = base;
        c.k = k;
        c.record_paths = false;
        const auto run = run_counterexample(c);
        const double n = static_cast<double>(run.buy_and_hold.size());
        for (double level : levels) {
            const auto hits = std::count_if(run.buy_and_hold.begin(), run.buy_and_hold.end(),
                                            [level](double x) { return x > level; });
            const double p = static_cast<double>(hits) / n;
            out.rows.push_back({k, level, p, std::sqrt(p * (1.0 - p) / n)});
        }
    }
    for (double level : levels) {
        int first = 0;
        for (int k : ks) {
            if (out.estimate(k, level) > 0.5) {
                first = k;
                break;
            }
        }
        out.first_k_above_half.emplace_back(level, first);
    }
    out.control_periods = control_periods;
    const auto control = binomial_tree(control_periods, 1.0, 2.0, 0.5, 0.5, GridTime(1, 3));
    // Also evaluate at the pathwise bound, where the exact tail is 0.
    auto control_levels = levels;
    control_levels.push_back(tail_curve(control, {}).pathwise_bound);
    out.control = tail_curve(control, control_levels);
    return out;
}

RefinementReport grid_refinement_study(const std::function<ScenarioTree(int)>& family, const std::vector<int>& ks,
                                       const std::vector<GridTime>& common_times) {
    RefinementReport r;
    for (int k : ks) {
        const auto tree = family(k);
        const auto p = numeraire_portfolio(tree);
        for (const auto& t : common_times) {
            double mass = 0.0;
            double mean = 0.0;
            double second = 0.0;
            for (NodeIndex n = 0; n < tree.size(); ++n) {
                const auto& node = tree.node(n);
                if (!(node.time == t)) continue;
                const double y = std::log(p.deflator.values[n]);
                mass += node.path_prob;
                mean += node.path_prob * y;
                second += node.path_prob * y * y;
            }
            if (mass == 0.0) throw std::invalid_argument("grid_refinement_study: time " + t.to_string() + " missing at k = " + std::to_string(k));
            mean /= mass;
            const double var = std::max(0.0, second / mass - mean * mean);
            r.rows.push_back({k, t, mean, std::sqrt(var)});
        }
    }
    const std::size_t T = common_times.size();
    for (std::size_t ti = 0; ti < T; ++ti) {
        double lo_m = INFINITY, hi_m = -INFINITY, lo_s = INFINITY, hi_s = -INFINITY;
        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
            const auto& row = r.rows[ki * T + ti];
            lo_m = std::min(lo_m, row.mean_log_deflator);
            hi_m = std::max(hi_m, row.mean_log_deflator);
            lo_s = std::min(lo_s, row.sd_log_deflator);
            hi_s = std::max(hi_s, row.sd_log_deflator);
        }
        r.mean_dispersion.push_back(ks.empty() ? 0.0 : hi_m - lo_m);
        r.sd_dispersion.push_back(ks.empty() ? 0.0 : hi_s - lo_s);
    }
    if (T > 0) {
        for (std::size_t ki = 1; ki < ks.size(); ++ki) {
            const auto& a = r.rows[(ki - 1) * T + T - 1];
            const auto& b = r.rows[ki * T + T - 1];
            r.successive_mean_gaps.push_back(std::abs(b.mean_log_deflator - a.mean_log_deflator));
            r.successive_sd_gaps.push_back(std::abs(b.sd_log_deflator - a.sd_log_deflator));
        }
    }
    return r;
}

ScenarioTree scaled_binomial_tree(int k, double mu, double sigma, int horizon) {
    if (k < 1 || horizon < 1 || horizon > k) throw std::invalid_argument("scaled_binomial_tree: need 1 <= horizon <= k");
    const double n = std::ldexp(1.0, k);
    const double up = 1.0 + mu / n + sigma / std::sqrt(n);
    const double down = 1.0 + mu / n - sigma / std::sqrt(n);
    if (!(down > 0.0)) throw std::invalid_argument("scaled_binomial_tree: down factor must stay positive");
    return binomial_tree(static_cast<std::size_t>(n) * static_cast<std::size_t>(horizon), 1.0, up, down, 0.5,
                         GridTime(1, k));
}

double embedded_deflator_gap(const ScenarioTree& tree, int finer) {
    const auto coarse = numeraire_portfolio(tree);
    const auto fine_tree = embed_on_grid(tree, finer);
    const auto fine = numeraire_portfolio(fine_tree);
    double gap = 0.0;
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto m = fine_tree.index_of(tree.node(n).id);
        gap = std::max(gap, std::abs(coarse.deflator.values[n] - fine.deflator.values[m]));
    }
    return gap;
}

}  // namespace na1lab
