#include "na1lab/trading.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace na1lab {

bool WealthTolerance::close(double a, double b) const {
    return std::abs(a - b) <= abs + rel * std::max(std::abs(a), std::abs(b));
}

bool WealthTolerance::leq(double a, double b) const {
    return a <= b + abs + rel * std::max(std::abs(a), std::abs(b));
}

SimpleStrategy SimpleStrategy::zero(const ScenarioTree& tree) {
    return {std::vector<Vec>(tree.size(), Vec(tree.assets(), 0.0))};
}

ProportionProcess ProportionProcess::zero(const ScenarioTree& tree) {
    return {std::vector<Vec>(tree.size(), Vec(tree.assets(), 0.0))};
}

namespace {

double dot(const Vec& a, const Vec& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void check_shape(const ScenarioTree& tree, const std::vector<Vec>& per_node, const char* what) {
    if (per_node.size() != tree.size())
        throw std::invalid_argument(std::string(what) + ": expected one entry per node");
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (!tree.node(n).is_leaf() && per_node[n].size() != tree.assets())
            throw std::invalid_argument(std::string(what) + ": wrong dimension at node '" + tree.node(n).id + "'");
    }
}

}  // namespace

WealthResult wealth_from_holdings(const ScenarioTree& tree, double x, const SimpleStrategy& strategy) {
    check_shape(tree, strategy.holdings, "wealth_from_holdings");
    WealthResult out;
    auto& X = out.wealth.values;
    X.assign(tree.size(), 0.0);
    X[0] = x;
    if (x < 0.0) out.negative_nodes.push_back(0);
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto& node = tree.node(n);
        const Vec& theta = strategy.holdings[n];
        for (const auto& c : node.children) {
            const auto& s1 = tree.node(c.node).prices;
            double gain = 0.0;
            for (std::size_t i = 0; i < tree.assets(); ++i) gain += theta[i] * (s1[i] - node.prices[i]);
            X[c.node] = X[n] + gain;
            if (X[c.node] < 0.0) out.negative_nodes.push_back(c.node);
        }
    }
    return out;
}

AdmissibilityReport check_no_short_sales(const ScenarioTree& tree, const SimpleStrategy& strategy, double x,
                                         const WealthTolerance& tol) {
    using Kind = AdmissibilityViolation::Kind;
    const auto result = wealth_from_holdings(tree, x, strategy);
    const auto& X = result.wealth.values;
    AdmissibilityReport report;
    for (NodeIndex n : result.negative_nodes) {
        if (X[n] < -(tol.abs + tol.rel * std::abs(x))) report.violations.push_back({n, Kind::NegativeWealth, 0, -X[n]});
    }
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto& node = tree.node(n);
        if (node.is_leaf()) continue;
        const Vec& theta = strategy.holdings[n];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            if (theta[i] < 0.0) report.violations.push_back({n, Kind::NegativeHolding, i, -theta[i]});
        }
        const double cost = dot(theta, node.prices);
        if (!tol.leq(cost, X[n])) report.violations.push_back({n, Kind::Budget, 0, cost - X[n]});
    }
    return report;
}

ReturnsProcess returns_process(const ScenarioTree& tree) {
    ReturnsProcess out{std::vector<Vec>(tree.size(), Vec(tree.assets(), 0.0))};
    for (NodeIndex n = 1; n < tree.size(); ++n) {
        const auto& node = tree.node(n);
        const auto& parent = tree.node(*node.parent);
        for (std::size_t i = 0; i < tree.assets(); ++i) {
            if (parent.prices[i] > 0.0) out.returns[n][i] = node.prices[i] / parent.prices[i] - 1.0;
        }
    }
    return out;
}

std::vector<Revival> find_revivals(const ScenarioTree& tree) {
    // positive_below[n][i]: some strict descendant of n has a positive price of asset i.
    const std::size_t d = tree.assets();
    std::vector<std::vector<char>> positive_below(tree.size(), std::vector<char>(d, 0));
    for (NodeIndex n = tree.size(); n-- > 1;) {
        const auto& node = tree.node(n);
        auto& up = positive_below[*node.parent];
        for (std::size_t i = 0; i < d; ++i) {
            if (node.prices[i] > 0.0 || positive_below[n][i]) up[i] = 1;
        }
    }
    std::vector<Revival> out;
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        for (std::size_t i = 0; i < d; ++i) {
            if (tree.price(n, i) == 0.0 && positive_below[n][i]) out.push_back({i, n});
        }
    }
    return out;
}

void check_simplex(const ScenarioTree& tree, const ProportionProcess& pi, double slack) {
    check_shape(tree, pi.weights, "proportion process");
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (tree.node(n).is_leaf()) continue;
        double sum = 0.0;
        for (double w : pi.weights[n]) {
            if (!(w >= -slack)) throw std::invalid_argument("proportions: negative weight at node '" + tree.node(n).id + "'");
            sum += w;
        }
        if (sum > 1.0 + slack) throw std::invalid_argument("proportions: weights exceed 1 at node '" + tree.node(n).id + "'");
    }
}

WealthProcess wealth_from_proportions(const ScenarioTree& tree, const ProportionProcess& pi) {
    check_simplex(tree, pi);
    if (auto r = find_revivals(tree); !r.empty())
        throw RevivalError("wealth_from_proportions: asset " + std::to_string(r.front().asset + 1) +
                           " revives after node '" + tree.node(r.front().node).id + "'");
    const auto R = returns_process(tree);
    WealthProcess X{std::vector<double>(tree.size(), 0.0)};
    X.values[0] = 1.0;
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        for (const auto& c : tree.node(n).children) {
            const double factor = 1.0 + dot(pi.weights[n], R.returns[c.node]);
            // Simplex weights and returns >= -1 keep the factor >= 0 up to rounding.
            if (factor < -1e-12)
                throw std::logic_error("wealth_from_proportions: negative one-step factor at node '" +
                                       tree.node(c.node).id + "'");
            X.values[c.node] = X.values[n] * std::max(factor, 0.0);
        }
    }
    return X;
}

SimpleStrategy proportions_to_holdings(const ScenarioTree& tree, const ProportionProcess& pi) {
    const auto X = wealth_from_proportions(tree, pi);
    SimpleStrategy theta = SimpleStrategy::zero(tree);
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (tree.node(n).is_leaf()) continue;
        for (std::size_t i = 0; i < tree.assets(); ++i) {
            const double s = tree.price(n, i);
            if (s > 0.0) theta.holdings[n][i] = pi.weights[n][i] * X.values[n] / s;
        }
    }
    return theta;
}

ProportionProcess holdings_to_proportions(const ScenarioTree& tree, const SimpleStrategy& strategy, double x) {
    const auto X = wealth_from_holdings(tree, x, strategy).wealth;
    ProportionProcess pi = ProportionProcess::zero(tree);
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (tree.node(n).is_leaf() || !(X.values[n] > 0.0)) continue;
        for (std::size_t i = 0; i < tree.assets(); ++i)
            pi.weights[n][i] = strategy.holdings[n][i] * tree.price(n, i) / X.values[n];
    }
    return pi;
}

std::optional<std::size_t> bankruptcy_index(std::span<const double> path) {
    for (std::size_t j = 0; j < path.size(); ++j) {
        if (path[j] == 0.0) return j;
    }
    return std::nullopt;
}

bool cannot_revive(std::span<const double> path) {
    const auto z = bankruptcy_index(path);
    if (!z) return true;
    return std::all_of(path.begin() + static_cast<std::ptrdiff_t>(*z), path.end(), [](double v) { return v == 0.0; });
}

namespace {

std::vector<double> along(const ScenarioTree& tree, std::span<const double> values, NodeIndex leaf) {
    std::vector<double> out;
    for (NodeIndex n : tree.path_to(leaf)) out.push_back(values[n]);
    return out;
}

}  // namespace

std::vector<std::optional<std::size_t>> bankruptcy_times(const ScenarioTree& tree, std::span<const double> values) {
    if (values.size() != tree.size()) throw std::invalid_argument("bankruptcy_times: size mismatch");
    std::vector<std::optional<std::size_t>> out;
    for (NodeIndex leaf : tree.leaves()) out.push_back(bankruptcy_index(along(tree, values, leaf)));
    return out;
}

bool cannot_revive(const ScenarioTree& tree, std::span<const double> values) {
    if (values.size() != tree.size()) throw std::invalid_argument("cannot_revive: size mismatch");
    for (NodeIndex n = 1; n < tree.size(); ++n) {
        if (values[*tree.node(n).parent] == 0.0 && values[n] != 0.0) return false;
    }
    return true;
}

std::vector<double> asset_prices(const ScenarioTree& tree, std::size_t asset) {
    if (asset >= tree.assets()) throw std::out_of_range("asset_prices: asset index out of range");
    std::vector<double> out(tree.size());
    for (NodeIndex n = 0; n < tree.size(); ++n) out[n] = tree.price(n, asset);
    return out;
}

std::vector<double> stoch_log(std::span<const double> path) {
    std::vector<double> dR;
    if (path.empty()) return dR;
    dR.reserve(path.size() - 1);
    for (std::size_t j = 1; j < path.size(); ++j) {
        const double prev = path[j - 1];
        if (path[j] < 0.0 || prev < 0.0) throw std::domain_error("stoch_log: negative value");
        if (prev > 0.0) {
            dR.push_back((path[j] - prev) / prev);
        } else {
            if (path[j] != 0.0) throw RevivalError("stoch_log: process revives at step " + std::to_string(j));
            dR.push_back(0.0);
        }
    }
    return dR;
}

std::vector<double> stoch_exp(std::span<const double> increments, double s0) {
    std::vector<double> out{s0};
    out.reserve(increments.size() + 1);
    for (double r : increments) {
        if (r < -1.0) throw std::domain_error("stoch_exp: increment below -1");
        out.push_back(out.back() * (1.0 + r));
    }
    return out;
}

std::vector<double> stoch_log(const ScenarioTree& tree, std::span<const double> values) {
    if (values.size() != tree.size()) throw std::invalid_argument("stoch_log: size mismatch");
    std::vector<double> dR(tree.size(), 0.0);
    for (NodeIndex n = 1; n < tree.size(); ++n) {
        const double prev = values[*tree.node(n).parent];
        if (values[n] < 0.0 || prev < 0.0) throw std::domain_error("stoch_log: negative value");
        if (prev > 0.0) {
            dR[n] = (values[n] - prev) / prev;
        } else if (values[n] != 0.0) {
            throw RevivalError("stoch_log: process revives at node '" + tree.node(n).id + "'");
        }
    }
    return dR;
}

std::vector<double> stoch_exp(const ScenarioTree& tree, std::span<const double> increments, double s0) {
    if (increments.size() != tree.size()) throw std::invalid_argument("stoch_exp: size mismatch");
    std::vector<double> out(tree.size(), 0.0);
    out[0] = s0;
    for (NodeIndex n = 1; n < tree.size(); ++n) {
        if (increments[n] < -1.0)
            throw std::domain_error("stoch_exp: increment below -1 at node '" + tree.node(n).id + "'");
        out[n] = out[*tree.node(n).parent] * (1.0 + increments[n]);
    }
    return out;
}

}  // namespace na1lab
