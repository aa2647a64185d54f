#include "na1lab/viability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace na1lab {

std::vector<Revival> detect_revival(const ScenarioTree& tree) { return find_revivals(tree); }

DeflatorLpResult deflator_lp(const ScenarioTree& tree, const DeflatorLpOptions& options) {
    const std::size_t n = tree.size();
    const std::size_t z = n;  // index of the min-value variable
    lp::Problem problem;
    problem.variables = n + 1;
    problem.objective.assign(n + 1, 0.0);
    problem.objective[z] = 1.0;

    problem.constraints.push_back({{{ScenarioTree::root(), 1.0}}, lp::Sense::Equal, 1.0});
    for (NodeIndex i = 0; i < n; ++i) problem.constraints.push_back({{{z, 1.0}, {i, -1.0}}, lp::Sense::LessEqual, 0.0});
    for (NodeIndex i = 0; i < n; ++i) {
        const auto& node = tree.node(i);
        if (node.is_leaf()) continue;
        lp::Constraint cash{{{i, -1.0}}, lp::Sense::LessEqual, 0.0};
        for (const auto& c : node.children) cash.terms.emplace_back(c.node, c.prob);
        problem.constraints.push_back(std::move(cash));
        for (std::size_t a = 0; a < tree.assets(); ++a) {
            lp::Constraint risky{{}, lp::Sense::LessEqual, 0.0};
            if (node.prices[a] != 0.0) risky.terms.emplace_back(i, -node.prices[a]);
            for (const auto& c : node.children) {
                const double s = tree.price(c.node, a);
                if (s != 0.0) risky.terms.emplace_back(c.node, c.prob * s);
            }
            if (!risky.terms.empty()) problem.constraints.push_back(std::move(risky));
        }
    }

    const auto solved = lp::solve(problem, options.solver);
    DeflatorLpResult out;
    out.status = solved.status;
    if (solved.status != lp::Status::Optimal) return out;
    out.min_value = std::max(0.0, solved.x[z]);
    out.feasible = out.min_value + options.tolerance >= options.epsilon;
    if (out.feasible) {
        std::vector<double> y(solved.x.begin(), solved.x.begin() + static_cast<std::ptrdiff_t>(n));
        y[0] = 1.0;
        if (std::all_of(y.begin(), y.end(), [](double v) { return v > 0.0; })) out.deflator = Deflator::from_values(std::move(y));
    }
    return out;
}

namespace {

// Nodes below `start` (exclusive) reached through zero prices of `asset`,
// split into internal zero nodes and the first positive nodes.
struct RevivalBranch {
    std::vector<NodeIndex> zero_nodes;
    std::vector<NodeIndex> successors;
};

RevivalBranch explore(const ScenarioTree& tree, NodeIndex start, std::size_t asset) {
    RevivalBranch b;
    std::vector<NodeIndex> stack{start};
    while (!stack.empty()) {
        const auto n = stack.back();
        stack.pop_back();
        b.zero_nodes.push_back(n);
        for (const auto& c : tree.node(n).children) {
            if (tree.price(c.node, asset) > 0.0)
                b.successors.push_back(c.node);
            else
                stack.push_back(c.node);
        }
    }
    std::sort(b.zero_nodes.begin(), b.zero_nodes.end());
    std::sort(b.successors.begin(), b.successors.end());
    return b;
}

SimpleStrategy revival_strategy(const ScenarioTree& tree, const Revival& r, const RevivalBranch& b, double units) {
    auto s = SimpleStrategy::zero(tree);
    for (NodeIndex n : b.zero_nodes) {
        if (!tree.node(n).is_leaf()) s.holdings[n][r.asset] = units;
    }
    return s;
}

}  // namespace

ArbitrageWitness build_witness(const ScenarioTree& tree, const Revival& revival, const std::vector<double>& capitals) {
    if (revival.asset >= tree.assets() || revival.node >= tree.size() || tree.price(revival.node, revival.asset) != 0.0)
        throw NotARevival("build_witness: price is not zero at the given node");
    const auto branch = explore(tree, revival.node, revival.asset);
    if (branch.successors.empty()) throw NotARevival("build_witness: the asset never becomes positive again below the node");

    double c = std::numeric_limits<double>::infinity();
    for (NodeIndex s : branch.successors) c = std::min(c, tree.price(s, revival.asset));

    ArbitrageWitness w;
    w.horizon = tree.horizon();
    w.revival = revival;
    w.claim.assign(tree.leaves().size(), 0.0);
    for (NodeIndex s : branch.successors) {
        for (NodeIndex leaf : tree.leaves_below(s)) {
            const auto pos = std::find(tree.leaves().begin(), tree.leaves().end(), leaf) - tree.leaves().begin();
            w.claim[static_cast<std::size_t>(pos)] = c;
        }
    }
    const auto strategy = revival_strategy(tree, revival, branch, 1.0);
    for (double x : capitals) {
        if (!(x > 0.0)) throw std::invalid_argument("build_witness: capitals must be positive");
        w.strategies.push_back({x, strategy});
    }
    return w;
}

bool WitnessReplay::ok() const {
    return claim_valid && !entries.empty() &&
           std::all_of(entries.begin(), entries.end(), [](const Entry& e) { return e.admissible && e.dominates; });
}

WitnessReplay replay_witness(const ScenarioTree& tree, const ArbitrageWitness& w) {
    WitnessReplay out;
    const auto& leaves = tree.leaves();
    out.claim_valid = w.claim.size() == leaves.size() &&
                      std::all_of(w.claim.begin(), w.claim.end(), [](double v) { return v >= 0.0; }) &&
                      std::any_of(w.claim.begin(), w.claim.end(), [](double v) { return v > 0.0; });
    for (const auto& s : w.strategies) {
        const auto X = wealth_from_holdings(tree, s.capital, s.strategy).wealth.values;
        WitnessReplay::Entry e{s.capital, check_no_short_sales(tree, s.strategy, s.capital).admissible(), true,
                               std::numeric_limits<double>::infinity()};
        for (std::size_t l = 0; l < leaves.size() && l < w.claim.size(); ++l) {
            const double gap = X[leaves[l]] - w.claim[l];
            e.margin = std::min(e.margin, gap);
            if (!(X[leaves[l]] >= w.claim[l])) e.dominates = false;
        }
        out.entries.push_back(e);
    }
    return out;
}

const char* outcome_name(Outcome o) { return o == Outcome::Holds ? "HOLDS" : "FAILS"; }

std::vector<double> ViabilityOptions::default_capitals() {
    std::vector<double> c;
    for (int j = 0; j <= 10; ++j) c.push_back(std::ldexp(1.0, -j));
    return c;
}

ViabilityVerdict na1_check(const ScenarioTree& tree, const ViabilityOptions& options) {
    ViabilityVerdict v;
    v.diagnostics.revivals = detect_revival(tree);
    v.diagnostics.lp = deflator_lp(tree, options.lp);
    const bool revival_free = v.diagnostics.revivals.empty();
    if (v.diagnostics.lp.status != lp::Status::Optimal)
        throw InconsistentRoutes(std::string("deflator LP did not solve: ") + lp::status_name(v.diagnostics.lp.status));
    if (revival_free != v.diagnostics.lp.feasible)
        throw InconsistentRoutes(revival_free ? "no revival, but the deflator LP is infeasible"
                                              : "revival found, but the deflator LP reports a feasible deflator");

    if (revival_free) {
        v.outcome = Outcome::Holds;
        auto portfolio = numeraire_portfolio(tree, options.solver);
        const auto& y = portfolio.deflator.values;
        bool ok = verify_deflation(tree, y, std::vector<double>(tree.size(), 1.0), options.deflation_tol).ok();
        for (std::size_t a = 0; a < tree.assets() && ok; ++a)
            ok = verify_deflation(tree, y, asset_prices(tree, a), options.deflation_tol).ok();
        if (!ok) throw InconsistentRoutes("numeraire deflator fails its supermartingale check");
        v.deflator = std::move(portfolio.deflator);
    } else {
        v.outcome = Outcome::Fails;
        v.witness = build_witness(tree, v.diagnostics.revivals.front(), options.capitals);
        v.replay = replay_witness(tree, *v.witness);
        if (!v.replay->ok()) throw InconsistentRoutes("arbitrage witness does not replay");
    }
    v.diagnostics.certificate_verified = true;
    return v;
}

double max_one_step_gain(const ScenarioTree& tree, double x) {
    double best = 0.0;
    for (const auto& node : tree.nodes()) {
        for (const auto& c : node.children) {
            for (std::size_t i = 0; i < tree.assets(); ++i) {
                const double s0 = node.prices[i];
                const double ds = std::abs(tree.price(c.node, i) - s0);
                if (s0 > 0.0)
                    best = std::max(best, x * ds / s0);
                else if (ds > 0.0)
                    return std::numeric_limits<double>::infinity();
            }
        }
    }
    return best;
}

LogUtilityValue log_utility_value(const ScenarioTree& tree, double x, const SolverOptions& options) {
    if (!(x > 0.0)) throw std::invalid_argument("log_utility_value: capital must be positive");
    LogUtilityValue out;
    const auto revivals = detect_revival(tree);
    if (revivals.empty()) {
        const auto p = numeraire_portfolio(tree, options);
        out.value = std::log(x);
        for (NodeIndex n = 0; n < tree.size(); ++n) {
            if (!tree.node(n).is_leaf()) out.value += tree.node(n).path_prob * p.solutions[n].value;
        }
        return out;
    }
    out.value = std::numeric_limits<double>::infinity();
    const auto& r = revivals.front();
    const auto branch = explore(tree, r.node, r.asset);
    for (double units : {1.0, 1e1, 1e2, 1e3, 1e4, 1e6, 1e9}) {
        const auto X = wealth_from_holdings(tree, x, revival_strategy(tree, r, branch, units)).wealth.values;
        double e = 0.0;
        for (NodeIndex leaf : tree.leaves()) e += tree.node(leaf).path_prob * std::log(X[leaf]);
        out.scaling_witness.push_back({units, e});
    }
    return out;
}

TailCurve tail_curve(const ScenarioTree& tree, const std::vector<double>& levels) {
    TailCurve out;
    out.levels = levels;
    const auto revivals = detect_revival(tree);
    if (!revivals.empty()) {
        out.unbounded = true;
        out.pathwise_bound = std::numeric_limits<double>::infinity();
        std::vector<char> hit(tree.size(), 0);
        for (const auto& r : revivals) {
            for (NodeIndex s : explore(tree, r.node, r.asset).successors) {
                for (NodeIndex leaf : tree.leaves_below(s)) hit[leaf] = 1;
            }
        }
        double mass = 0.0;
        for (NodeIndex leaf : tree.leaves()) {
            if (hit[leaf]) mass += tree.node(leaf).path_prob;
        }
        out.probabilities.assign(levels.size(), mass);
        return out;
    }
    const auto R = returns_process(tree);
    std::vector<double> bound(tree.size(), 1.0);
    for (NodeIndex n = 1; n < tree.size(); ++n) {
        double best = 0.0;
        for (double r : R.returns[n]) best = std::max(best, r);
        bound[n] = bound[*tree.node(n).parent] * (1.0 + best);
    }
    for (NodeIndex leaf : tree.leaves()) out.pathwise_bound = std::max(out.pathwise_bound, bound[leaf]);
    for (double level : levels) {
        double p = 0.0;
        for (NodeIndex leaf : tree.leaves()) {
            if (bound[leaf] > level) p += tree.node(leaf).path_prob;
        }
        out.probabilities.push_back(p);
    }
    return out;
}

}  // namespace na1lab
