#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "na1lab/scenario_tree.hpp"

namespace na1lab {

/// Tolerances for floating-point wealth comparisons.
struct WealthTolerance {
    double rel = 1e-10;
    double abs = 1e-12;

    bool close(double a, double b) const;
    /// a <= b up to tolerance.
    bool leq(double a, double b) const;
};

/// Additive holdings: `holdings[n]` (d units of each asset) is held from node
/// n's time until its children's time. Leaf entries are ignored.
struct SimpleStrategy {
    std::vector<Vec> holdings;

    static SimpleStrategy zero(const ScenarioTree& tree);
};

/// Multiplicative parametrization: `weights[n]` is the fraction of wealth in
/// each asset from node n until its children. Must lie in the simplex
/// {pi >= 0, sum pi <= 1}; the rest is cash.
struct ProportionProcess {
    std::vector<Vec> weights;

    static ProportionProcess zero(const ScenarioTree& tree);
};

/// Node-indexed wealth. values[root] is the initial capital.
struct WealthProcess {
    std::vector<double> values;

    double initial() const { return values.front(); }
};

/// Per non-root node, the one-step returns from the parent; zero at the root.
struct ReturnsProcess {
    std::vector<Vec> returns;
};

struct WealthResult {
    WealthProcess wealth;
    /// Nodes where the generated wealth is negative (strategy outside the
    /// no-short-sales class).
    std::vector<NodeIndex> negative_nodes;
};

/// X_child = X_parent + <holdings_parent, S_child - S_parent>, X_root = x.
WealthResult wealth_from_holdings(const ScenarioTree& tree, double x, const SimpleStrategy& strategy);

struct AdmissibilityViolation {
    enum class Kind { NegativeHolding, Budget, NegativeWealth };
    NodeIndex node;
    Kind kind;
    std::size_t asset = 0;  // only meaningful for NegativeHolding
    double amount = 0.0;    // shortfall magnitude
};

struct AdmissibilityReport {
    std::vector<AdmissibilityViolation> violations;
    bool admissible() const { return violations.empty(); }
};

/// Checks holdings >= 0 and <holdings, S> <= X at every non-leaf node, for
/// the wealth the strategy generates from x.
AdmissibilityReport check_no_short_sales(const ScenarioTree& tree, const SimpleStrategy& strategy, double x,
                                         const WealthTolerance& tol = {});

/// (S_child / S_parent - 1) where S_parent > 0, else 0.
ReturnsProcess returns_process(const ScenarioTree& tree);

struct Revival {
    std::size_t asset;
    NodeIndex node;  // a node where the price is 0 and some descendant has a positive price

    friend bool operator==(const Revival&, const Revival&) = default;
};

/// Every (asset, zero-price node) pair from which the asset price later
/// becomes positive again, in node order.
std::vector<Revival> find_revivals(const ScenarioTree& tree);

class RevivalError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Throws std::invalid_argument if some weight vector leaves the simplex
/// (beyond `slack`) or has the wrong size.
void check_simplex(const ScenarioTree& tree, const ProportionProcess& pi, double slack = 1e-12);

/// X_root = 1, X_child = X_parent * (1 + <pi_parent, dR_child>).
/// Throws RevivalError on trees where some asset revives.
WealthProcess wealth_from_proportions(const ScenarioTree& tree, const ProportionProcess& pi);

/// Units held: pi^i X / S^i where S^i > 0 (else 0), using the wealth of pi from 1.
SimpleStrategy proportions_to_holdings(const ScenarioTree& tree, const ProportionProcess& pi);
/// Fractions: holdings^i S^i / X where X > 0 (else 0), with X generated from x.
ProportionProcess holdings_to_proportions(const ScenarioTree& tree, const SimpleStrategy& strategy, double x);

/// Index of the first zero along a path, if any.
std::optional<std::size_t> bankruptcy_index(std::span<const double> path);
/// True iff the path stays at zero from its first zero on.
bool cannot_revive(std::span<const double> path);

/// Per leaf (in `tree.leaves()` order), the depth at which `values` first hits zero.
std::vector<std::optional<std::size_t>> bankruptcy_times(const ScenarioTree& tree, std::span<const double> values);
bool cannot_revive(const ScenarioTree& tree, std::span<const double> values);

/// Price of one asset as a node-indexed process.
std::vector<double> asset_prices(const ScenarioTree& tree, std::size_t asset);

// Discrete stochastic exponential and logarithm.
//
// stoch_log emits dR = dS / S_prev while S_prev > 0 and 0 afterwards; it
// throws RevivalError when the process leaves zero. stoch_exp multiplies
// s0 by (1 + dR) step by step and throws std::domain_error if dR < -1.

std::vector<double> stoch_log(std::span<const double> path);
std::vector<double> stoch_exp(std::span<const double> increments, double s0);

/// Tree versions: increments indexed by node, root entry 0.
std::vector<double> stoch_log(const ScenarioTree& tree, std::span<const double> values);
std::vector<double> stoch_exp(const ScenarioTree& tree, std::span<const double> increments, double s0);

}  // namespace na1lab
