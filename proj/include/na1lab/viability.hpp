#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "na1lab/lp.hpp"
#include "na1lab/numeraire.hpp"
#include "na1lab/scenario_tree.hpp"
#include "na1lab/trading.hpp"

namespace na1lab {

/// Every (asset, node) where the price is zero at the node and positive at
/// some later node of its subtree.
std::vector<Revival> detect_revival(const ScenarioTree& tree);

struct DeflatorLpOptions {
    /// Strict-positivity floor for the deflator.
    double epsilon = 1e-9;
    /// Slack accepted when comparing the optimal minimum deflator value with
    /// epsilon. Raising it is how tests inject a faulty LP route.
    double tolerance = 1e-12;
    lp::Options solver;
};

struct DeflatorLpResult {
    bool feasible = false;
    /// Optimal value of min_n Y_n (0 when the floor cannot be lifted).
    double min_value = 0.0;
    lp::Status status = lp::Status::Infeasible;
    std::optional<Deflator> deflator;
};

/// Linear feasibility for Y with Y_root = 1, Y >= epsilon, and Y, Y S^i
/// one-step supermartingales, solved as max_Y min_n Y_n.
DeflatorLpResult deflator_lp(const ScenarioTree& tree, const DeflatorLpOptions& options = {});

struct WitnessStrategy {
    double capital;
    SimpleStrategy strategy;
};

/// A nonnegative, nonzero terminal claim dominated from every listed capital.
struct ArbitrageWitness {
    GridTime horizon;
    Revival revival;
    /// Claim value per leaf, in `tree.leaves()` order.
    std::vector<double> claim;
    std::vector<WitnessStrategy> strategies;
};

struct WitnessReplay {
    struct Entry {
        double capital;
        bool admissible;
        bool dominates;
        /// min over leaves of (terminal wealth - claim)
        double margin;
    };
    std::vector<Entry> entries;
    bool claim_valid = false;
    bool ok() const;
};

class NotARevival : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Buys one unit of the revived asset for free at the zero-price node and
/// sells it at the first node where the price is positive again. The claim
/// is c on every leaf below such a node, c being the smallest such price.
ArbitrageWitness build_witness(const ScenarioTree& tree, const Revival& revival, const std::vector<double>& capitals);

/// Re-runs every witness strategy through wealth_from_holdings and
/// check_no_short_sales; domination is checked exactly (no tolerance).
WitnessReplay replay_witness(const ScenarioTree& tree, const ArbitrageWitness& witness);

enum class Outcome { Holds, Fails };

const char* outcome_name(Outcome o);

struct ViabilityDiagnostics {
    std::vector<Revival> revivals;
    DeflatorLpResult lp;
    /// Certificate self-checks (deflation against 1 and each S^i, or replay).
    bool certificate_verified = false;
};

struct ViabilityVerdict {
    Outcome outcome = Outcome::Holds;
    std::optional<Deflator> deflator;
    std::optional<ArbitrageWitness> witness;
    std::optional<WitnessReplay> replay;
    ViabilityDiagnostics diagnostics;
};

/// The two decision routes (revival scan, deflator LP) or a certificate
/// check disagree. Always a bug or an injected fault.
class InconsistentRoutes : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct ViabilityOptions {
    DeflatorLpOptions lp;
    SolverOptions solver;
    std::vector<double> capitals = default_capitals();
    double deflation_tol = 1e-9;

    /// {2^-j : j = 0..10}
    static std::vector<double> default_capitals();
};

/// Decides absence of arbitrage of the first kind (simple, no-short-sales
/// trading) on a finite tree and attaches a certificate. Throws
/// InconsistentRoutes when the routes disagree.
ViabilityVerdict na1_check(const ScenarioTree& tree, const ViabilityOptions& options = {});

/// Bound on |<holdings, S_child - S_n>| over admissible holdings from capital
/// x at node n, maximized over nodes. Infinite when a zero price moves.
double max_one_step_gain(const ScenarioTree& tree, double x);

struct LogUtilityScaling {
    double units;
    double expected_log;
};

struct LogUtilityValue {
    /// +infinity on trees with revival.
    double value = 0.0;
    /// On revival trees: strategies buying `units` of the revived asset at the
    /// zero-price node, with expected log terminal wealth increasing without
    /// bound.
    std::vector<LogUtilityScaling> scaling_witness;
};

/// sup of E[log X_T] over admissible strategies from capital x.
LogUtilityValue log_utility_value(const ScenarioTree& tree, double x, const SolverOptions& options = {});

struct TailCurve {
    std::vector<double> levels;
    /// Upper envelope of sup_pi P[X_T > level] at each level (exact at the
    /// levels where it vanishes).
    std::vector<double> probabilities;
    /// Largest pathwise product of (1 + max(0, max_i dR^i)) over leaves.
    double pathwise_bound = 0.0;
    /// Revival tree: the additive class has no finite level with zero tail.
    bool unbounded = false;
};

/// Tail curve for wealth from unit capital. For each leaf, the largest
/// terminal wealth any proportion process can reach along that path is
/// prod (1 + max(0, max_i dR^i)); the curve is P[that bound > level].
TailCurve tail_curve(const ScenarioTree& tree, const std::vector<double>& levels);

}  // namespace na1lab
