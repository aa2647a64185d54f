#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "na1lab/scenario_tree.hpp"
#include "na1lab/trading.hpp"

namespace na1lab {

/// One-step market at a node: child returns and transition probabilities.
struct NodeProblem {
    std::vector<Vec> returns;
    std::vector<double> probs;

    std::size_t assets() const { return returns.empty() ? 0 : returns.front().size(); }
    /// Throws std::invalid_argument unless probabilities are positive and sum
    /// to one within `prob_tol`, and every return is >= -1.
    void validate(double prob_tol = kDefaultProbabilityTolerance) const;
};

struct SolverOptions {
    double tol = 1e-8;
    int max_iterations = 10000;
};

struct NodeSolution {
    Vec rho;
    /// sum_c p_c log(1 + <rho, R_c>)
    double value = 0.0;
    /// Frank-Wolfe gap max_v <grad, v - rho> over simplex vertices v. It bounds
    /// the suboptimality of `value` and equals the worst vertex excess checked
    /// by verify_numeraire.
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Expected log growth of the one-step market at proportions `pi`;
/// -infinity when some child would be bankrupted.
double log_growth(const NodeProblem& problem, const Vec& pi);

/// Maximizes expected log growth over {pi >= 0, sum pi <= 1} by projected
/// gradient ascent (Barzilai-Borwein steps, Armijo backtracking), starting at
/// all-cash. Non-convergence is reported through `converged`, not thrown.
NodeSolution solve_node(const NodeProblem& problem, const SolverOptions& options = {});

struct NumeraireCheck {
    bool ok = false;
    /// Some child has 1 + <rho, R_c> <= 0.
    bool structural_failure = false;
    /// E[(1 + <v, R>) / (1 + <rho, R>)] for v = 0, e_1, ..., e_d.
    std::vector<double> vertex_values;
    /// max over vertices of (value - 1).
    double worst_excess = 0.0;
};

NumeraireCheck verify_numeraire(const NodeProblem& problem, const Vec& rho, double tol = 1e-8);

/// Euclidean projection onto {x >= 0, sum x <= 1}.
Vec project_to_simplex(const Vec& x);

/// Strictly positive process with value 1 at the root.
struct Deflator {
    std::vector<double> values;

    /// Throws std::invalid_argument unless positive everywhere with root value 1.
    static Deflator from_values(std::vector<double> values);
};

class NumeraireError : public std::runtime_error {
public:
    NumeraireError(const std::string& node, const NodeSolution& best);
    const std::string& node() const { return node_; }
    const NodeSolution& best() const { return best_; }

private:
    std::string node_;
    NodeSolution best_;
};

struct NumerairePortfolio {
    ProportionProcess rho;
    WealthProcess wealth;
    Deflator deflator;
    /// Per node; empty entries (default-constructed) at leaves.
    std::vector<NodeSolution> solutions;
    std::vector<NodeProblem> problems;
};

/// Node problem at a non-leaf node.
NodeProblem node_problem(const ScenarioTree& tree, const ReturnsProcess& returns, NodeIndex n);

/// Solves every node, builds the numeraire wealth and its reciprocal.
/// Throws RevivalError on trees with revival, NumeraireError on solver failure.
NumerairePortfolio numeraire_portfolio(const ScenarioTree& tree, const SolverOptions& options = {});

struct DeflationViolation {
    NodeIndex node;
    GridTime time;
    double excess;
};

struct DeflationReport {
    std::vector<DeflationViolation> violations;
    std::size_t checks = 0;
    bool ok() const { return violations.empty(); }
};

enum class DeflationScope {
    /// E[Y X at the children | n] <= (Y X)(n) for every node n. By the tower
    /// property this implies the full statement.
    OneStep,
    /// E[Y X at every later time | n] <= (Y X)(n), checked directly.
    AllHorizons,
};

/// Supermartingale check of Y * X. The tolerance is relative to
/// max(1, |Y X|(n)).
DeflationReport verify_deflation(const ScenarioTree& tree, std::span<const double> deflator,
                                 std::span<const double> wealth, double tol = 1e-9,
                                 DeflationScope scope = DeflationScope::OneStep);

}  // namespace na1lab
