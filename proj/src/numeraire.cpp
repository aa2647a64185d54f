#include "na1lab/numeraire.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

namespace na1lab {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-14;
constexpr double kMaxStep = 1e10;

double dot(const Vec& a, const Vec& b) { return std::inner_product(a.begin(), a.end(), b.begin(), 0.0); }

Vec gradient(const NodeProblem& p, const Vec& pi) {
    Vec g(p.assets(), 0.0);
    for (std::size_t c = 0; c < p.returns.size(); ++c) {
        const double w = p.probs[c] / (1.0 + dot(pi, p.returns[c]));
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += w * p.returns[c][i];
    }
    return g;
}

double frank_wolfe_gap(const Vec& grad, const Vec& pi) {
    double best_vertex = 0.0;
    for (double g : grad) best_vertex = std::max(best_vertex, g);
    return std::max(0.0, best_vertex - dot(grad, pi));
}

}  // namespace

void NodeProblem::validate(double prob_tol) const {
    if (returns.empty() || returns.size() != probs.size())
        throw std::invalid_argument("NodeProblem: need one probability per child and at least one child");
    double sum = 0.0;
    for (std::size_t c = 0; c < probs.size(); ++c) {
        if (!(probs[c] > 0.0)) throw std::invalid_argument("NodeProblem: probabilities must be positive");
        sum += probs[c];
        if (returns[c].size() != assets()) throw std::invalid_argument("NodeProblem: ragged return vectors");
        for (double r : returns[c]) {
            if (!(r >= -1.0) || !std::isfinite(r)) throw std::invalid_argument("NodeProblem: returns must be finite and >= -1");
        }
    }
    if (std::abs(sum - 1.0) > prob_tol) throw std::invalid_argument("NodeProblem: probabilities do not sum to 1");
}

double log_growth(const NodeProblem& p, const Vec& pi) {
    double v = 0.0;
    for (std::size_t c = 0; c < p.returns.size(); ++c) {
        const double g = 1.0 + dot(pi, p.returns[c]);
        if (!(g > 0.0)) return -std::numeric_limits<double>::infinity();
        v += p.probs[c] * std::log(g);
    }
    return v;
}

Vec project_to_simplex(const Vec& x) {
    Vec y(x.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = std::max(x[i], 0.0);
        sum += y[i];
    }
    if (sum <= 1.0) return y;
    // Projection onto {x >= 0, sum x = 1}.
    Vec u = x;
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumulative += u[j];
        const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) theta = t;
    }
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::max(x[i] - theta, 0.0);
    return y;
}

namespace {

// Newton steps on the free coordinates (with the budget row when it binds).
// Accepted only while the gap shrinks; used once line search stalls.
void polish(const NodeProblem& p, Vec& pi, Vec& g, double& gap, double target) {
    const std::size_t d = pi.size();
    for (int it = 0; it < 50 && gap > target; ++it) {
        std::vector<std::size_t> free;
        double sum = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            sum += pi[i];
            if (pi[i] > 0.0) free.push_back(i);
        }
        if (free.empty()) return;
        const bool budget = sum >= 1.0 - 1e-14;
        const auto m = static_cast<Eigen::Index>(free.size());
        const Eigen::Index n = m + (budget ? 1 : 0);
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        for (std::size_t c = 0; c < p.returns.size(); ++c) {
            const double w = 1.0 + dot(pi, p.returns[c]);
            const double h = p.probs[c] / (w * w);
            for (Eigen::Index a = 0; a < m; ++a)
                for (Eigen::Index b = 0; b < m; ++b) K(a, b) -= h * p.returns[c][free[a]] * p.returns[c][free[b]];
        }
        for (Eigen::Index a = 0; a < m; ++a) {
            rhs(a) = -g[free[a]];
            if (budget) K(a, m) = K(m, a) = 1.0;
        }
        const Eigen::VectorXd step = K.fullPivLu().solve(rhs);
        if (!step.allFinite()) return;
        Vec next = pi;
        for (Eigen::Index a = 0; a < m; ++a) next[free[a]] += step(a);
        next = project_to_simplex(next);
        if (!std::isfinite(log_growth(p, next))) return;
        Vec g_next = gradient(p, next);
        const double gap_next = frank_wolfe_gap(g_next, next);
        if (!(gap_next < gap)) return;
        pi = std::move(next);
        g = std::move(g_next);
        gap = gap_next;
    }
}

}  // namespace

NodeSolution solve_node(const NodeProblem& problem, const SolverOptions& options) {
    problem.validate();
    const std::size_t d = problem.assets();
    // Iterate well past `tol`: the deflator 1/X built from these proportions is
    // checked at tolerances comparable to `tol`, and the gap propagates into
    // that check scaled by wealth. If rounding stalls the line search first,
    // convergence is still judged against `tol`.
    const double target = 1e-3 * options.tol;

    NodeSolution sol;
    Vec pi(d, 0.0);
    double f = log_growth(problem, pi);
    Vec g = gradient(problem, pi);
    double gap = frank_wolfe_gap(g, pi);
    double step = 1.0;

    int it = 0;
    while (gap > target && it < options.max_iterations) {
        ++it;
        Vec next;
        double f_next = -std::numeric_limits<double>::infinity();
        double trial = step;
        bool accepted = false;
        while (trial >= kMinStep) {
            Vec x(d);
            for (std::size_t i = 0; i < d; ++i) x[i] = pi[i] + trial * g[i];
            next = project_to_simplex(x);
            f_next = log_growth(problem, next);
            Vec s(d);
            for (std::size_t i = 0; i < d; ++i) s[i] = next[i] - pi[i];
            if (std::isfinite(f_next) && f_next >= f + kArmijo * dot(g, s)) {
                accepted = true;
                break;
            }
            trial *= 0.5;
        }
        if (!accepted) break;

        Vec g_next = gradient(problem, next);
        double ss = 0.0;
        double sy = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double s = next[i] - pi[i];
            ss += s * s;
            sy -= s * (g_next[i] - g[i]);
        }
        if (ss == 0.0) {
            pi = std::move(next);
            g = std::move(g_next);
            f = f_next;
            gap = frank_wolfe_gap(g, pi);
            break;
        }
        step = sy > 0.0 ? std::clamp(ss / sy, kMinStep, kMaxStep) : std::min(2.0 * trial, kMaxStep);
        pi = std::move(next);
        g = std::move(g_next);
        f = f_next;
        gap = frank_wolfe_gap(g, pi);
    }

    if (gap > target) {
        polish(problem, pi, g, gap, target);
        f = log_growth(problem, pi);
    }

    sol.rho = std::move(pi);
    sol.value = f;
    sol.kkt_residual = gap;
    sol.iterations = it;
    sol.converged = gap <= options.tol;
    return sol;
}

NumeraireCheck verify_numeraire(const NodeProblem& problem, const Vec& rho, double tol) {
    problem.validate();
    const std::size_t d = problem.assets();
    NumeraireCheck out;
    out.vertex_values.assign(d + 1, 0.0);
    for (std::size_t c = 0; c < problem.returns.size(); ++c) {
        const auto& R = problem.returns[c];
        const double denom = 1.0 + dot(rho, R);
        if (!(denom > 0.0)) {
            out.structural_failure = true;
            out.worst_excess = std::numeric_limits<double>::infinity();
            return out;
        }
        out.vertex_values[0] += problem.probs[c] / denom;
        for (std::size_t i = 0; i < d; ++i) out.vertex_values[i + 1] += problem.probs[c] * (1.0 + R[i]) / denom;
    }
    out.worst_excess = -std::numeric_limits<double>::infinity();
    for (double v : out.vertex_values) out.worst_excess = std::max(out.worst_excess, v - 1.0);
    out.ok = out.worst_excess <= tol;
    return out;
}

Deflator Deflator::from_values(std::vector<double> values) {
    if (values.empty() || values.front() != 1.0) throw std::invalid_argument("Deflator: root value must be 1");
    for (double y : values) {
        if (!(y > 0.0) || !std::isfinite(y)) throw std::invalid_argument("Deflator: values must be finite and positive");
    }
    return Deflator{std::move(values)};
}

namespace {

std::string describe(const std::string& node, const NodeSolution& s) {
    return "numeraire solver did not converge at node '" + node + "' (residual " + std::to_string(s.kkt_residual) +
           " after " + std::to_string(s.iterations) + " iterations)";
}

}  // namespace

NumeraireError::NumeraireError(const std::string& node, const NodeSolution& best)
    : std::runtime_error(describe(node, best)), node_(node), best_(best) {}

NodeProblem node_problem(const ScenarioTree& tree, const ReturnsProcess& returns, NodeIndex n) {
    NodeProblem p;
    for (const auto& c : tree.node(n).children) {
        p.returns.push_back(returns.returns[c.node]);
        p.probs.push_back(c.prob);
    }
    return p;
}

NumerairePortfolio numeraire_portfolio(const ScenarioTree& tree, const SolverOptions& options) {
    if (auto r = find_revivals(tree); !r.empty())
        throw RevivalError("numeraire_portfolio: asset " + std::to_string(r.front().asset + 1) + " revives after node '" +
                           tree.node(r.front().node).id + "'");
    const auto R = returns_process(tree);
    NumerairePortfolio out;
    out.rho = ProportionProcess::zero(tree);
    out.solutions.resize(tree.size());
    out.problems.resize(tree.size());
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (tree.node(n).is_leaf()) continue;
        out.problems[n] = node_problem(tree, R, n);
        auto sol = solve_node(out.problems[n], options);
        if (!sol.converged) throw NumeraireError(tree.node(n).id, sol);
        out.rho.weights[n] = sol.rho;
        out.solutions[n] = std::move(sol);
    }
    out.wealth = wealth_from_proportions(tree, out.rho);
    std::vector<double> y(tree.size());
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (!(out.wealth.values[n] > 0.0))
            throw std::logic_error("numeraire wealth is not strictly positive at node '" + tree.node(n).id + "'");
        y[n] = 1.0 / out.wealth.values[n];
    }
    out.deflator = Deflator::from_values(std::move(y));
    return out;
}

DeflationReport verify_deflation(const ScenarioTree& tree, std::span<const double> deflator,
                                 std::span<const double> wealth, double tol, DeflationScope scope) {
    if (deflator.size() != tree.size() || wealth.size() != tree.size())
        throw std::invalid_argument("verify_deflation: process sizes do not match the tree");
    DeflationReport report;
    std::vector<double> yx(tree.size());
    for (NodeIndex n = 0; n < tree.size(); ++n) yx[n] = deflator[n] * wealth[n];

    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto& node = tree.node(n);
        if (node.is_leaf()) continue;
        const double bound = yx[n] + tol * std::max(1.0, std::abs(yx[n]));
        // Conditional distribution over the current layer of descendants.
        std::vector<std::pair<NodeIndex, double>> layer{{n, 1.0}};
        while (true) {
            std::vector<std::pair<NodeIndex, double>> next;
            for (auto [m, q] : layer) {
                for (const auto& c : tree.node(m).children) next.emplace_back(c.node, q * c.prob);
            }
            if (next.empty()) break;
            double expectation = 0.0;
            for (auto [m, q] : next) expectation += q * yx[m];
            ++report.checks;
            if (expectation > bound)
                report.violations.push_back({n, tree.node(next.front().first).time, expectation - yx[n]});
            if (scope == DeflationScope::OneStep) break;
            layer = std::move(next);
        }
    }
    return report;
}

}  // namespace na1lab
