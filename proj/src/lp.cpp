#include "na1lab/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace na1lab::lp {

const char* status_name(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
        case Status::IterationLimit: return "iteration-limit";
    }
    return "unknown";
}

namespace {

class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_((rows + 1) * (cols + 1), 0.0) {}

    double& at(std::size_t r, std::size_t c) { return a_[r * (cols_ + 1) + c]; }
    double& rhs(std::size_t r) { return at(r, cols_); }
    // Row `rows_` holds the objective: reduced costs, stored as -c for maximization.
    double& cost(std::size_t c) { return at(rows_, c); }

    void pivot(std::size_t pr, std::size_t pc) {
        const double p = at(pr, pc);
        for (std::size_t c = 0; c <= cols_; ++c) at(pr, c) /= p;
        for (std::size_t r = 0; r <= rows_; ++r) {
            if (r == pr) continue;
            const double f = at(r, pc);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
            at(r, pc) = 0.0;
        }
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> a_;
};

// Runs simplex iterations on columns [0, active_cols). Returns Optimal,
// Unbounded or IterationLimit.
Status iterate(Tableau& t, std::vector<std::size_t>& basis, std::size_t active_cols, const Options& opt,
               std::size_t& pivots) {
    while (true) {
        std::size_t enter = active_cols;
        for (std::size_t c = 0; c < active_cols; ++c) {
            if (t.cost(c) < -opt.pivot_tol) {
                enter = c;
                break;
            }
        }
        if (enter == active_cols) return Status::Optimal;

        std::size_t leave = t.rows();
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < t.rows(); ++r) {
            const double a = t.at(r, enter);
            if (a <= opt.pivot_tol) continue;
            const double ratio = t.rhs(r) / a;
            if (ratio < best - 1e-15 || (std::abs(ratio - best) <= 1e-15 && basis[r] < basis[leave])) {
                best = ratio;
                leave = r;
            }
        }
        if (leave == t.rows()) return Status::Unbounded;
        if (++pivots > opt.max_pivots) return Status::IterationLimit;
        t.pivot(leave, enter);
        basis[leave] = enter;
    }
}

}  // namespace

Result solve(const Problem& problem, const Options& opt) {
    const std::size_t n = problem.variables;
    const std::size_t m = problem.constraints.size();
    if (problem.objective.size() != n) throw std::invalid_argument("lp::solve: objective size mismatch");

    // Columns: [structural | slack/surplus per inequality | artificial per row needing one].
    std::size_t slack_count = 0;
    std::size_t art_count = 0;
    std::vector<double> sign(m, 1.0);
    for (std::size_t r = 0; r < m; ++r) {
        const auto& row = problem.constraints[r];
        if (row.rhs < 0.0) sign[r] = -1.0;
        Sense s = row.sense;
        if (sign[r] < 0.0 && s != Sense::Equal) s = (s == Sense::LessEqual) ? Sense::GreaterEqual : Sense::LessEqual;
        if (s != Sense::Equal) ++slack_count;
        if (s != Sense::LessEqual) ++art_count;
    }
    const std::size_t art_begin = n + slack_count;
    const std::size_t cols = art_begin + art_count;

    Tableau t(m, cols);
    std::vector<std::size_t> basis(m + 1, cols);
    std::size_t next_slack = n;
    std::size_t next_art = art_begin;
    for (std::size_t r = 0; r < m; ++r) {
        const auto& row = problem.constraints[r];
        for (auto [j, v] : row.terms) {
            if (j >= n) throw std::invalid_argument("lp::solve: variable index out of range");
            t.at(r, j) += sign[r] * v;
        }
        t.rhs(r) = sign[r] * row.rhs;
        Sense s = row.sense;
        if (sign[r] < 0.0 && s != Sense::Equal) s = (s == Sense::LessEqual) ? Sense::GreaterEqual : Sense::LessEqual;
        if (s == Sense::LessEqual) {
            t.at(r, next_slack) = 1.0;
            basis[r] = next_slack++;
        } else {
            if (s == Sense::GreaterEqual) t.at(r, next_slack++) = -1.0;
            t.at(r, next_art) = 1.0;
            basis[r] = next_art++;
        }
    }

    Result result;
    // Phase 1: maximize -sum(artificials).
    if (art_count > 0) {
        for (std::size_t c = art_begin; c < cols; ++c) t.cost(c) = 1.0;
        for (std::size_t r = 0; r < m; ++r) {
            if (basis[r] < art_begin) continue;
            for (std::size_t c = 0; c <= cols; ++c) t.cost(c) -= t.at(r, c);
        }
        const Status s1 = iterate(t, basis, cols, opt, result.pivots);
        if (s1 == Status::IterationLimit) {
            result.status = s1;
            return result;
        }
        if (t.at(m, cols) < -opt.feasibility_tol) {
            result.status = Status::Infeasible;
            return result;
        }
        // Drive zero-level artificials out of the basis where possible.
        for (std::size_t r = 0; r < m; ++r) {
            if (basis[r] < art_begin) continue;
            for (std::size_t c = 0; c < art_begin; ++c) {
                if (std::abs(t.at(r, c)) > opt.pivot_tol) {
                    t.pivot(r, c);
                    basis[r] = c;
                    break;
                }
            }
        }
    }

    // Phase 2 on the non-artificial columns.
    for (std::size_t c = 0; c <= cols; ++c) t.cost(c) = 0.0;
    for (std::size_t j = 0; j < n; ++j) t.cost(j) = -problem.objective[j];
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t b = basis[r];
        if (b >= art_begin) continue;
        const double f = t.cost(b);
        if (f == 0.0) continue;
        for (std::size_t c = 0; c <= cols; ++c) t.cost(c) -= f * t.at(r, c);
    }
    const Status s2 = iterate(t, basis, art_begin, opt, result.pivots);
    result.status = s2;
    if (s2 != Status::Optimal) return result;

    result.x.assign(n, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        if (basis[r] < n) result.x[basis[r]] = t.rhs(r);
    }
    result.objective = 0.0;
    for (std::size_t j = 0; j < n; ++j) result.objective += problem.objective[j] * result.x[j];
    return result;
}

}  // namespace na1lab::lp
