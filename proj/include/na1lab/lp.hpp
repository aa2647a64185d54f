#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace na1lab::lp {

enum class Sense { LessEqual, Equal, GreaterEqual };
enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

const char* status_name(Status s);

struct Constraint {
    std::vector<std::pair<std::size_t, double>> terms;  // (variable, coefficient)
    Sense sense = Sense::LessEqual;
    double rhs = 0.0;
};

/// maximize c.x subject to the constraints and x >= 0.
struct Problem {
    std::size_t variables = 0;
    std::vector<double> objective;
    std::vector<Constraint> constraints;
};

struct Result {
    Status status = Status::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
    std::size_t pivots = 0;
};

struct Options {
    double pivot_tol = 1e-11;
    double feasibility_tol = 1e-9;
    std::size_t max_pivots = 200000;
};

/// Dense two-phase tableau simplex with Bland's rule (no cycling).
Result solve(const Problem& problem, const Options& options = {});

}  // namespace na1lab::lp
