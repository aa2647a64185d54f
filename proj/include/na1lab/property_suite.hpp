#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "na1lab/random_tree.hpp"
#include "na1lab/viability.hpp"

namespace na1lab {

struct PropertySuiteOptions {
    std::size_t trees = 1000;
    std::uint64_t seed = 20240601;
    RandomTreeOptions generator;
    ViabilityOptions viability;
    double numeraire_tol = 1e-8;
    double deflation_tol = 1e-9;
    std::size_t random_proportions = 1000;
    std::size_t random_holdings = 50;
    double roundtrip_rel_tol = 1e-12;
};

/// Counts per property; every failure count must be zero for a pass.
struct PropertySuiteReport {
    std::size_t trees = 0;
    std::size_t holds = 0;
    std::size_t fails = 0;
    std::size_t route_disagreements = 0;
    std::size_t numeraire_failures = 0;
    std::size_t deflation_failures = 0;
    std::size_t witness_failures = 0;
    std::size_t roundtrip_failures = 0;
    std::size_t deflation_checks = 0;
    std::vector<std::string> messages;
    double seconds = 0.0;

    std::size_t failures() const {
        return route_disagreements + numeraire_failures + deflation_failures + witness_failures + roundtrip_failures;
    }
    bool passed() const { return failures() == 0; }
};

/// Route agreement, numeraire and deflation certification, witness replay,
/// and the stochastic-logarithm round trip over seeded random trees.
PropertySuiteReport run_property_suite(const PropertySuiteOptions& options);

}  // namespace na1lab
