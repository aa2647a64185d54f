#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "na1lab/scenario_tree.hpp"

namespace na1lab {

/// Malformed tree document. `what()` names the offending line/field or node.
class TreeParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read, or written.
class TreeIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tree documents are JSON:
//   { "d": 1, "horizon": {"m": 2, "k": 1}, "root": "r",
//     "nodes": [ {"id": "r", "time": {"m": 0, "k": 0}, "prices": ["1"],
//                 "children": [{"id": "u", "prob": "0.5"}, ...]}, ... ] }
// Prices and probabilities are decimal strings (plain JSON numbers are also
// accepted on input). Output uses the shortest decimal that round-trips.

TreeSpec parse_tree_spec(const std::string& text);
std::string format_tree_spec(const TreeSpec& spec);

/// Parses, prunes zero-probability branches, and validates.
/// Throws TreeIoError, TreeParseError or InvalidTree.
ScenarioTree load_tree(const std::filesystem::path& path,
                       double probability_tolerance = kDefaultProbabilityTolerance);
void save_tree(const ScenarioTree& tree, const std::filesystem::path& path);

/// Parses a decimal string to the nearest double; throws std::invalid_argument.
double parse_decimal(const std::string& text);
/// Shortest decimal representation that parses back to the same double.
std::string format_decimal(double value);

}  // namespace na1lab
