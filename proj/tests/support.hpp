#pragma once

#include <string>
#include <vector>

#include "na1lab/scenario_tree.hpp"
#include "na1lab/tree_io.hpp"

namespace na1lab::testing {

inline std::string fixture(const std::string& name) { return std::string(NA1LAB_FIXTURES) + "/" + name; }

inline ScenarioTree load_fixture(const std::string& name) { return load_tree(fixture(name)); }

// Single-asset chain with prices s[0] -> s[1] -> ..., one node per half unit.
inline ScenarioTree chain(const std::vector<double>& s) {
    TreeSpec spec;
    spec.d = 1;
    const int res = std::max<int>(1, static_cast<int>(s.size()) / 2);
    const auto at = [res](std::size_t j) { return GridTime(static_cast<std::int64_t>(j) << (res - 1), res); };
    spec.horizon = at(s.size() - 1);
    spec.root = "c0";
    for (std::size_t j = 0; j < s.size(); ++j) {
        NodeSpec n{"c" + std::to_string(j), at(j), {s[j]}, {}};
        if (j + 1 < s.size()) n.children.push_back({"c" + std::to_string(j + 1), 1.0});
        spec.nodes.push_back(n);
    }
    return ScenarioTree::build(spec);
}

}  // namespace na1lab::testing
