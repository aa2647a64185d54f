#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "na1lab/grid_time.hpp"

namespace na1lab {

using NodeIndex = std::size_t;
using Vec = std::vector<double>;

inline constexpr double kDefaultProbabilityTolerance = 1e-12;

/// Unvalidated tree description, as read from a file or assembled by hand.
struct ChildSpec {
    std::string id;
    double prob = 0.0;
};

struct NodeSpec {
    std::string id;
    GridTime time;
    Vec prices;
    std::vector<ChildSpec> children;
};

struct TreeSpec {
    std::size_t d = 1;
    GridTime horizon;
    std::string root;
    std::vector<NodeSpec> nodes;
};

enum class Rule {
    DimensionMismatch,
    NonFinitePrice,
    NegativePrice,
    NonPositiveProbability,
    ProbabilitySum,
    DuplicateId,
    UnknownChild,
    MultipleParents,
    MissingRoot,
    RootTime,
    Unreachable,
    TimeOrder,
    OffGrid,
    RaggedHorizon,
};

const char* rule_name(Rule rule);

struct Violation {
    std::string node;
    Rule rule;
    std::string detail;

    std::string to_string() const;
};

/// Every violated tree invariant; empty iff the description is a valid tree.
std::vector<Violation> validate_tree(const TreeSpec& spec,
                                     double probability_tolerance = kDefaultProbabilityTolerance);

/// Drops children with probability exactly zero together with their subtrees.
TreeSpec prune_zero_probability(TreeSpec spec);

class InvalidTree : public std::runtime_error {
public:
    explicit InvalidTree(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const { return violations_; }

private:
    std::vector<Violation> violations_;
};

/// A validated finite filtered probability space with nonnegative prices.
///
/// Nodes are stored in breadth-first order with the root at index 0, so every
/// parent precedes its children. Immutable after construction.
class ScenarioTree {
public:
    struct Child {
        NodeIndex node;
        double prob;
    };

    struct Node {
        std::string id;
        GridTime time;
        Vec prices;
        std::optional<NodeIndex> parent;
        std::vector<Child> children;
        std::size_t depth = 0;
        double path_prob = 1.0;

        bool is_leaf() const { return children.empty(); }
    };

    /// Throws InvalidTree when `validate_tree` reports anything.
    static ScenarioTree build(const TreeSpec& spec,
                              double probability_tolerance = kDefaultProbabilityTolerance);

    std::size_t assets() const { return d_; }
    std::size_t size() const { return nodes_.size(); }
    GridTime horizon() const { return horizon_; }
    static constexpr NodeIndex root() { return 0; }

    const Node& node(NodeIndex i) const { return nodes_.at(i); }
    std::span<const Node> nodes() const { return nodes_; }
    double price(NodeIndex i, std::size_t asset) const { return nodes_[i].prices[asset]; }

    std::optional<NodeIndex> find(const std::string& id) const;
    NodeIndex index_of(const std::string& id) const;

    const std::vector<NodeIndex>& leaves() const { return leaves_; }
    /// Root-to-leaf node sequence.
    std::vector<NodeIndex> path_to(NodeIndex leaf) const;
    /// Leaves in the subtree rooted at `n` (including `n` itself if it is a leaf).
    std::vector<NodeIndex> leaves_below(NodeIndex n) const;
    /// Distinct node times in increasing order.
    std::vector<GridTime> times() const;

    /// Round-trips through `build`.
    TreeSpec spec() const;

    friend bool operator==(const ScenarioTree& a, const ScenarioTree& b);

private:
    std::size_t d_ = 0;
    GridTime horizon_;
    std::vector<Node> nodes_;
    std::vector<NodeIndex> leaves_;
    std::unordered_map<std::string, NodeIndex> index_;
};

/// Translates every price by +c. Throws std::invalid_argument if c < 0 or a
/// translated price is negative.
TreeSpec shift_prices(const TreeSpec& spec, double c);
ScenarioTree shift_prices(const ScenarioTree& tree, double c);

/// The same filtration observed on the finer grid of resolution `k`: after
/// each node, single pass-through nodes holding its prices fill every
/// intermediate grid time until its children are due, so nothing is learned
/// earlier than in the original tree. Original ids are preserved; inserted
/// nodes are named "<parent>@<m>/2^<k>".
ScenarioTree embed_on_grid(const ScenarioTree& tree, int k);

/// Recombination-free binomial tree with constant one-step gross factors.
/// Node at depth j sits at time j * step, where step is a grid time.
ScenarioTree binomial_tree(std::size_t periods, double s0, double up_factor, double down_factor,
                           double up_prob, GridTime step);

}  // namespace na1lab
