#include "na1lab/scenario_tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

namespace na1lab {

const char* rule_name(Rule rule) {
    switch (rule) {
        case Rule::DimensionMismatch: return "dimension-mismatch";
        case Rule::NonFinitePrice: return "non-finite-price";
        case Rule::NegativePrice: return "negative-price";
        case Rule::NonPositiveProbability: return "non-positive-probability";
        case Rule::ProbabilitySum: return "probability-sum";
        case Rule::DuplicateId: return "duplicate-id";
        case Rule::UnknownChild: return "unknown-child";
        case Rule::MultipleParents: return "multiple-parents";
        case Rule::MissingRoot: return "missing-root";
        case Rule::RootTime: return "root-time";
        case Rule::Unreachable: return "unreachable";
        case Rule::TimeOrder: return "time-order";
        case Rule::OffGrid: return "off-grid";
        case Rule::RaggedHorizon: return "ragged-horizon";
    }
    return "unknown";
}

std::string Violation::to_string() const {
    return "node '" + node + "': " + rule_name(rule) + ": " + detail;
}

namespace {

std::string join_violations(const std::vector<Violation>& v) {
    std::ostringstream os;
    os << "invalid scenario tree (" << v.size() << " violation" << (v.size() == 1 ? "" : "s") << ")";
    for (const auto& x : v) os << "\n  " << x.to_string();
    return os.str();
}

}  // namespace

InvalidTree::InvalidTree(std::vector<Violation> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations)) {}

std::vector<Violation> validate_tree(const TreeSpec& spec, double probability_tolerance) {
    std::vector<Violation> out;
    auto flag = [&](const std::string& node, Rule rule, std::string detail) {
        out.push_back({node, rule, std::move(detail)});
    };

    if (spec.d == 0) flag("<tree>", Rule::DimensionMismatch, "asset count must be positive");
    if (!spec.horizon.on_own_grid())
        flag("<tree>", Rule::OffGrid, "horizon " + spec.horizon.to_string() + " is not a grid time");

    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
        if (!by_id.emplace(spec.nodes[i].id, i).second)
            flag(spec.nodes[i].id, Rule::DuplicateId, "identifier used more than once");
    }

    std::unordered_map<std::string, std::size_t> parent_count;
    for (const auto& n : spec.nodes) {
        if (n.prices.size() != spec.d) {
            flag(n.id, Rule::DimensionMismatch,
                 "expected " + std::to_string(spec.d) + " prices, got " + std::to_string(n.prices.size()));
        }
        for (std::size_t i = 0; i < n.prices.size(); ++i) {
            const double s = n.prices[i];
            if (!std::isfinite(s))
                flag(n.id, Rule::NonFinitePrice, "price of asset " + std::to_string(i + 1) + " is not finite");
            else if (s < 0.0)
                flag(n.id, Rule::NegativePrice,
                     "price of asset " + std::to_string(i + 1) + " is " + std::to_string(s));
        }
        if (!n.time.on_own_grid())
            flag(n.id, Rule::OffGrid, "time " + n.time.to_string() + " is not a grid time");

        double sum = 0.0;
        for (const auto& c : n.children) {
            if (!(c.prob > 0.0) || !std::isfinite(c.prob))
                flag(n.id, Rule::NonPositiveProbability,
                     "transition to '" + c.id + "' has probability " + std::to_string(c.prob));
            sum += c.prob;
            auto it = by_id.find(c.id);
            if (it == by_id.end()) {
                flag(n.id, Rule::UnknownChild, "child '" + c.id + "' does not exist");
                continue;
            }
            if (++parent_count[c.id] == 2)
                flag(c.id, Rule::MultipleParents, "node has more than one parent");
            const auto& child = spec.nodes[it->second];
            if (!(n.time < child.time))
                flag(child.id, Rule::TimeOrder,
                     "time " + child.time.to_string() + " does not exceed parent time " + n.time.to_string());
        }
        if (!n.children.empty() && std::abs(sum - 1.0) > probability_tolerance) {
            std::ostringstream os;
            os.precision(17);
            os << "transition probabilities sum to " << sum;
            flag(n.id, Rule::ProbabilitySum, os.str());
        }
        if (n.children.empty() && !(n.time == spec.horizon))
            flag(n.id, Rule::RaggedHorizon,
                 "leaf at time " + n.time.to_string() + " but horizon is " + spec.horizon.to_string());
    }

    auto root = by_id.find(spec.root);
    if (root == by_id.end()) {
        flag(spec.root, Rule::MissingRoot, "root identifier not found");
        return out;
    }
    const auto& root_node = spec.nodes[root->second];
    if (!(root_node.time == GridTime(0, 0)))
        flag(root_node.id, Rule::RootTime, "root time is " + root_node.time.to_string() + ", expected 0");
    if (parent_count.count(root_node.id) != 0)
        flag(root_node.id, Rule::MultipleParents, "root is listed as a child");

    std::vector<char> seen(spec.nodes.size(), 0);
    std::deque<std::size_t> queue{root->second};
    seen[root->second] = 1;
    while (!queue.empty()) {
        const auto i = queue.front();
        queue.pop_front();
        for (const auto& c : spec.nodes[i].children) {
            auto it = by_id.find(c.id);
            if (it == by_id.end() || seen[it->second]) continue;
            seen[it->second] = 1;
            queue.push_back(it->second);
        }
    }
    for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
        if (!seen[i]) flag(spec.nodes[i].id, Rule::Unreachable, "not reachable from the root");
    }
    return out;
}

TreeSpec prune_zero_probability(TreeSpec spec) {
    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < spec.nodes.size(); ++i) by_id.emplace(spec.nodes[i].id, i);

    std::unordered_set<std::string> dropped;
    std::vector<std::string> stack;
    for (auto& n : spec.nodes) {
        for (const auto& c : n.children) {
            if (c.prob == 0.0) stack.push_back(c.id);
        }
        std::erase_if(n.children, [](const ChildSpec& c) { return c.prob == 0.0; });
    }
    while (!stack.empty()) {
        auto id = std::move(stack.back());
        stack.pop_back();
        if (!dropped.insert(id).second) continue;
        auto it = by_id.find(id);
        if (it == by_id.end()) continue;
        for (const auto& c : spec.nodes[it->second].children) stack.push_back(c.id);
    }
    std::erase_if(spec.nodes, [&](const NodeSpec& n) { return dropped.count(n.id) != 0; });
    return spec;
}

ScenarioTree ScenarioTree::build(const TreeSpec& spec, double probability_tolerance) {
    if (auto v = validate_tree(spec, probability_tolerance); !v.empty()) throw InvalidTree(std::move(v));

    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < spec.nodes.size(); ++i) by_id.emplace(spec.nodes[i].id, i);

    ScenarioTree tree;
    tree.d_ = spec.d;
    tree.horizon_ = spec.horizon;
    tree.nodes_.reserve(spec.nodes.size());

    std::deque<std::pair<std::size_t, std::optional<NodeIndex>>> queue{{by_id.at(spec.root), std::nullopt}};
    while (!queue.empty()) {
        auto [src, parent] = queue.front();
        queue.pop_front();
        const NodeIndex self = tree.nodes_.size();
        const auto& s = spec.nodes[src];
        Node node{s.id, s.time, s.prices, parent, {}, 0, 1.0};
        if (parent) {
            auto& p = tree.nodes_[*parent];
            node.depth = p.depth + 1;
            for (auto& c : p.children) {
                if (c.node == self) node.path_prob = p.path_prob * c.prob;
            }
        }
        tree.nodes_.push_back(std::move(node));
        tree.index_.emplace(s.id, self);
        for (const auto& c : s.children) {
            const NodeIndex child = self + queue.size() + 1;
            tree.nodes_[self].children.push_back({child, c.prob});
            queue.emplace_back(by_id.at(c.id), self);
        }
    }
    for (NodeIndex i = 0; i < tree.nodes_.size(); ++i) {
        if (tree.nodes_[i].is_leaf()) tree.leaves_.push_back(i);
    }
    return tree;
}

std::optional<NodeIndex> ScenarioTree::find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

NodeIndex ScenarioTree::index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw std::out_of_range("no node with id '" + id + "'");
    return it->second;
}

std::vector<NodeIndex> ScenarioTree::path_to(NodeIndex leaf) const {
    std::vector<NodeIndex> path;
    for (std::optional<NodeIndex> n = leaf; n; n = nodes_.at(*n).parent) path.push_back(*n);
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<NodeIndex> ScenarioTree::leaves_below(NodeIndex n) const {
    std::vector<NodeIndex> out;
    std::vector<NodeIndex> stack{n};
    while (!stack.empty()) {
        const auto i = stack.back();
        stack.pop_back();
        if (nodes_[i].is_leaf()) {
            out.push_back(i);
            continue;
        }
        for (auto it = nodes_[i].children.rbegin(); it != nodes_[i].children.rend(); ++it)
            stack.push_back(it->node);
    }
    return out;
}

std::vector<GridTime> ScenarioTree::times() const {
    std::set<GridTime> ts;
    for (const auto& n : nodes_) ts.insert(n.time);
    return {ts.begin(), ts.end()};
}

TreeSpec ScenarioTree::spec() const {
    TreeSpec s;
    s.d = d_;
    s.horizon = horizon_;
    s.root = nodes_.front().id;
    s.nodes.reserve(nodes_.size());
    for (const auto& n : nodes_) {
        NodeSpec ns{n.id, n.time, n.prices, {}};
        for (const auto& c : n.children) ns.children.push_back({nodes_[c.node].id, c.prob});
        s.nodes.push_back(std::move(ns));
    }
    return s;
}

bool operator==(const ScenarioTree& a, const ScenarioTree& b) {
    if (a.d_ != b.d_ || !(a.horizon_ == b.horizon_) || a.nodes_.size() != b.nodes_.size()) return false;
    for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
        const auto& x = a.nodes_[i];
        const auto& y = b.nodes_[i];
        if (x.id != y.id || !(x.time == y.time) || x.prices != y.prices || x.parent != y.parent ||
            x.children.size() != y.children.size())
            return false;
        for (std::size_t c = 0; c < x.children.size(); ++c) {
            if (x.children[c].node != y.children[c].node || x.children[c].prob != y.children[c].prob)
                return false;
        }
    }
    return true;
}

TreeSpec shift_prices(const TreeSpec& spec, double c) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("shift_prices: shift must be finite and >= 0");
    TreeSpec out = spec;
    for (auto& n : out.nodes) {
        for (auto& s : n.prices) {
            s += c;
            if (s < 0.0)
                throw std::invalid_argument("shift_prices: node '" + n.id + "' still has a negative price after shift");
        }
    }
    return out;
}

ScenarioTree shift_prices(const ScenarioTree& tree, double c) { return ScenarioTree::build(shift_prices(tree.spec(), c)); }

ScenarioTree embed_on_grid(const ScenarioTree& tree, int k) {
    if (!tree.horizon().at_resolution(k).on_own_grid())
        throw std::invalid_argument("embed_on_grid: horizon is not on the target grid");
    for (const auto& n : tree.nodes()) {
        if (n.time.resolution() > k) throw std::invalid_argument("embed_on_grid: node '" + n.id + "' is finer than the target grid");
    }
    TreeSpec src = tree.spec();
    TreeSpec out{src.d, src.horizon, src.root, {}};
    for (const auto& n : tree.nodes()) {
        // Children are released at their own grid times; until then the path
        // stays in a pass-through node carrying the parent's prices, so no
        // information arrives earlier than in the coarse tree.
        std::map<std::int64_t, std::vector<const ScenarioTree::Child*>> by_time;
        for (const auto& c : n.children) by_time[tree.node(c.node).time.at_resolution(k).numerator()].push_back(&c);
        std::vector<NodeSpec> chain{{n.id, n.time, n.prices, {}}};
        double remaining = 1.0;
        std::int64_t m = n.time.at_resolution(k).numerator();
        for (auto it = by_time.begin(); it != by_time.end(); ++it) {
            for (; m + 1 < it->first; ++m) {
                const std::string id = n.id + "@" + std::to_string(m + 1) + "/2^" + std::to_string(k);
                chain.back().children.push_back({id, 1.0});
                chain.push_back({id, GridTime(m + 1, k), n.prices, {}});
            }
            double released = 0.0;
            for (const auto* c : it->second) {
                chain.back().children.push_back({tree.node(c->node).id, c->prob / remaining});
                released += c->prob;
            }
            if (std::next(it) == by_time.end()) break;
            const std::string id = n.id + "@" + std::to_string(m + 1) + "/2^" + std::to_string(k);
            chain.back().children.push_back({id, (remaining - released) / remaining});
            chain.push_back({id, GridTime(m + 1, k), n.prices, {}});
            remaining -= released;
            ++m;
        }
        for (auto& x : chain) out.nodes.push_back(std::move(x));
    }
    return ScenarioTree::build(out);
}

ScenarioTree binomial_tree(std::size_t periods, double s0, double up_factor, double down_factor, double up_prob,
                           GridTime step) {
    if (!(up_prob > 0.0 && up_prob < 1.0)) throw std::invalid_argument("binomial_tree: up probability must be in (0, 1)");
    const int k = step.resolution();
    const std::int64_t dm = step.numerator();
    TreeSpec spec;
    spec.d = 1;
    spec.horizon = GridTime(dm * static_cast<std::int64_t>(periods), k);
    spec.root = "n";
    std::vector<std::pair<std::string, double>> level{{"n", s0}};
    for (std::size_t j = 0; j <= periods; ++j) {
        std::vector<std::pair<std::string, double>> next;
        for (auto& [id, s] : level) {
            NodeSpec n{id, GridTime(dm * static_cast<std::int64_t>(j), k), {s}, {}};
            if (j < periods) {
                n.children.push_back({id + "u", up_prob});
                n.children.push_back({id + "d", 1.0 - up_prob});
                next.emplace_back(id + "u", s * up_factor);
                next.emplace_back(id + "d", s * down_factor);
            }
            spec.nodes.push_back(std::move(n));
        }
        level = std::move(next);
    }
    return ScenarioTree::build(spec);
}

}  // namespace na1lab
