#include "na1lab/tree_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace na1lab {

using nlohmann::json;

double parse_decimal(const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || first == last)
        throw std::invalid_argument("not a decimal number: '" + text + "'");
    return v;
}

std::string format_decimal(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) throw std::runtime_error("format_decimal: conversion failed");
    return {buf, ptr};
}

namespace {

std::string where(const std::string& node, const std::string& field) {
    return node.empty() ? "field '" + field + "'" : "node '" + node + "': field '" + field + "'";
}

const json& require(const json& obj, const char* key, const std::string& node, const std::string& ctx) {
    if (!obj.is_object()) throw TreeParseError(where(node, ctx) + " must be an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw TreeParseError(where(node, ctx.empty() ? key : ctx + "." + key) + " is missing");
    return *it;
}

double decimal_field(const json& v, const std::string& node, const std::string& field) {
    if (v.is_string()) {
        try {
            return parse_decimal(v.get<std::string>());
        } catch (const std::invalid_argument& e) {
            throw TreeParseError(where(node, field) + ": " + e.what());
        }
    }
    if (v.is_number()) return v.get<double>();
    throw TreeParseError(where(node, field) + " must be a decimal string");
}

std::int64_t integer_field(const json& v, const std::string& node, const std::string& field) {
    if (!v.is_number_integer()) throw TreeParseError(where(node, field) + " must be an integer");
    return v.get<std::int64_t>();
}

GridTime time_field(const json& v, const std::string& node, const std::string& field) {
    const auto m = integer_field(require(v, "m", node, field), node, field + ".m");
    const auto k = integer_field(require(v, "k", node, field), node, field + ".k");
    try {
        return GridTime(m, static_cast<int>(k));
    } catch (const std::invalid_argument& e) {
        throw TreeParseError(where(node, field) + ": " + e.what());
    }
}

json time_json(const GridTime& t) { return json{{"m", t.numerator()}, {"k", t.resolution()}}; }

}  // namespace

TreeSpec parse_tree_spec(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw TreeParseError(std::string("malformed tree document: ") + e.what());
    }
    TreeSpec spec;
    const auto d = integer_field(require(doc, "d", "", ""), "", "d");
    if (d <= 0) throw TreeParseError("field 'd' must be a positive integer");
    spec.d = static_cast<std::size_t>(d);
    spec.horizon = time_field(require(doc, "horizon", "", ""), "", "horizon");
    const auto& root = require(doc, "root", "", "");
    if (!root.is_string()) throw TreeParseError("field 'root' must be a string");
    spec.root = root.get<std::string>();

    const auto& nodes = require(doc, "nodes", "", "");
    if (!nodes.is_array()) throw TreeParseError("field 'nodes' must be an array");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        const std::string pos = "nodes[" + std::to_string(i) + "]";
        const auto& id = require(n, "id", "", pos);
        if (!id.is_string()) throw TreeParseError("field '" + pos + ".id' must be a string");
        NodeSpec ns;
        ns.id = id.get<std::string>();
        ns.time = time_field(require(n, "time", ns.id, ""), ns.id, "time");
        const auto& prices = require(n, "prices", ns.id, "");
        if (!prices.is_array()) throw TreeParseError(where(ns.id, "prices") + " must be an array");
        for (std::size_t j = 0; j < prices.size(); ++j)
            ns.prices.push_back(decimal_field(prices[j], ns.id, "prices[" + std::to_string(j) + "]"));
        if (auto it = n.find("children"); it != n.end()) {
            if (!it->is_array()) throw TreeParseError(where(ns.id, "children") + " must be an array");
            for (std::size_t j = 0; j < it->size(); ++j) {
                const auto& c = (*it)[j];
                const std::string field = "children[" + std::to_string(j) + "]";
                const auto& cid = require(c, "id", ns.id, field);
                if (!cid.is_string()) throw TreeParseError(where(ns.id, field + ".id") + " must be a string");
                const double prob = decimal_field(require(c, "prob", ns.id, field), ns.id, field + ".prob");
                ns.children.push_back({cid.get<std::string>(), prob});
            }
        }
        spec.nodes.push_back(std::move(ns));
    }
    return spec;
}

std::string format_tree_spec(const TreeSpec& spec) {
    json nodes = json::array();
    for (const auto& n : spec.nodes) {
        json prices = json::array();
        for (double s : n.prices) prices.push_back(format_decimal(s));
        json children = json::array();
        for (const auto& c : n.children) children.push_back({{"id", c.id}, {"prob", format_decimal(c.prob)}});
        nodes.push_back({{"id", n.id}, {"time", time_json(n.time)}, {"prices", prices}, {"children", children}});
    }
    json doc{{"d", spec.d}, {"horizon", time_json(spec.horizon)}, {"root", spec.root}, {"nodes", nodes}};
    return doc.dump(2) + "\n";
}

ScenarioTree load_tree(const std::filesystem::path& path, double probability_tolerance) {
    std::ifstream in(path);
    if (!in) throw TreeIoError("cannot open tree file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw TreeIoError("cannot read tree file " + path.string());
    return ScenarioTree::build(prune_zero_probability(parse_tree_spec(buf.str())), probability_tolerance);
}

void save_tree(const ScenarioTree& tree, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw TreeIoError("cannot write tree file " + path.string());
    out << format_tree_spec(tree.spec());
    if (!out) throw TreeIoError("write failed for " + path.string());
}

}  // namespace na1lab
