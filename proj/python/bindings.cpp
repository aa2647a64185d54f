#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "na1lab/montecarlo.hpp"
#include "na1lab/numeraire.hpp"
#include "na1lab/tree_io.hpp"
#include "na1lab/version.hpp"
#include "na1lab/viability.hpp"

namespace py = pybind11;
using namespace na1lab;

namespace {

py::dict by_id(const ScenarioTree& tree, const std::vector<double>& v) {
    py::dict d;
    for (NodeIndex n = 0; n < tree.size(); ++n) d[py::str(tree.node(n).id)] = v[n];
    return d;
}

py::dict check(const ScenarioTree& tree, double lp_tolerance) {
    ViabilityOptions o;
    o.lp.tolerance = lp_tolerance;
    const auto v = na1_check(tree, o);
    py::dict d;
    d["outcome"] = outcome_name(v.outcome);
    d["certificate_verified"] = v.diagnostics.certificate_verified;
    py::list revivals;
    for (const auto& r : v.diagnostics.revivals) revivals.append(py::make_tuple(r.asset + 1, tree.node(r.node).id));
    d["revivals"] = revivals;
    if (v.deflator) d["deflator"] = by_id(tree, v.deflator->values);
    if (v.replay) {
        py::list margins;
        for (const auto& e : v.replay->entries) margins.append(py::make_tuple(e.capital, e.admissible, e.dominates));
        d["witness_replay"] = margins;
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_na1lab, m) {
    m.doc() = "Finite-tree NA1 checks, numeraire portfolios and the counterexample study";
    m.attr("__version__") = kVersion;

    py::register_exception<InvalidTree>(m, "InvalidTree", PyExc_ValueError);
    py::register_exception<RevivalError>(m, "RevivalError", PyExc_ValueError);
    py::register_exception<InconsistentRoutes>(m, "InconsistentRoutes", PyExc_RuntimeError);

    py::class_<ScenarioTree>(m, "ScenarioTree")
        .def_property_readonly("size", &ScenarioTree::size)
        .def_property_readonly("assets", &ScenarioTree::assets)
        .def_property_readonly("ids", [](const ScenarioTree& t) {
            std::vector<std::string> ids;
            for (NodeIndex n = 0; n < t.size(); ++n) ids.push_back(t.node(n).id);
            return ids;
        })
        .def("price", &ScenarioTree::price, py::arg("node"), py::arg("asset"));

    m.def("load_tree", [](const std::string& path) { return load_tree(path); }, py::arg("path"));
    m.def("parse_tree", [](const std::string& text) { return ScenarioTree::build(parse_tree_spec(text)); },
          py::arg("text"));

    m.def("na1_check", &check, py::arg("tree"), py::arg("lp_tolerance") = 1e-12);

    m.def(
        "solve_node",
        [](const std::vector<Vec>& returns, const std::vector<double>& probs) {
            const auto s = solve_node({returns, probs});
            return py::dict(py::arg("rho") = s.rho, py::arg("value") = s.value, py::arg("converged") = s.converged);
        },
        py::arg("returns"), py::arg("probs"));

    m.def(
        "numeraire_portfolio",
        [](const ScenarioTree& tree) {
            const auto p = numeraire_portfolio(tree);
            return py::dict(py::arg("wealth") = by_id(tree, p.wealth.values),
                            py::arg("deflator") = by_id(tree, p.deflator.values));
        },
        py::arg("tree"));

    m.def("stoch_log", [](const std::vector<double>& s) { return stoch_log(s); }, py::arg("prices"));
    m.def("stoch_exp", [](const std::vector<double>& r, double s0) { return stoch_exp(r, s0); }, py::arg("returns"),
          py::arg("s0"));

    m.def(
        "counterexample",
        [](int k, std::size_t paths, std::uint64_t seed, int inner_steps, unsigned threads) {
            CounterexampleConfig c;
            c.k = k;
            c.paths = paths;
            c.seed = seed;
            c.inner_steps_per_unit = inner_steps;
            c.threads = threads;
            CounterexampleRun run;
            {
                py::gil_scoped_release release;
                run = run_counterexample(c);
            }
            const auto h = hat_wealth(run);
            std::vector<double> hat_cap(c.paths);
            for (std::size_t p = 0; p < c.paths; ++p) hat_cap[p] = run.hat.at(p, run.hat.times.size() - 1);
            const auto bh = approximate_buy_and_hold(c, run.prices, hat_cap);
            return py::dict(py::arg("target") = h.target, py::arg("mean_log_hat") = h.log_hat.mean,
                            py::arg("var_log_hat") = h.log_hat.variance, py::arg("mean_z") = h.mean_z,
                            py::arg("variance_z") = h.variance_z, py::arg("within_one") = bh.within_one_frequency,
                            py::arg("within_one_threshold") = bh.threshold, py::arg("buy_and_hold") = bh.terminal);
        },
        py::arg("k") = 5, py::arg("paths") = 10000, py::arg("seed") = 20240601, py::arg("inner_steps") = 4096,
        py::arg("threads") = 0);
}
