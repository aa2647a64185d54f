// na1lab: command-line front end for tree validation, numeraire solving,
// viability verdicts, the counterexample study and the randomized suite.
//
// Exit codes: 0 success / HOLDS, 1 validation or usage error, 2 I/O error,
// 3 viability FAILS, 4 internal inconsistency.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "na1lab/montecarlo.hpp"
#include "na1lab/numeraire.hpp"
#include "na1lab/property_suite.hpp"
#include "na1lab/tree_io.hpp"
#include "na1lab/version.hpp"
#include "na1lab/viability.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace na1lab;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kIo = 2, kFails = 3, kInternal = 4 };

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr std::uint64_t kDefaultSeed = 20240601;

struct Settings {
    double probability_tolerance = kDefaultProbabilityTolerance;
    double numeraire_tol = 1e-8;
    int max_iterations = 10000;
    double deflation_tol = 1e-9;
    double lp_epsilon = 1e-9;
    double lp_tolerance = 1e-12;
    std::vector<double> capitals = ViabilityOptions::default_capitals();

    std::uint64_t seed = kDefaultSeed;
    std::string seed_source = "default";

    int k = 5;
    std::size_t paths = 10000;
    double fraction = 0.25;
    int inner_steps = 4096;
    int trading_steps = 64;
    int trading_resolution = 40;
    std::vector<int> ks{2, 4, 8, 16, 32};
    std::vector<double> levels{1, 2, 5, 10};
    unsigned threads = 0;

    std::size_t trees = 1000;
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
std::string join(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>) {
            out += num(xs[i]);
        } else {
            out += std::to_string(xs[i]);
        }
    }
    return out;
}

// Config file: flat JSON object, keys as in Settings. Flags override it.
void apply_config(const fs::path& path, Settings& s) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError("config " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw UsageError("config " + path.string() + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& key = it.key();
        const auto& v = it.value();
        try {
            if (key == "probability_tolerance") s.probability_tolerance = v.get<double>();
            else if (key == "numeraire_tol") s.numeraire_tol = v.get<double>();
            else if (key == "max_iterations") s.max_iterations = v.get<int>();
            else if (key == "deflation_tol") s.deflation_tol = v.get<double>();
            else if (key == "lp_epsilon") s.lp_epsilon = v.get<double>();
            else if (key == "lp_tolerance") s.lp_tolerance = v.get<double>();
            else if (key == "capitals") s.capitals = v.get<std::vector<double>>();
            else if (key == "seed") s.seed = v.get<std::uint64_t>(), s.seed_source = "config";
            else if (key == "k") s.k = v.get<int>();
            else if (key == "paths") s.paths = v.get<std::size_t>();
            else if (key == "fraction") s.fraction = v.get<double>();
            else if (key == "inner_steps") s.inner_steps = v.get<int>();
            else if (key == "trading_steps") s.trading_steps = v.get<int>();
            else if (key == "trading_resolution") s.trading_resolution = v.get<int>();
            else if (key == "ks") s.ks = v.get<std::vector<int>>();
            else if (key == "levels") s.levels = v.get<std::vector<double>>();
            else if (key == "threads") s.threads = v.get<unsigned>();
            else if (key == "trees") s.trees = v.get<std::size_t>();
            else throw UsageError("config " + path.string() + ": unknown key '" + key + "'");
        } catch (const json::type_error&) {
            throw UsageError("config " + path.string() + ": wrong type for '" + key + "'");
        }
    }
}

// --- output -----------------------------------------------------------------

class OutDir {
public:
    explicit OutDir(std::string dir) : dir_(std::move(dir)) {
        if (dir_.empty()) return;
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create output directory " + dir_ + ": " + ec.message());
    }

    bool active() const { return !dir_.empty(); }

    void write(const std::string& name, const std::string& content) {
        const auto path = fs::path(dir_) / name;
        std::ofstream out(path, std::ios::binary);
        out << content;
        if (!out) throw IoError("cannot write " + path.string());
        artifacts_.push_back(name);
    }

    const std::vector<std::string>& artifacts() const { return artifacts_; }

private:
    std::string dir_;
    std::vector<std::string> artifacts_;
};

struct Manifest {
    std::string subcommand;
    std::vector<std::string> inputs;
    json config = json::object();
    std::vector<std::string> command;  // canonical arguments, minus --out
    json outcome = json::object();
    const Settings* settings = nullptr;
    bool seeded = false;

    std::string dump(const OutDir& out) const {
        json j;
        j["subcommand"] = subcommand;
        j["inputs"] = inputs;
        j["config"] = config;
        if (seeded) {
            j["seed"] = settings->seed;
            j["seed_source"] = settings->seed_source;
            if (const char* env = std::getenv("NA1LAB_SEED")) j["env"]["NA1LAB_SEED"] = env;
        }
        j["version"] = kVersion;
        j["command"] = command;
        j["outcome"] = outcome;
        auto artifacts = out.artifacts();
        artifacts.push_back("manifest.json");
        j["artifacts"] = artifacts;
        return j.dump(2) + "\n";
    }
};

void finish(OutDir& out, const Manifest& m) {
    if (out.active()) out.write("manifest.json", m.dump(out));
}

// --- subcommands --------------------------------------------------------------

ScenarioTree read_tree(const std::string& path, const Settings& s) { return load_tree(path, s.probability_tolerance); }

int cmd_tree_validate(const std::string& path, const Settings& s) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const auto spec = prune_zero_probability(parse_tree_spec(buf.str()));
    const auto violations = validate_tree(spec, s.probability_tolerance);
    for (const auto& v : violations) std::cout << v.to_string() << "\n";
    if (!violations.empty()) {
        std::cout << path << ": " << violations.size() << " violation(s)\n";
        return kInvalid;
    }
    const auto tree = ScenarioTree::build(spec, s.probability_tolerance);
    std::cout << path << ": valid (" << tree.size() << " nodes, " << tree.leaves().size() << " leaves, d = "
              << tree.assets() << ", horizon " << tree.horizon().to_string() << ")\n";
    return kOk;
}

json solver_config(const Settings& s) {
    return {{"probability_tolerance", s.probability_tolerance},
            {"numeraire_tol", s.numeraire_tol},
            {"max_iterations", s.max_iterations},
            {"deflation_tol", s.deflation_tol}};
}

int cmd_numeraire(const std::string& path, const std::string& out_dir, const Settings& s) {
    const auto tree = read_tree(path, s);
    if (const auto r = detect_revival(tree); !r.empty()) {
        std::cerr << "numeraire solve: asset " << r.front().asset + 1 << " revives after node '"
                  << tree.node(r.front().node).id
                  << "'; no numeraire portfolio exists. Use `na1lab viability check` for the arbitrage witness.\n";
        return kInvalid;
    }
    SolverOptions opts{s.numeraire_tol, s.max_iterations};
    const auto p = numeraire_portfolio(tree, opts);

    std::ostringstream csv;
    csv << "node,time,parent,path_prob,wealth,deflator";
    for (std::size_t i = 0; i < tree.assets(); ++i) csv << ",rho_" << i + 1;
    csv << ",node_value,kkt_residual,worst_vertex_excess,verified\n";
    bool all_verified = true;
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto& node = tree.node(n);
        csv << node.id << ',' << node.time.to_string() << ',' << (node.parent ? tree.node(*node.parent).id : "")
            << ',' << num(node.path_prob) << ',' << num(p.wealth.values[n]) << ',' << num(p.deflator.values[n]);
        if (node.is_leaf()) {
            for (std::size_t i = 0; i < tree.assets(); ++i) csv << ',';
            csv << ",,,,\n";
            continue;
        }
        for (double w : p.rho.weights[n]) csv << ',' << num(w);
        const auto check = verify_numeraire(p.problems[n], p.rho.weights[n], s.numeraire_tol);
        all_verified = all_verified && check.ok;
        csv << ',' << num(p.solutions[n].value) << ',' << num(p.solutions[n].kkt_residual) << ','
            << num(check.worst_excess) << ',' << (check.ok ? "true" : "false") << '\n';
    }

    std::ostringstream defl;
    defl << "process,checks,violations,worst_excess\n";
    bool deflates = true;
    auto report = [&](const std::string& name, const std::vector<double>& x) {
        const auto r = verify_deflation(tree, p.deflator.values, x, s.deflation_tol);
        double worst = 0.0;
        for (const auto& v : r.violations) worst = std::max(worst, v.excess);
        defl << name << ',' << r.checks << ',' << r.violations.size() << ',' << num(worst) << '\n';
        deflates = deflates && r.ok();
    };
    report("cash", std::vector<double>(tree.size(), 1.0));
    for (std::size_t i = 0; i < tree.assets(); ++i) report("S" + std::to_string(i + 1), asset_prices(tree, i));

    OutDir out(out_dir);
    Manifest m;
    m.subcommand = "numeraire solve";
    m.inputs = {path};
    m.config = solver_config(s);
    m.command = {"numeraire", "solve", path, "--tol", num(s.numeraire_tol)};
    m.outcome = {{"verified", all_verified}, {"deflates", deflates}};
    if (out.active()) {
        out.write("numeraire.csv", csv.str());
        out.write("deflation.csv", defl.str());
        finish(out, m);
        std::cout << "numeraire portfolio for " << tree.size() << " nodes written to " << out_dir << "\n";
    } else {
        std::cout << csv.str() << "\n" << defl.str();
    }
    if (!all_verified || !deflates) {
        std::cerr << "numeraire solve: certificate check failed\n";
        return kInternal;
    }
    return kOk;
}

json node_values(const ScenarioTree& tree, const std::vector<double>& v) {
    json j = json::object();
    for (NodeIndex n = 0; n < tree.size(); ++n) j[tree.node(n).id] = v[n];
    return j;
}

json witness_json(const ScenarioTree& tree, const ArbitrageWitness& w, const WitnessReplay& replay) {
    json j;
    j["horizon"] = w.horizon.to_string();
    j["revival"] = {{"asset", w.revival.asset + 1}, {"node", tree.node(w.revival.node).id}};
    json claim = json::object();
    for (std::size_t l = 0; l < tree.leaves().size(); ++l) claim[tree.node(tree.leaves()[l]).id] = w.claim[l];
    j["claim"] = claim;
    json strategies = json::array();
    for (std::size_t e = 0; e < w.strategies.size(); ++e) {
        const auto& ws = w.strategies[e];
        json holdings = json::object();
        for (NodeIndex n = 0; n < tree.size(); ++n) {
            const auto& h = ws.strategy.holdings[n];
            bool any = false;
            for (double x : h) any = any || x != 0.0;
            if (any) holdings[tree.node(n).id] = h;
        }
        const auto& r = replay.entries[e];
        strategies.push_back({{"capital", ws.capital},
                              {"holdings", holdings},
                              {"replay", {{"admissible", r.admissible}, {"dominates", r.dominates}, {"margin", r.margin}}}});
    }
    j["strategies"] = strategies;
    j["claim_valid"] = replay.claim_valid;
    return j;
}

int cmd_viability(const std::string& path, const std::string& out_dir, const Settings& s) {
    const auto tree = read_tree(path, s);
    ViabilityOptions opts;
    opts.lp.epsilon = s.lp_epsilon;
    opts.lp.tolerance = s.lp_tolerance;
    opts.solver = {s.numeraire_tol, s.max_iterations};
    opts.capitals = s.capitals;
    opts.deflation_tol = s.deflation_tol;

    Manifest m;
    m.subcommand = "viability check";
    m.inputs = {path};
    m.config = solver_config(s);
    m.config["lp_epsilon"] = s.lp_epsilon;
    m.config["lp_tolerance"] = s.lp_tolerance;
    m.config["capitals"] = s.capitals;
    m.command = {"viability", "check",         path, "--capitals", join(s.capitals), "--lp-epsilon", num(s.lp_epsilon),
                 "--lp-tolerance", num(s.lp_tolerance)};
    OutDir out(out_dir);

    ViabilityVerdict v;
    try {
        v = na1_check(tree, opts);
    } catch (const InconsistentRoutes& e) {
        std::cerr << "viability check: internal inconsistency: " << e.what() << "\n";
        m.outcome = {{"outcome", "INCONSISTENT"}, {"detail", e.what()}};
        finish(out, m);
        return kInternal;
    }

    json doc;
    doc["tree"] = path;
    doc["outcome"] = outcome_name(v.outcome);
    json revivals = json::array();
    for (const auto& r : v.diagnostics.revivals) revivals.push_back({{"asset", r.asset + 1}, {"node", tree.node(r.node).id}});
    doc["diagnostics"] = {{"revivals", revivals},
                          {"lp_status", lp::status_name(v.diagnostics.lp.status)},
                          {"lp_feasible", v.diagnostics.lp.feasible},
                          {"lp_min_deflator", v.diagnostics.lp.min_value},
                          {"routes_agree", true},
                          {"certificate_verified", v.diagnostics.certificate_verified}};
    if (v.deflator) doc["certificate"] = {{"kind", "deflator"}, {"values", node_values(tree, v.deflator->values)}};
    if (v.witness) {
        doc["certificate"] = witness_json(tree, *v.witness, *v.replay);
        doc["certificate"]["kind"] = "arbitrage_witness";
    }

    m.outcome = {{"outcome", outcome_name(v.outcome)}, {"certificate_verified", v.diagnostics.certificate_verified}};
    if (out.active()) {
        out.write("verdict.json", doc.dump(2) + "\n");
        std::ostringstream csv;
        if (v.deflator) {
            csv << "node,time,deflator\n";
            for (NodeIndex n = 0; n < tree.size(); ++n)
                csv << tree.node(n).id << ',' << tree.node(n).time.to_string() << ',' << num(v.deflator->values[n]) << '\n';
            out.write("deflator.csv", csv.str());
        } else {
            csv << "capital,admissible,dominates,margin\n";
            for (const auto& e : v.replay->entries)
                csv << num(e.capital) << ',' << (e.admissible ? "true" : "false") << ','
                    << (e.dominates ? "true" : "false") << ',' << num(e.margin) << '\n';
            out.write("witness_replay.csv", csv.str());
        }
        finish(out, m);
    }
    std::cout << (out.active() ? json{{"outcome", doc["outcome"]}, {"out", out_dir}}.dump() : doc.dump(2)) << "\n";
    return v.outcome == Outcome::Holds ? kOk : kFails;
}

CounterexampleConfig counterexample_config(const Settings& s) {
    CounterexampleConfig c;
    c.k = s.k;
    c.paths = s.paths;
    c.seed = s.seed;
    c.fraction = s.fraction;
    c.inner_steps_per_unit = s.inner_steps;
    c.trading_steps_per_unit = s.trading_steps;
    c.trading_resolution = s.trading_resolution;
    c.threads = s.threads;
    return c;
}

int cmd_counterexample(const std::string& out_dir, const Settings& s) {
    auto c = counterexample_config(s);
    c.validate();
    if (s.levels.empty()) throw UsageError("counterexample: --levels must not be empty");
    for (int k : s.ks) {
        if (k < 2) throw UsageError("counterexample: every entry of --ks must be >= 2");
    }
    const auto run = run_counterexample(c);
    const auto hat = hat_wealth(run);
    std::vector<double> hat_cap(c.paths);
    const std::size_t last = run.hat.times.size() - 1;
    for (std::size_t p = 0; p < c.paths; ++p) hat_cap[p] = run.hat.at(p, last);
    const auto bh = approximate_buy_and_hold(c, run.prices, hat_cap);

    auto base = c;
    base.inner_steps_per_unit = 0;
    const auto diag = na1_failure_diagnostic(base, s.ks, s.levels);

    std::ostringstream summary;
    summary << "quantity,estimate,standard_error,target,z\n";
    summary << "mean_log_hat," << num(hat.log_hat.mean) << ',' << num(hat.log_hat.se_mean) << ',' << num(hat.target)
            << ',' << num(hat.mean_z) << '\n';
    summary << "var_log_hat," << num(hat.log_hat.variance) << ',' << num(hat.log_hat.se_variance) << ','
            << num(hat.target) << ',' << num(hat.variance_z) << '\n';
    summary << "within_one_frequency," << num(bh.within_one_frequency) << ",," << num(bh.threshold) << ",\n";
    summary << "median_buy_and_hold," << num(bh.median) << ",," << num(bh.median_target) << ",\n";
    summary << "stated_gap_p99," << num(hat.stated_gap_p99) << ",,,\n";
    summary << "stated_gap_max," << num(hat.stated_gap_max) << ",,,\n";
    summary << "ito_gap_p99," << num(hat.ito_gap_p99) << ",,,\n";
    summary << "ito_gap_max," << num(hat.ito_gap_max) << ",,,\n";

    std::ostringstream tails;
    tails << "k,level,estimate,standard_error\n";
    for (const auto& r : diag.rows)
        tails << r.k << ',' << num(r.level) << ',' << num(r.estimate) << ',' << num(r.standard_error) << '\n';

    std::ostringstream control;
    control << "level,probability\n";
    for (std::size_t i = 0; i < diag.control.levels.size(); ++i)
        control << num(diag.control.levels[i]) << ',' << num(diag.control.probabilities[i]) << '\n';

    std::ostringstream closed;
    closed << "path,w,hat_stated,hat_ito,hat_recursive,buy_and_hold\n";
    for (std::size_t p = 0; p < c.paths; ++p)
        closed << p << ',' << num(run.w_cap[p]) << ',' << num(run.hat_stated[p]) << ',' << num(run.hat_ito[p]) << ','
               << num(run.hat_recursive[p]) << ',' << num(run.buy_and_hold[p]) << '\n';

    std::ostringstream quant;
    quant << "t,s_q05,s_q50,s_q95,hat_q05,hat_q50,hat_q95\n";
    for (std::size_t j = 0; j < run.prices.times.size(); ++j) {
        const auto sc = run.prices.column(j);
        quant << num(run.prices.times[j]) << ',' << num(quantile(sc, 0.05)) << ',' << num(quantile(sc, 0.5)) << ','
              << num(quantile(sc, 0.95));
        if (j < run.hat.times.size()) {
            const auto hc = run.hat.column(j);
            quant << ',' << num(quantile(hc, 0.05)) << ',' << num(quantile(hc, 0.5)) << ',' << num(quantile(hc, 0.95));
        } else {
            quant << ",,,";
        }
        quant << '\n';
    }

    const bool mean_ok = std::abs(hat.mean_z) <= 4.0;
    const bool var_ok = std::abs(hat.variance_z) <= 4.0;
    json first = json::object();
    for (const auto& [level, k] : diag.first_k_above_half) first[num(level)] = k;

    Manifest m;
    m.subcommand = "counterexample";
    m.seeded = true;
    m.settings = &s;
    m.config = {{"k", c.k},
                {"paths", c.paths},
                {"fraction", c.fraction},
                {"inner_steps", c.inner_steps_per_unit},
                {"trading_steps", c.trading_steps_per_unit},
                {"trading_resolution", c.trading_resolution},
                {"ks", s.ks},
                {"levels", s.levels}};
    m.command = {"counterexample",  "--k",    std::to_string(c.k),          "--paths",
                 std::to_string(c.paths), "--seed", std::to_string(c.seed), "--fraction",
                 num(c.fraction),   "--inner-steps", std::to_string(c.inner_steps_per_unit), "--trading-steps",
                 std::to_string(c.trading_steps_per_unit), "--trading-resolution", std::to_string(c.trading_resolution),
                 "--ks",            join(s.ks), "--levels", join(s.levels)};
    m.outcome = {{"targets", {{"mean_log_hat", hat.target}, {"var_log_hat", hat.target}, {"within_one", bh.threshold}}},
                 {"mean_log_hat_within_4se", mean_ok},
                 {"var_log_hat_within_4se", var_ok},
                 {"within_one_gate", bh.passes},
                 {"first_k_above_half", first},
                 {"pass", mean_ok && var_ok && bh.passes}};

    OutDir out(out_dir);
    if (out.active()) {
        out.write("summary.csv", summary.str());
        out.write("tails.csv", tails.str());
        out.write("control_tail.csv", control.str());
        out.write("closed_form.csv", closed.str());
        out.write("quantiles.csv", quant.str());
        finish(out, m);
    }
    std::cout << summary.str() << "\n" << tails.str();
    return kOk;
}

int cmd_property_suite(const std::string& out_dir, const Settings& s) {
    PropertySuiteOptions o;
    o.trees = s.trees;
    o.seed = s.seed;
    o.viability.lp.epsilon = s.lp_epsilon;
    o.viability.lp.tolerance = s.lp_tolerance;
    o.viability.solver = {s.numeraire_tol, s.max_iterations};
    o.viability.capitals = s.capitals;
    o.viability.deflation_tol = s.deflation_tol;
    o.numeraire_tol = s.numeraire_tol;
    o.deflation_tol = s.deflation_tol;
    if (s.trees == 0) std::cerr << "warning: property-suite with 0 trees checks nothing\n";

    const auto r = run_property_suite(o);
    std::ostringstream csv;
    csv << "metric,value\n"
        << "trees," << r.trees << '\n'
        << "holds," << r.holds << '\n'
        << "fails," << r.fails << '\n'
        << "route_disagreements," << r.route_disagreements << '\n'
        << "numeraire_failures," << r.numeraire_failures << '\n'
        << "deflation_failures," << r.deflation_failures << '\n'
        << "witness_failures," << r.witness_failures << '\n'
        << "roundtrip_failures," << r.roundtrip_failures << '\n'
        << "deflation_checks," << r.deflation_checks << '\n';

    Manifest m;
    m.subcommand = "property-suite";
    m.seeded = true;
    m.settings = &s;
    m.config = solver_config(s);
    m.config["trees"] = s.trees;
    m.config["lp_epsilon"] = s.lp_epsilon;
    m.config["lp_tolerance"] = s.lp_tolerance;
    m.command = {"property-suite", "--trees", std::to_string(s.trees), "--seed", std::to_string(s.seed),
                 "--lp-tolerance", num(s.lp_tolerance)};
    m.outcome = {{"pass", r.passed()}, {"failures", r.failures()}, {"route_disagreements", r.route_disagreements}};

    OutDir out(out_dir);
    if (out.active()) {
        out.write("property_suite.csv", csv.str());
        std::string msgs;
        for (const auto& line : r.messages) msgs += line + "\n";
        out.write("failures.txt", msgs);
        finish(out, m);
    }
    std::cout << csv.str();
    for (std::size_t i = 0; i < r.messages.size() && i < 20; ++i) std::cerr << r.messages[i] << "\n";
    if (r.messages.size() > 20) std::cerr << "... " << r.messages.size() - 20 << " more\n";
    std::cerr << "property-suite: " << r.trees << " trees in " << r.seconds << " s, "
              << (r.passed() ? "pass" : "FAIL") << "\n";
    return r.passed() ? kOk : kInternal;
}

int run(int argc, char** argv);

int cmd_rerun(const std::string& manifest_path, const std::string& out_dir) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot read manifest " + manifest_path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError("manifest " + manifest_path + ": " + e.what());
    }
    if (!j.contains("command") || !j["command"].is_array()) throw UsageError("manifest has no command");
    std::vector<std::string> args{"na1lab"};
    for (const auto& a : j["command"]) args.push_back(a.get<std::string>());
    if (!out_dir.empty()) {
        args.push_back("--out");
        args.push_back(out_dir);
    }
    std::vector<char*> ptrs;
    for (auto& a : args) ptrs.push_back(a.data());
    return run(static_cast<int>(ptrs.size()), ptrs.data());
}

int run(int argc, char** argv) {
    Settings s;
    // The config file is read before the flags so that flags override it.
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) apply_config(argv[i + 1], s);
        else if (a.rfind("--config=", 0) == 0) apply_config(a.substr(9), s);
    }
    if (s.seed_source == "default") {
        if (const char* env = std::getenv("NA1LAB_SEED")) {
            try {
                s.seed = std::stoull(env);
            } catch (const std::exception&) {
                throw UsageError(std::string("NA1LAB_SEED is not an integer: ") + env);
            }
            s.seed_source = "env";
        }
    }

    CLI::App app{"na1lab: arbitrage of the first kind and numeraire portfolios on finite trees"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON file with defaults (flags override)");

    std::string tree_path, out_dir, manifest_path;

    auto* tree = app.add_subcommand("tree", "Tree file utilities");
    tree->require_subcommand(1);
    auto* validate = tree->add_subcommand("validate", "Check a tree file against every invariant");
    validate->add_option("path", tree_path, "Tree file")->required();

    auto* numeraire = app.add_subcommand("numeraire", "Numeraire portfolio");
    numeraire->require_subcommand(1);
    auto* solve = numeraire->add_subcommand("solve", "Solve the log-optimal portfolio and its deflator");
    solve->add_option("path", tree_path, "Tree file")->required();
    solve->add_option("--tol", s.numeraire_tol, "KKT tolerance")->capture_default_str();
    solve->add_option("--out", out_dir, "Output directory");

    auto* viability = app.add_subcommand("viability", "NA1 verdicts");
    viability->require_subcommand(1);
    auto* check = viability->add_subcommand("check", "Decide NA1 and attach a certificate");
    check->add_option("path", tree_path, "Tree file")->required();
    check->add_option("--capitals", s.capitals, "Witness capitals")->delimiter(',')->capture_default_str();
    check->add_option("--lp-epsilon", s.lp_epsilon, "Deflator positivity floor")->capture_default_str();
    check->add_option("--lp-tolerance", s.lp_tolerance, "LP feasibility slack (fault injection)")->capture_default_str();
    check->add_option("--out", out_dir, "Output directory");

    auto* cex = app.add_subcommand("counterexample", "Monte Carlo study of the time-changed exponential");
    cex->add_option("--k", s.k, "Refinement k (cap time 1 - 1/k)")->check(CLI::Range(2, 50))->capture_default_str();
    cex->add_option("--paths", s.paths, "Number of paths")->check(CLI::PositiveNumber)->capture_default_str();
    auto* cex_seed = cex->add_option("--seed", s.seed, "Seed");
    cex->add_option("--fraction", s.fraction, "Investment fraction")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    cex->add_option("--inner-steps", s.inner_steps, "Inner steps per unit of changed time")->capture_default_str();
    cex->add_option("--trading-steps", s.trading_steps, "Rebalances per unit of changed time")->capture_default_str();
    cex->add_option("--trading-resolution", s.trading_resolution, "Dyadic resolution of rebalancing times")
        ->capture_default_str();
    cex->add_option("--ks", s.ks, "k values for the tail diagnostic")->delimiter(',')->capture_default_str();
    cex->add_option("--levels", s.levels, "Levels for the tail diagnostic")->delimiter(',')->capture_default_str();
    cex->add_option("--threads", s.threads, "Worker threads (0 = all cores)");
    cex->add_option("--out", out_dir, "Output directory");

    auto* suite = app.add_subcommand("property-suite", "Randomized property checks over seeded trees");
    suite->add_option("--trees", s.trees, "Number of random trees")->capture_default_str();
    auto* suite_seed = suite->add_option("--seed", s.seed, "Seed");
    suite->add_option("--lp-tolerance", s.lp_tolerance, "LP feasibility slack (fault injection)")->capture_default_str();
    suite->add_option("--out", out_dir, "Output directory");

    auto* rerun = app.add_subcommand("rerun", "Repeat the run recorded in a manifest");
    rerun->add_option("manifest", manifest_path, "manifest.json")->required();
    rerun->add_option("--out", out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }
    if (cex_seed->count() || suite_seed->count()) s.seed_source = "flag";

    if (validate->parsed()) return cmd_tree_validate(tree_path, s);
    if (solve->parsed()) return cmd_numeraire(tree_path, out_dir, s);
    if (check->parsed()) return cmd_viability(tree_path, out_dir, s);
    if (cex->parsed()) return cmd_counterexample(out_dir, s);
    if (suite->parsed()) return cmd_property_suite(out_dir, s);
    if (rerun->parsed()) return cmd_rerun(manifest_path, out_dir);
    return kInvalid;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const TreeIoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const TreeParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const InvalidTree& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const InconsistentRoutes& e) {
        std::cerr << "internal inconsistency: " << e.what() << "\n";
        return kInternal;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}
