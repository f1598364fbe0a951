#include "privroute/experiment.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "json.hpp"
#include "privroute/error.hpp"

namespace privroute {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& msg) { throw Error(ErrorCode::config, "config: " + msg); }

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) schema_error(where + " must be an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) schema_error("unknown key '" + key + "' in " + where);
    }
}

const json& required(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(where + " is missing '" + key + "'");
    return *it;
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) schema_error(where + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) schema_error(where + " must be finite");
    return d;
}

std::size_t count(const json& v, const std::string& where) {
    if (!v.is_number_integer() || v.get<long long>() < 0) schema_error(where + " must be a nonnegative integer");
    return v.get<std::size_t>();
}

std::string text(const json& v, const std::string& where) {
    if (!v.is_string()) schema_error(where + " must be a string");
    return v.get<std::string>();
}

std::pair<std::string, std::string> node_pair(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2) schema_error(where + " must be a [tail, head] pair of node names");
    return {text(v[0], where), text(v[1], where)};
}

std::vector<double> numbers(const json& v, const std::string& where) {
    if (!v.is_array()) schema_error(where + " must be an array of numbers");
    std::vector<double> out;
    for (std::size_t j = 0; j < v.size(); ++j) out.push_back(number(v[j], where + "[" + std::to_string(j) + "]"));
    return out;
}

json to_json_array(const std::vector<double>& v) {
    json arr = json::array();
    for (double d : v) arr.push_back(d);
    return arr;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        schema_error(std::string("invalid JSON: ") + e.what());
    }
    allow_keys(doc, "top level",
               {"description", "nodes", "edges", "od_pairs", "edge_costs", "populations", "A_theta", "path_cap",
                "simulation", "privacy", "output_dir"});

    ExperimentConfig cfg;
    if (doc.contains("description")) cfg.description = text(doc["description"], "description");

    const json& nodes = required(doc, "nodes", "top level");
    if (!nodes.is_array()) schema_error("nodes must be an array of names");
    for (const auto& n : nodes) cfg.network.nodes.push_back(text(n, "nodes[]"));

    const json& edges = required(doc, "edges", "top level");
    if (!edges.is_array()) schema_error("edges must be an array");
    for (std::size_t e = 0; e < edges.size(); ++e) {
        cfg.network.edges.push_back(node_pair(edges[e], "edges[" + std::to_string(e) + "]"));
    }

    const json& ods = required(doc, "od_pairs", "top level");
    if (!ods.is_array() || ods.empty()) schema_error("od_pairs must be a nonempty array");
    for (std::size_t i = 0; i < ods.size(); ++i) {
        cfg.network.od_pairs.push_back(node_pair(ods[i], "od_pairs[" + std::to_string(i) + "]"));
    }

    const json& costs = required(doc, "edge_costs", "top level");
    if (!costs.is_array()) schema_error("edge_costs must be an array");
    for (std::size_t e = 0; e < cfg.network.edges.size(); ++e) {
        const std::string edge_name =
            "edge " + std::to_string(e) + " (" + cfg.network.edges[e].first + "->" + cfg.network.edges[e].second + ")";
        if (e >= costs.size()) schema_error("edge_costs has no entry for " + edge_name);
        const std::string where = "edge_costs[" + std::to_string(e) + "]";
        allow_keys(costs[e], where, {"affine"});
        const auto coeffs = numbers(required(costs[e], "affine", where), where + ".affine");
        if (coeffs.size() != 2) schema_error(where + ".affine must be [slope, intercept]");
        if (coeffs[0] < 0.0 || coeffs[1] < 0.0) schema_error(where + " for " + edge_name + " must be nonnegative");
        cfg.affine_costs.emplace_back(coeffs[0], coeffs[1]);
    }
    if (costs.size() > cfg.network.edges.size()) schema_error("edge_costs has more entries than edges");

    const json& pops = required(doc, "populations", "top level");
    if (!pops.is_array() || pops.empty()) schema_error("populations must be a nonempty array");
    for (std::size_t k = 0; k < pops.size(); ++k) {
        const std::string where = "populations[" + std::to_string(k) + "]";
        allow_keys(pops[k], where, {"name", "theta", "geometry", "c_k", "alpha_k"});
        PopulationConfig p;
        p.name = pops[k].contains("name") ? text(pops[k]["name"], where + ".name") : "P" + std::to_string(k + 1);
        p.theta = numbers(required(pops[k], "theta", where), where + ".theta");
        if (pops[k].contains("geometry")) p.learner.geometry = parse_geometry(text(pops[k]["geometry"], where));
        if (pops[k].contains("c_k")) p.learner.schedule.scale = number(pops[k]["c_k"], where + ".c_k");
        if (pops[k].contains("alpha_k")) p.learner.schedule.decay = number(pops[k]["alpha_k"], where + ".alpha_k");
        p.learner.schedule.validate();
        cfg.populations.push_back(std::move(p));
    }

    if (doc.contains("A_theta")) cfg.mass_bound = number(doc["A_theta"], "A_theta");
    if (doc.contains("path_cap")) cfg.path_cap = count(doc["path_cap"], "path_cap");
    if (doc.contains("output_dir")) cfg.output_dir = text(doc["output_dir"], "output_dir");

    if (doc.contains("simulation")) {
        const json& s = doc["simulation"];
        allow_keys(s, "simulation",
                   {"T", "runs", "seed", "sigmas", "slope_window", "equilibrium_tol", "threads"});
        SimulationBlock& b = cfg.simulation;
        if (s.contains("T")) b.iterations = count(s["T"], "simulation.T");
        if (s.contains("runs")) b.runs = count(s["runs"], "simulation.runs");
        if (s.contains("seed")) b.seed = s["seed"].is_number_unsigned() ? s["seed"].get<std::uint64_t>()
                                                                         : count(s["seed"], "simulation.seed");
        if (s.contains("sigmas")) b.sigmas = numbers(s["sigmas"], "simulation.sigmas");
        if (s.contains("slope_window")) {
            const auto& w = s["slope_window"];
            if (!w.is_array() || w.size() != 2) schema_error("simulation.slope_window must be [first, last]");
            b.slope_first = count(w[0], "simulation.slope_window[0]");
            b.slope_last = count(w[1], "simulation.slope_window[1]");
        }
        if (s.contains("equilibrium_tol")) b.equilibrium_tol = number(s["equilibrium_tol"], "simulation.equilibrium_tol");
        if (s.contains("threads")) b.threads = count(s["threads"], "simulation.threads");
        if (b.iterations < 1) schema_error("simulation.T must be >= 1");
        if (b.runs < 1) schema_error("simulation.runs must be >= 1");
        for (double sigma : b.sigmas) {
            if (sigma < 0.0) schema_error("simulation.sigmas must be >= 0");
        }
    }

    if (doc.contains("privacy")) {
        const json& p = doc["privacy"];
        allow_keys(p, "privacy",
                   {"c_adj", "a", "delta_budget", "delta_split", "paper_variant", "pairs", "T_range", "T_stride"});
        PrivacyBlock& b = cfg.privacy;
        if (p.contains("c_adj")) b.adjacency_radius = number(p["c_adj"], "privacy.c_adj");
        if (p.contains("a")) b.clip = number(p["a"], "privacy.a");
        if (p.contains("delta_budget")) b.delta_budget = number(p["delta_budget"], "privacy.delta_budget");
        if (p.contains("delta_split")) b.split = parse_delta_split(text(p["delta_split"], "privacy.delta_split"));
        if (p.contains("paper_variant")) {
            if (!p["paper_variant"].is_boolean()) schema_error("privacy.paper_variant must be a boolean");
            b.paper_variant = p["paper_variant"].get<bool>();
        }
        if (p.contains("pairs")) {
            const json& pairs = p["pairs"];
            if (!pairs.is_array()) schema_error("privacy.pairs must be an array of [c, sigma]");
            for (std::size_t j = 0; j < pairs.size(); ++j) {
                const auto v = numbers(pairs[j], "privacy.pairs[" + std::to_string(j) + "]");
                if (v.size() != 2) schema_error("privacy.pairs entries must be [c, sigma]");
                b.pairs.emplace_back(v[0], v[1]);
            }
        }
        if (p.contains("T_range")) {
            const auto& r = p["T_range"];
            if (!r.is_array() || r.size() != 2) schema_error("privacy.T_range must be [first, last]");
            b.t_first = count(r[0], "privacy.T_range[0]");
            b.t_last = count(r[1], "privacy.T_range[1]");
        }
        if (p.contains("T_stride")) b.t_stride = count(p["T_stride"], "privacy.T_stride");
        if (b.adjacency_radius < 0.0) schema_error("privacy.c_adj must be >= 0");
        if (b.clip <= 0.0) schema_error("privacy.a must be positive");
        if (b.delta_budget <= 0.0) schema_error("privacy.delta_budget must be positive");
        if (b.t_first < 1 || b.t_first > b.t_last) schema_error("privacy.T_range must satisfy 1 <= first <= last");
        if (b.t_stride < 1) schema_error("privacy.T_stride must be >= 1");
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string ExperimentConfig::to_json() const {
    json doc;
    if (!description.empty()) doc["description"] = description;
    doc["nodes"] = network.nodes;
    doc["edges"] = json::array();
    for (const auto& [t, h] : network.edges) doc["edges"].push_back({t, h});
    doc["od_pairs"] = json::array();
    for (const auto& [o, d] : network.od_pairs) doc["od_pairs"].push_back({o, d});
    doc["edge_costs"] = json::array();
    for (const auto& [a, b] : affine_costs) doc["edge_costs"].push_back({{"affine", {a, b}}});
    doc["populations"] = json::array();
    for (const auto& p : populations) {
        doc["populations"].push_back({{"name", p.name},
                                      {"theta", to_json_array(p.theta)},
                                      {"geometry", std::string(to_string(p.learner.geometry))},
                                      {"c_k", p.learner.schedule.scale},
                                      {"alpha_k", p.learner.schedule.decay}});
    }
    if (mass_bound) doc["A_theta"] = *mass_bound;
    doc["path_cap"] = path_cap;
    doc["simulation"] = {{"T", simulation.iterations},
                         {"runs", simulation.runs},
                         {"seed", simulation.seed},
                         {"sigmas", to_json_array(simulation.sigmas)},
                         {"equilibrium_tol", simulation.equilibrium_tol},
                         {"threads", simulation.threads}};
    if (simulation.slope_last) doc["simulation"]["slope_window"] = {simulation.slope_first, simulation.slope_last};
    json pairs = json::array();
    for (const auto& [c, s] : privacy.pairs) pairs.push_back({c, s});
    doc["privacy"] = {{"c_adj", privacy.adjacency_radius},
                      {"a", privacy.clip},
                      {"delta_budget", privacy.delta_budget},
                      {"delta_split", std::string(to_string(privacy.split))},
                      {"paper_variant", privacy.paper_variant},
                      {"pairs", pairs},
                      {"T_range", {privacy.t_first, privacy.t_last}},
                      {"T_stride", privacy.t_stride}};
    if (!output_dir.empty()) doc["output_dir"] = output_dir;
    return doc.dump(2);
}

GameInstance ExperimentConfig::build_game() const {
    std::vector<EdgeCost> costs;
    for (const auto& [a, b] : affine_costs) costs.push_back(EdgeCost::affine(a, b));
    std::vector<std::vector<double>> theta;
    for (const auto& p : populations) theta.push_back(p.theta);
    return make_game(network, std::move(costs), std::move(theta), mass_bound, privacy.adjacency_radius, path_cap);
}

std::vector<PopulationLearner> ExperimentConfig::learners() const {
    std::vector<PopulationLearner> out;
    for (const auto& p : populations) out.push_back(p.learner);
    return out;
}

SimulationConfig ExperimentConfig::simulation_config(double sigma) const {
    SimulationConfig s;
    s.learners = learners();
    s.sigma = sigma;
    s.iterations = simulation.iterations;
    s.runs = simulation.runs;
    s.seed = simulation.seed;
    s.threads = simulation.threads;
    s.slope_first = simulation.slope_first;
    s.slope_last = simulation.slope_last;
    s.equilibrium_tol = simulation.equilibrium_tol;
    return s;
}

AccountantOptions ExperimentConfig::accountant_options(double sigma, std::size_t iterations) const {
    AccountantOptions o;
    o.sigma = sigma;
    o.clip = privacy.clip;
    o.iterations = iterations;
    o.delta_budget = privacy.delta_budget;
    o.split = privacy.split;
    o.paper_variant = privacy.paper_variant;
    return o;
}

std::string constants_json(const ExperimentConfig& cfg) {
    const GameInstance game = cfg.build_game();
    const auto learners = cfg.learners();
    const SensitivityConstants k = sensitivity_constants(game, learners);
    const PathSet& paths = game.paths();

    json per_block = json::array();
    for (std::size_t i = 0; i < paths.od_count(); ++i) per_block.push_back(spectral_norm(paths.incidence(i)));
    double lambda = 0.0;
    for (const EdgeCost& c : game.costs()) lambda = std::max(lambda, c.lipschitz());

    json doc;
    doc["od_pairs"] = paths.od_count();
    doc["paths_per_od"] = json::array();
    for (std::size_t i = 0; i < paths.od_count(); ++i) doc["paths_per_od"].push_back(paths.block_size(i));
    doc["total_paths"] = paths.total_paths();
    doc["A_x"] = {{"value", k.A_x},
                  {"block_spectral_norms", per_block},
                  {"derivation", "max over OD blocks of the largest singular value of the incidence matrix"}};
    doc["A_delta"] = {{"value", k.A_delta},
                      {"derivation", "sup of the summed per-block l2 norm over the simplex product = number of OD pairs"}};
    doc["A_theta"] = {{"value", k.mass_bound},
                      {"derivation", cfg.mass_bound ? "declared in config" : "largest configured mass entry"}};
    doc["A_ell"] = {{"value", k.A_ell},
                    {"max_edge_lipschitz", lambda},
                    {"derivation", "(sum of block spectral norms) * max edge Lipschitz constant"}};
    doc["M"] = {{"value", k.loss_bound},
                {"total_mass", game.total_mass()},
                {"derivation", "max over paths of the summed edge costs with the total mass on every edge"}};
    doc["l_psi"] = json::array();
    for (std::size_t j = 0; j < cfg.populations.size(); ++j) {
        const auto& p = cfg.populations[j];
        doc["l_psi"].push_back({{"population", p.name},
                                {"geometry", std::string(to_string(p.learner.geometry))},
                                {"value", k.moduli[j]},
                                {"divergence_bound", divergence_bound(p.learner.geometry, paths)},
                                {"derivation", "per-block modulus 1 w.r.t. l2, divided by the number of OD pairs"}});
    }
    doc["c_adj"] = k.adjacency_radius;
    return doc.dump(2);
}

std::string equilibrium_json(const ExperimentConfig& cfg, double tol) {
    const GameInstance game = cfg.build_game();
    const EquilibriumResult eq = solve_equilibrium(game, tol);
    const PathSet& paths = game.paths();
    const Network& net = game.network();

    json doc;
    doc["f_star"] = eq.potential;
    doc["nash_gap"] = eq.gap;
    doc["tol"] = tol;
    doc["iterations"] = eq.iterations;
    doc["paths"] = json::array();
    for (std::size_t i = 0; i < paths.od_count(); ++i) {
        for (const Path& p : paths.paths(i)) {
            std::string route = net.node_name(net.edges()[p.front()].tail);
            for (std::size_t e : p) route += "->" + net.node_name(net.edges()[e].head);
            doc["paths"].push_back({{"od", i}, {"route", route}, {"edges", p}});
        }
    }
    doc["allocation"] = json::array();
    for (const auto& xk : eq.allocation) doc["allocation"].push_back(to_json_array(xk));
    doc["edge_flows"] = to_json_array(edge_flows(game, eq.allocation));
    doc["path_losses"] = to_json_array(path_losses(game, eq.allocation));
    return doc.dump(2);
}

std::string manifest_json(const ExperimentConfig& cfg, const EnsembleStats& stats, const std::string& timestamp) {
    json doc;
    doc["config"] = json::parse(cfg.to_json());
    doc["sigma"] = stats.sigma;
    doc["T"] = stats.iterations;
    doc["runs"] = stats.runs;
    doc["master_seed"] = cfg.simulation.seed;
    doc["seed_rule"] = "run_seed = splitmix64(splitmix64(master_seed) ^ run_index)";
    doc["run_seeds"] = stats.seeds;
    doc["f_star"] = stats.f_star;
    doc["equilibrium_gap"] = stats.equilibrium_gap;
    doc["slope_window"] = {stats.slope_first, stats.slope_last};
    if (std::isfinite(stats.slope)) {
        doc["fitted_slope"] = stats.slope;
    } else {
        doc["fitted_slope"] = nullptr;
    }
    doc["terminal_f_mean"] = stats.f_mean.empty() ? 0.0 : stats.f_mean.back();
    doc["feasible"] = stats.feasible;
    doc["timestamp"] = timestamp;
    return doc.dump(2);
}

std::string privacy_report_json(const PrivacyReport& r) {
    const SensitivityConstants& k = r.constants;
    json doc;
    doc["constants"] = {{"A_theta", k.mass_bound}, {"c_adj", k.adjacency_radius}, {"A_delta", k.A_delta},
                        {"A_x", k.A_x},          {"A_ell", k.A_ell},            {"M", k.loss_bound},
                        {"l_psi", k.moduli},     {"l_psi_min", k.min_modulus},  {"total_paths", k.total_paths}};
    doc["sigma"] = r.sigma;
    doc["a"] = r.clip;
    doc["paper_variant"] = r.paper_variant;
    doc["T"] = r.steps.size();
    json sens = json::array(), eps = json::array(), del = json::array(), valid = json::array();
    for (const StepPrivacy& s : r.steps) {
        sens.push_back(s.sensitivity);
        eps.push_back(s.epsilon);
        del.push_back(s.delta);
        valid.push_back(s.valid);
    }
    doc["steps"] = {{"sensitivity", sens}, {"epsilon", eps}, {"delta", del}, {"valid", valid}};
    doc["delta_tail"] = r.delta_tail;
    doc["epsilon"] = r.epsilon;
    doc["delta"] = r.delta;
    doc["valid"] = r.valid;
    doc["trivial"] = r.trivial;
    return doc.dump(2);
}

std::string accountant_curve_csv(const ExperimentConfig& cfg, double c, double sigma, std::size_t t_first,
                                 std::size_t t_last, std::size_t stride, bool header) {
    if (t_first < 1 || t_first > t_last || stride < 1) {
        throw Error(ErrorCode::invalid_argument, "T range must satisfy 1 <= first <= last with stride >= 1");
    }
    const GameInstance game = cfg.build_game().with_adjacency_radius(c);
    const auto learners = cfg.learners();
    const SensitivityConstants constants = sensitivity_constants(game, learners);

    std::string out = header ? "c,sigma,T,epsilon,delta,delta_tail,valid,trivial\r\n" : "";
    for (std::size_t T = t_first; T <= t_last; T += stride) {
        const PrivacyReport r = accountant(constants, learners, cfg.accountant_options(sigma, T));
        out += format_double(c) + ',' + format_double(sigma) + ',' + std::to_string(T) + ',' +
               format_double(r.epsilon) + ',' + format_double(r.delta) + ',' + format_double(r.delta_tail) + ',' +
               (r.valid ? "1" : "0") + ',' + (r.trivial ? "1" : "0") + "\r\n";
    }
    return out;
}

}  // namespace privroute
