#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "privroute/experiment.hpp"
#include "privroute/game.hpp"
#include "privroute/network.hpp"

#ifndef PRIVROUTE_SOURCE_DIR
#define PRIVROUTE_SOURCE_DIR "."
#endif

namespace fixtures {

using namespace privroute;

inline std::string config_path(const std::string& name) {
    return std::string(PRIVROUTE_SOURCE_DIR) + "/configs/" + name;
}

inline NetworkSpec pigou_spec() { return {{"s", "t"}, {{"s", "t"}, {"s", "t"}}, {{"s", "t"}}}; }

inline NetworkSpec diamond_spec() {
    return {{"s", "a", "b", "t"}, {{"s", "a"}, {"a", "t"}, {"s", "b"}, {"b", "t"}}, {{"s", "t"}}};
}

inline NetworkSpec triangle_spec() { return {{"s", "a", "t"}, {{"s", "a"}, {"a", "t"}, {"s", "t"}}, {{"s", "t"}}}; }

/// c0(u) = u, c1(u) = 1, single population of mass theta.
inline GameInstance pigou_game(double theta = 1.0) {
    return make_game(pigou_spec(), {EdgeCost::affine(1.0, 0.0), EdgeCost::affine(0.0, 1.0)}, {{theta}},
                     std::max(theta, 1.0));
}

inline ExperimentConfig standin_config() { return ExperimentConfig::load(config_path("standin_two_od.json")); }

inline GameInstance standin_game() { return standin_config().build_game(); }

/// Random network on n nodes: a forward chain 0->1->...->n-1 plus random
/// extra edges (including some backward ones), 1-2 OD pairs, 1-3 populations
/// and random affine costs.
inline GameInstance random_affine_game(std::mt19937_64& rng, std::size_t max_nodes = 6) {
    std::uniform_int_distribution<std::size_t> node_count(3, max_nodes);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t n = node_count(rng);
    NetworkSpec spec;
    for (std::size_t v = 0; v < n; ++v) spec.nodes.push_back("n" + std::to_string(v));
    for (std::size_t v = 0; v + 1 < n; ++v) spec.edges.emplace_back(spec.nodes[v], spec.nodes[v + 1]);
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            if (u == v) continue;
            const double p = u < v ? 0.45 : 0.12;
            if (unit(rng) < p) spec.edges.emplace_back(spec.nodes[u], spec.nodes[v]);
        }
    }
    spec.od_pairs.emplace_back(spec.nodes[0], spec.nodes[n - 1]);
    if (unit(rng) < 0.6) spec.od_pairs.emplace_back(spec.nodes[1], spec.nodes[n - 1]);

    std::vector<EdgeCost> costs;
    for (std::size_t e = 0; e < spec.edges.size(); ++e) costs.push_back(EdgeCost::affine(unit(rng), unit(rng)));

    std::uniform_int_distribution<std::size_t> pop_count(1, 3);
    const std::size_t K = pop_count(rng);
    std::vector<std::vector<double>> theta(K);
    for (auto& row : theta) {
        for (std::size_t i = 0; i < spec.od_pairs.size(); ++i) row.push_back(0.05 + 1.45 * unit(rng));
    }
    return make_game(spec, std::move(costs), std::move(theta), 1.5);
}

/// Strictly positive point on the simplex product.
inline std::vector<double> random_point(const PathSet& paths, std::mt19937_64& rng) {
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> x(paths.total_paths());
    for (std::size_t i = 0; i < paths.od_count(); ++i) {
        double sum = 0.0;
        for (std::size_t j = paths.offset(i); j < paths.offset(i) + paths.block_size(i); ++j) {
            x[j] = expo(rng) + 1e-3;
            sum += x[j];
        }
        for (std::size_t j = paths.offset(i); j < paths.offset(i) + paths.block_size(i); ++j) x[j] /= sum;
    }
    return x;
}

inline FlowAllocation random_allocation(const PathSet& paths, std::size_t populations, std::mt19937_64& rng) {
    FlowAllocation x;
    for (std::size_t k = 0; k < populations; ++k) x.push_back(random_point(paths, rng));
    return x;
}

}  // namespace fixtures
