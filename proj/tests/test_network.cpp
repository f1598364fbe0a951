#include <algorithm>
#include <functional>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "privroute/error.hpp"
#include "privroute/network.hpp"

using namespace privroute;

namespace {

// Brute force: every edge sequence of length <= |V|-1 that chains from o to d
// without revisiting a node.
std::set<Path> brute_force_paths(const Network& net, std::size_t od) {
    const auto [o, d] = net.od_pairs()[od];
    std::set<Path> found;
    const std::size_t E = net.edge_count();
    std::function<void(Path&)> extend = [&](Path& seq) {
        if (!seq.empty()) {
            std::vector<std::size_t> nodes{net.edges()[seq.front()].tail};
            bool chained = nodes.front() == o;
            for (std::size_t k = 0; chained && k < seq.size(); ++k) {
                const Edge e = net.edges()[seq[k]];
                chained = e.tail == nodes.back();
                nodes.push_back(e.head);
            }
            if (!chained) return;
            std::vector<std::size_t> sorted = nodes;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return;
            if (nodes.back() == d) found.insert(seq);
        }
        if (seq.size() + 1 >= net.node_count()) return;
        for (std::size_t e = 0; e < E; ++e) {
            seq.push_back(e);
            extend(seq);
            seq.pop_back();
        }
    };
    Path seq;
    extend(seq);
    return found;
}

}  // namespace

TEST_CASE("Network::build accepts the minimal Pigou network") {
    const Network net = Network::build(fixtures::pigou_spec());
    CHECK(net.node_count() == 2);
    CHECK(net.edge_count() == 2);
    CHECK(net.od_count() == 1);
    CHECK(net.edge_label(1) == "s->t");
}

TEST_CASE("Network::build accepts the seven-node two-OD stand-in") {
    const auto cfg = fixtures::standin_config();
    const Network net = Network::build(cfg.network);
    CHECK(net.node_count() == 7);
    REQUIRE(net.od_count() == 2);
    CHECK(net.node_name(net.od_pairs()[0].origin) == "v0");
    CHECK(net.node_name(net.od_pairs()[0].destination) == "v6");
    CHECK(net.node_name(net.od_pairs()[1].origin) == "v1");
    CHECK(net.node_name(net.od_pairs()[1].destination) == "v5");
}

TEST_CASE("Network::build rejects malformed specs") {
    auto code_of = [](const NetworkSpec& spec) {
        try {
            Network::build(spec);
        } catch (const Error& e) {
            return e.code();
        }
        FAIL("expected an error");
        return ErrorCode::io;
    };
    CHECK(code_of({{"s", "s"}, {}, {{"s", "s"}}}) == ErrorCode::network);
    CHECK(code_of({{"s", "t"}, {{"s", "x"}}, {{"s", "t"}}}) == ErrorCode::network);
    CHECK(code_of({{"s", "t"}, {{"s", "s"}}, {{"s", "t"}}}) == ErrorCode::network);
    CHECK(code_of({{"s", "t"}, {{"s", "t"}}, {{"s", "s"}}}) == ErrorCode::network);

    NetworkSpec backwards = fixtures::pigou_spec();
    backwards.od_pairs = {{"t", "s"}};
    CHECK_THROWS_WITH_AS(Network::build(backwards), doctest::Contains("unreachable OD pair"), Error);
}

TEST_CASE("enumerate_paths on parallel links gives an identity incidence") {
    const PathSet ps = enumerate_paths(Network::build(fixtures::pigou_spec()));
    REQUIRE(ps.block_size(0) == 2);
    CHECK(ps.path(0, 0) == Path{0});
    CHECK(ps.path(0, 1) == Path{1});
    const auto& m = ps.incidence(0);
    CHECK(m(0, 0) == 1.0);
    CHECK(m(1, 1) == 1.0);
    CHECK(m(0, 1) == 0.0);
    CHECK(m(1, 0) == 0.0);
}

TEST_CASE("enumerate_paths on the diamond and triangle matches the brute-force oracle") {
    const Network diamond = Network::build(fixtures::diamond_spec());
    const PathSet dps = enumerate_paths(diamond);
    REQUIRE(dps.block_size(0) == 2);
    CHECK(std::set<Path>(dps.paths(0).begin(), dps.paths(0).end()) == brute_force_paths(diamond, 0));
    for (std::size_t p = 0; p < 2; ++p) {
        double col = 0.0;
        for (std::size_t e = 0; e < diamond.edge_count(); ++e) col += dps.incidence(0)(e, p);
        CHECK(col == 2.0);
    }

    const Network tri = Network::build(fixtures::triangle_spec());
    const PathSet tps = enumerate_paths(tri);
    REQUIRE(tps.block_size(0) == 2);
    CHECK(std::set<Path>(tps.paths(0).begin(), tps.paths(0).end()) == brute_force_paths(tri, 0));
    const auto& m = tps.incidence(0);
    CHECK(m(0, 0) == 1.0);
    CHECK(m(1, 0) == 1.0);
    CHECK(m(2, 0) == 0.0);
    CHECK(m(0, 1) == 0.0);
    CHECK(m(1, 1) == 0.0);
    CHECK(m(2, 1) == 1.0);
}

TEST_CASE("enumerate_paths fails loudly when the path cap is exceeded") {
    // Complete DAG on 7 nodes: 2^5 = 32 paths from first to last.
    NetworkSpec spec;
    for (int v = 0; v < 7; ++v) spec.nodes.push_back("n" + std::to_string(v));
    for (int u = 0; u < 7; ++u) {
        for (int v = u + 1; v < 7; ++v) spec.edges.emplace_back(spec.nodes[u], spec.nodes[v]);
    }
    spec.od_pairs = {{"n0", "n6"}};
    const Network net = Network::build(spec);
    CHECK(enumerate_paths(net, 32).block_size(0) == 32);
    CHECK_THROWS_WITH_AS(enumerate_paths(net, 31), doctest::Contains("path cap"), Error);
}

TEST_CASE("enumerated paths are simple, sorted, deterministic and complete on random networks") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        const GameInstance game = fixtures::random_affine_game(rng, 5);
        const Network& net = game.network();
        const PathSet& ps = game.paths();
        const PathSet again = enumerate_paths(net);
        for (std::size_t i = 0; i < ps.od_count(); ++i) {
            const auto paths = ps.paths(i);
            CHECK(std::is_sorted(paths.begin(), paths.end()));
            CHECK(std::equal(paths.begin(), paths.end(), again.paths(i).begin(), again.paths(i).end()));
            CHECK(std::set<Path>(paths.begin(), paths.end()) == brute_force_paths(net, i));
            for (std::size_t p = 0; p < paths.size(); ++p) {
                std::set<std::size_t> visited{net.edges()[paths[p].front()].tail};
                for (std::size_t e : paths[p]) CHECK(visited.insert(net.edges()[e].head).second);
                double col = 0.0;
                for (std::size_t e = 0; e < net.edge_count(); ++e) col += ps.incidence(i)(e, p);
                CHECK(col == static_cast<double>(paths[p].size()));
            }
        }
    }
}
