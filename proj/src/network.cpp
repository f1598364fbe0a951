#include "privroute/network.hpp"

#include <algorithm>
#include <queue>
#include <unordered_map>

#include "privroute/error.hpp"

namespace privroute {

namespace {

Error network_error(const std::string& msg) { return Error(ErrorCode::network, msg); }

bool reachable(const Network& net, std::size_t from, std::size_t to) {
    std::vector<bool> seen(net.node_count(), false);
    std::queue<std::size_t> frontier;
    frontier.push(from);
    seen[from] = true;
    while (!frontier.empty()) {
        const std::size_t v = frontier.front();
        frontier.pop();
        if (v == to) return true;
        for (std::size_t e : net.out_edges(v)) {
            const std::size_t w = net.edges()[e].head;
            if (!seen[w]) {
                seen[w] = true;
                frontier.push(w);
            }
        }
    }
    return false;
}

}  // namespace

Network Network::build(const NetworkSpec& spec) {
    Network net;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& name : spec.nodes) {
        if (!index.emplace(name, net.names_.size()).second) throw network_error("duplicate node '" + name + "'");
        net.names_.push_back(name);
    }
    auto lookup = [&](const std::string& name, const std::string& context) {
        auto it = index.find(name);
        if (it == index.end()) throw network_error(context + " references unknown node '" + name + "'");
        return it->second;
    };

    net.out_.resize(net.names_.size());
    for (std::size_t e = 0; e < spec.edges.size(); ++e) {
        const auto& [tail, head] = spec.edges[e];
        const std::string ctx = "edge " + std::to_string(e);
        Edge edge{lookup(tail, ctx), lookup(head, ctx)};
        if (edge.tail == edge.head) throw network_error(ctx + " is a self-loop at '" + tail + "'");
        net.out_[edge.tail].push_back(e);
        net.edges_.push_back(edge);
    }

    for (std::size_t i = 0; i < spec.od_pairs.size(); ++i) {
        const auto& [o, d] = spec.od_pairs[i];
        const std::string ctx = "od pair " + std::to_string(i);
        OdPair od{lookup(o, ctx), lookup(d, ctx)};
        if (od.origin == od.destination) throw network_error(ctx + " has identical origin and destination");
        net.ods_.push_back(od);
    }
    if (net.ods_.empty()) throw network_error("network has no od pairs");

    for (std::size_t i = 0; i < net.ods_.size(); ++i) {
        if (!reachable(net, net.ods_[i].origin, net.ods_[i].destination)) {
            throw network_error("unreachable OD pair " + std::to_string(i) + " (" + net.names_[net.ods_[i].origin] +
                                " -> " + net.names_[net.ods_[i].destination] + ")");
        }
    }
    return net;
}

std::string Network::edge_label(std::size_t e) const {
    const Edge& edge = edges_.at(e);
    return names_[edge.tail] + "->" + names_[edge.head];
}

PathSet::PathSet(std::size_t edge_count, std::vector<std::vector<Path>> per_od)
    : edge_count_(edge_count), paths_(std::move(per_od)) {
    for (const auto& block : paths_) {
        offsets_.push_back(offsets_.back() + block.size());
        IncidenceMatrix m(edge_count_, block.size());
        for (std::size_t p = 0; p < block.size(); ++p) {
            for (std::size_t e : block[p]) m(e, p) = 1.0;
        }
        incidence_.push_back(std::move(m));
    }
}

PathSet enumerate_paths(const Network& net, std::size_t cap) {
    std::vector<std::vector<Path>> per_od;
    per_od.reserve(net.od_count());

    for (std::size_t i = 0; i < net.od_count(); ++i) {
        const OdPair od = net.od_pairs()[i];
        std::vector<Path> found;
        std::vector<bool> on_path(net.node_count(), false);
        Path current;

        // Iterative DFS; each frame remembers the next out-edge to try.
        struct Frame {
            std::size_t node;
            std::size_t next = 0;
        };
        std::vector<Frame> stack{{od.origin}};
        on_path[od.origin] = true;
        while (!stack.empty()) {
            Frame& top = stack.back();
            const auto out = net.out_edges(top.node);
            if (top.next == out.size()) {
                on_path[top.node] = false;
                stack.pop_back();
                if (!current.empty()) current.pop_back();
                continue;
            }
            const std::size_t e = out[top.next++];
            const std::size_t w = net.edges()[e].head;
            if (on_path[w]) continue;
            if (w == od.destination) {
                current.push_back(e);
                found.push_back(current);
                current.pop_back();
                if (found.size() > cap) {
                    throw network_error("OD pair " + std::to_string(i) + " has more than " + std::to_string(cap) +
                                        " simple paths (path cap exceeded)");
                }
                continue;
            }
            current.push_back(e);
            on_path[w] = true;
            stack.push_back({w});
        }

        if (found.empty()) throw network_error("unreachable OD pair " + std::to_string(i));
        std::sort(found.begin(), found.end());
        per_od.push_back(std::move(found));
    }
    return PathSet(net.edge_count(), std::move(per_od));
}

}  // namespace privroute
