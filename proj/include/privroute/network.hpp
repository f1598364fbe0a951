#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace privroute {

/// Textual description of a road network as ingested from config files.
struct NetworkSpec {
    std::vector<std::string> nodes;
    std::vector<std::pair<std::string, std::string>> edges;
    std::vector<std::pair<std::string, std::string>> od_pairs;
};

struct Edge {
    std::size_t tail;
    std::size_t head;
};

struct OdPair {
    std::size_t origin;
    std::size_t destination;
};

/// Directed graph with named nodes, indexed edges and origin-destination
/// pairs. Immutable once built.
class Network {
public:
    /// Validates the spec. Throws Error(network) on duplicate nodes, dangling
    /// edge endpoints, self-loops, or an OD pair with no connecting path.
    static Network build(const NetworkSpec& spec);

    std::size_t node_count() const { return names_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    std::size_t od_count() const { return ods_.size(); }

    const std::string& node_name(std::size_t v) const { return names_.at(v); }
    std::span<const Edge> edges() const { return edges_; }
    std::span<const OdPair> od_pairs() const { return ods_; }

    /// Edge indices leaving v, ascending.
    std::span<const std::size_t> out_edges(std::size_t v) const { return out_.at(v); }

    std::string edge_label(std::size_t e) const;

private:
    std::vector<std::string> names_;
    std::vector<Edge> edges_;
    std::vector<OdPair> ods_;
    std::vector<std::vector<std::size_t>> out_;
};

/// A path is the sequence of edge indices traversed from origin to destination.
using Path = std::vector<std::size_t>;

/// Dense 0/1 edge-path incidence matrix, |E| rows by |P_i| columns.
class IncidenceMatrix {
public:
    IncidenceMatrix() = default;
    IncidenceMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double operator()(std::size_t e, std::size_t p) const { return data_[p * rows_ + e]; }
    double& operator()(std::size_t e, std::size_t p) { return data_[p * rows_ + e]; }

    /// Column-major storage.
    std::span<const double> data() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Simple paths for every OD pair plus their incidence matrices. Path vectors
/// downstream are flat, concatenated over OD blocks in OD order; offset(i)
/// gives the start of block i.
class PathSet {
public:
    static constexpr std::size_t kDefaultCap = 10000;

    PathSet() = default;
    PathSet(std::size_t edge_count, std::vector<std::vector<Path>> per_od);

    std::size_t od_count() const { return paths_.size(); }
    std::size_t edge_count() const { return edge_count_; }
    std::size_t total_paths() const { return offsets_.back(); }

    std::span<const Path> paths(std::size_t od) const { return paths_.at(od); }
    const Path& path(std::size_t od, std::size_t p) const { return paths_.at(od).at(p); }
    std::size_t block_size(std::size_t od) const { return paths_.at(od).size(); }
    std::size_t offset(std::size_t od) const { return offsets_.at(od); }
    const IncidenceMatrix& incidence(std::size_t od) const { return incidence_.at(od); }

    /// Sub-span of a flat path vector belonging to OD block od.
    template <typename T>
    std::span<T> block(std::span<T> flat, std::size_t od) const {
        return flat.subspan(offsets_[od], paths_[od].size());
    }

private:
    std::size_t edge_count_ = 0;
    std::vector<std::vector<Path>> paths_;
    std::vector<std::size_t> offsets_{0};
    std::vector<IncidenceMatrix> incidence_;
};

/// All simple origin-destination paths, found by depth-first search with
/// visited-node pruning. Paths within an OD pair are sorted lexicographically
/// by edge index sequence. Throws Error(network) when an OD pair has more
/// than `cap` paths.
PathSet enumerate_paths(const Network& net, std::size_t cap = PathSet::kDefaultCap);

}  // namespace privroute
