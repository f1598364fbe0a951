#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "privroute/network.hpp"

namespace privroute {

/// Nondecreasing, Lipschitz edge travel-time function c_e.
class EdgeCost {
public:
    using Fn = std::function<double(double)>;

    /// c(u) = slope * u + intercept, slope and intercept nonnegative.
    static EdgeCost affine(double slope, double intercept);

    /// User-supplied cost with its declared Lipschitz constant. Without an
    /// antiderivative the potential cannot be evaluated for this edge.
    static EdgeCost generic(Fn value, double lipschitz, std::optional<Fn> antiderivative = std::nullopt);

    double operator()(double u) const;
    /// Integral of the cost from 0 to u.
    double integral(double u) const;
    double lipschitz() const { return lipschitz_; }

    bool is_affine() const { return !value_; }
    bool has_antiderivative() const { return is_affine() || antiderivative_.has_value(); }
    double slope() const { return slope_; }
    double intercept() const { return intercept_; }

private:
    double slope_ = 0.0;
    double intercept_ = 0.0;
    double lipschitz_ = 0.0;
    Fn value_;
    std::optional<Fn> antiderivative_;
};

/// Per-population path distributions. Each entry is a flat vector over all
/// paths (see PathSet::offset), lying on the product of simplices.
using FlowAllocation = std::vector<std::vector<double>>;

/// Routing game: network, path set, edge costs and the private mass vectors
/// theta_k (one row per population, one column per OD pair).
class GameInstance {
public:
    GameInstance(Network network, PathSet paths, std::vector<EdgeCost> costs, std::vector<std::vector<double>> theta,
                 std::optional<double> mass_bound = std::nullopt, double adjacency_radius = 0.0);

    const Network& network() const { return network_; }
    const PathSet& paths() const { return paths_; }
    std::span<const EdgeCost> costs() const { return costs_; }
    const std::vector<std::vector<double>>& theta() const { return theta_; }
    std::span<const double> theta(std::size_t k) const { return theta_.at(k); }
    std::size_t population_count() const { return theta_.size(); }

    /// A_theta: common-knowledge bound on every (theta_k)_i.
    double mass_bound() const { return mass_bound_; }
    /// Adjacency radius c of the privacy relation.
    double adjacency_radius() const { return adjacency_radius_; }
    /// Sum of all masses; the largest flow any single edge can carry.
    double total_mass() const;

    /// Same network and costs with different masses (validated against A_theta).
    GameInstance with_theta(std::vector<std::vector<double>> theta) const;
    GameInstance with_adjacency_radius(double c) const;

private:
    void validate() const;

    Network network_;
    PathSet paths_;
    std::vector<EdgeCost> costs_;
    std::vector<std::vector<double>> theta_;
    double mass_bound_ = 0.0;
    double adjacency_radius_ = 0.0;
};

/// Builds a game from a network description, enumerating paths.
GameInstance make_game(const NetworkSpec& spec, std::vector<EdgeCost> costs, std::vector<std::vector<double>> theta,
                       std::optional<double> mass_bound = std::nullopt, double adjacency_radius = 0.0,
                       std::size_t path_cap = PathSet::kDefaultCap);

/// Uniform distribution on every simplex, for `populations` populations.
FlowAllocation uniform_allocation(const PathSet& paths, std::size_t populations);

/// Throws unless every block of every population is a distribution within tol.
void check_feasible(const PathSet& paths, const FlowAllocation& x, double tol = 1e-12);
bool is_feasible(const PathSet& paths, const FlowAllocation& x, double tol = 1e-12);

std::vector<double> edge_flows(const GameInstance& game, const FlowAllocation& x);
std::vector<double> path_losses(const GameInstance& game, std::span<const double> flows);
/// Path losses at allocation x.
std::vector<double> path_losses(const GameInstance& game, const FlowAllocation& x);

/// Rosenthal potential: sum over edges of the integral of c_e up to phi_e.
double potential(const GameInstance& game, const FlowAllocation& x);

/// Block k is theta-scaled path losses: (theta_k)_i * l_p for p in P_i.
FlowAllocation potential_gradient(const GameInstance& game, const FlowAllocation& x);

/// <x, y>_theta = sum_i theta_i sum_{p in P_i} x_p y_p
double theta_inner(const PathSet& paths, std::span<const double> x, std::span<const double> y,
                   std::span<const double> theta);

/// Total amount by which populations could lower their theta-weighted cost by
/// moving to a cheapest path in each OD. Zero exactly at Nash equilibria.
double nash_gap(const GameInstance& game, const FlowAllocation& x);

struct EquilibriumResult {
    FlowAllocation allocation;
    double potential = 0.0;
    double gap = 0.0;
    std::size_t iterations = 0;
};

/// Minimizes the potential by noiseless projected (Euclidean mirror) descent
/// with backtracking step sizes until nash_gap <= tol. Throws
/// Error(convergence) if max_iterations is exhausted.
EquilibriumResult solve_equilibrium(const GameInstance& game, double tol, std::size_t max_iterations = 2'000'000);

}  // namespace privroute
