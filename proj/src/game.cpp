#include "privroute/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "privroute/dynamics.hpp"
#include "privroute/error.hpp"

namespace privroute {

namespace {

void require(bool ok, ErrorCode code, const std::string& msg) {
    if (!ok) throw Error(code, msg);
}

void check_dimensions(const GameInstance& game, const FlowAllocation& x) {
    require(x.size() == game.population_count(), ErrorCode::invalid_argument,
            "allocation has " + std::to_string(x.size()) + " populations, game has " +
                std::to_string(game.population_count()));
    for (const auto& xk : x) {
        require(xk.size() == game.paths().total_paths(), ErrorCode::invalid_argument,
                "allocation block length does not match path count");
    }
}

}  // namespace

EdgeCost EdgeCost::affine(double slope, double intercept) {
    require(std::isfinite(slope) && std::isfinite(intercept) && slope >= 0.0 && intercept >= 0.0,
            ErrorCode::invalid_argument, "affine cost needs finite nonnegative slope and intercept");
    EdgeCost c;
    c.slope_ = slope;
    c.intercept_ = intercept;
    c.lipschitz_ = slope;
    return c;
}

EdgeCost EdgeCost::generic(Fn value, double lipschitz, std::optional<Fn> antiderivative) {
    require(static_cast<bool>(value), ErrorCode::invalid_argument, "generic cost needs a value function");
    require(std::isfinite(lipschitz) && lipschitz >= 0.0, ErrorCode::invalid_argument,
            "generic cost needs a finite nonnegative Lipschitz constant");
    EdgeCost c;
    c.value_ = std::move(value);
    c.lipschitz_ = lipschitz;
    c.antiderivative_ = std::move(antiderivative);
    return c;
}

double EdgeCost::operator()(double u) const { return value_ ? value_(u) : slope_ * u + intercept_; }

double EdgeCost::integral(double u) const {
    if (is_affine()) return 0.5 * slope_ * u * u + intercept_ * u;
    if (!antiderivative_) throw Error(ErrorCode::invalid_argument, "generic edge cost has no antiderivative");
    return (*antiderivative_)(u) - (*antiderivative_)(0.0);
}

GameInstance::GameInstance(Network network, PathSet paths, std::vector<EdgeCost> costs,
                           std::vector<std::vector<double>> theta, std::optional<double> mass_bound,
                           double adjacency_radius)
    : network_(std::move(network)),
      paths_(std::move(paths)),
      costs_(std::move(costs)),
      theta_(std::move(theta)),
      adjacency_radius_(adjacency_radius) {
    double largest = 0.0;
    for (const auto& row : theta_) {
        for (double v : row) largest = std::max(largest, v);
    }
    mass_bound_ = mass_bound.value_or(largest);
    validate();
}

void GameInstance::validate() const {
    require(costs_.size() == network_.edge_count(), ErrorCode::config,
            "expected " + std::to_string(network_.edge_count()) + " edge costs, got " + std::to_string(costs_.size()));
    require(paths_.od_count() == network_.od_count() && paths_.edge_count() == network_.edge_count(),
            ErrorCode::invalid_argument, "path set does not belong to this network");
    require(!theta_.empty(), ErrorCode::config, "game needs at least one population");
    for (std::size_t k = 0; k < theta_.size(); ++k) {
        require(theta_[k].size() == network_.od_count(), ErrorCode::config,
                "population " + std::to_string(k) + " mass vector must have one entry per OD pair");
        for (double v : theta_[k]) {
            require(std::isfinite(v) && v >= 0.0, ErrorCode::config,
                    "population " + std::to_string(k) + " has a negative or non-finite mass");
            require(v <= mass_bound_, ErrorCode::config,
                    "population " + std::to_string(k) + " mass exceeds the bound A_theta");
        }
    }
    require(std::isfinite(mass_bound_) && mass_bound_ >= 0.0, ErrorCode::config, "A_theta must be finite and >= 0");
    require(std::isfinite(adjacency_radius_) && adjacency_radius_ >= 0.0, ErrorCode::config,
            "adjacency radius must be finite and >= 0");

    // Spot-check generic costs on the feasible flow range.
    const double hi = std::max(total_mass(), 1.0);
    constexpr int kGrid = 64;
    for (std::size_t e = 0; e < costs_.size(); ++e) {
        const EdgeCost& c = costs_[e];
        if (c.is_affine()) continue;
        double prev = c(0.0);
        for (int j = 1; j <= kGrid; ++j) {
            const double u = hi * j / kGrid;
            const double v = c(u);
            require(std::isfinite(v) && v >= 0.0, ErrorCode::config,
                    "edge " + network_.edge_label(e) + " cost is negative or non-finite");
            require(v >= prev, ErrorCode::config, "edge " + network_.edge_label(e) + " cost is decreasing");
            require(v - prev <= c.lipschitz() * (hi / kGrid) * (1.0 + 1e-9) + 1e-12, ErrorCode::config,
                    "edge " + network_.edge_label(e) + " cost exceeds its declared Lipschitz constant");
            prev = v;
        }
    }
}

double GameInstance::total_mass() const {
    double total = 0.0;
    for (const auto& row : theta_) {
        for (double v : row) total += v;
    }
    return total;
}

GameInstance GameInstance::with_theta(std::vector<std::vector<double>> theta) const {
    return GameInstance(network_, paths_, costs_, std::move(theta), mass_bound_, adjacency_radius_);
}

GameInstance GameInstance::with_adjacency_radius(double c) const {
    return GameInstance(network_, paths_, costs_, theta_, mass_bound_, c);
}

GameInstance make_game(const NetworkSpec& spec, std::vector<EdgeCost> costs, std::vector<std::vector<double>> theta,
                       std::optional<double> mass_bound, double adjacency_radius, std::size_t path_cap) {
    Network net = Network::build(spec);
    PathSet paths = enumerate_paths(net, path_cap);
    return GameInstance(std::move(net), std::move(paths), std::move(costs), std::move(theta), mass_bound,
                        adjacency_radius);
}

FlowAllocation uniform_allocation(const PathSet& paths, std::size_t populations) {
    std::vector<double> xk(paths.total_paths());
    for (std::size_t i = 0; i < paths.od_count(); ++i) {
        auto block = paths.block(std::span<double>(xk), i);
        std::fill(block.begin(), block.end(), 1.0 / static_cast<double>(block.size()));
    }
    return FlowAllocation(populations, xk);
}

bool is_feasible(const PathSet& paths, const FlowAllocation& x, double tol) {
    for (const auto& xk : x) {
        if (xk.size() != paths.total_paths()) return false;
        for (std::size_t i = 0; i < paths.od_count(); ++i) {
            double sum = 0.0;
            for (double v : paths.block(std::span<const double>(xk), i)) {
                if (!(v >= 0.0) || !std::isfinite(v)) return false;
                sum += v;
            }
            if (std::abs(sum - 1.0) > tol) return false;
        }
    }
    return true;
}

void check_feasible(const PathSet& paths, const FlowAllocation& x, double tol) {
    require(is_feasible(paths, x, tol), ErrorCode::numeric, "allocation left the simplex product");
}

std::vector<double> edge_flows(const GameInstance& game, const FlowAllocation& x) {
    check_dimensions(game, x);
    const PathSet& paths = game.paths();
    std::vector<double> phi(paths.edge_count(), 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) {
        for (std::size_t i = 0; i < paths.od_count(); ++i) {
            const double mass = game.theta(k)[i];
            if (mass == 0.0) continue;
            for (std::size_t p = 0; p < paths.block_size(i); ++p) {
                const double w = mass * x[k][paths.offset(i) + p];
                for (std::size_t e : paths.path(i, p)) phi[e] += w;
            }
        }
    }
    return phi;
}

std::vector<double> path_losses(const GameInstance& game, std::span<const double> flows) {
    const PathSet& paths = game.paths();
    require(flows.size() == paths.edge_count(), ErrorCode::invalid_argument, "edge flow vector has wrong length");
    std::vector<double> edge_cost(flows.size());
    for (std::size_t e = 0; e < flows.size(); ++e) edge_cost[e] = game.costs()[e](flows[e]);

    std::vector<double> losses(paths.total_paths(), 0.0);
    for (std::size_t i = 0; i < paths.od_count(); ++i) {
        for (std::size_t p = 0; p < paths.block_size(i); ++p) {
            double sum = 0.0;
            for (std::size_t e : paths.path(i, p)) sum += edge_cost[e];
            losses[paths.offset(i) + p] = sum;
        }
    }
    return losses;
}

std::vector<double> path_losses(const GameInstance& game, const FlowAllocation& x) {
    return path_losses(game, edge_flows(game, x));
}

double potential(const GameInstance& game, const FlowAllocation& x) {
    const auto phi = edge_flows(game, x);
    double f = 0.0;
    for (std::size_t e = 0; e < phi.size(); ++e) f += game.costs()[e].integral(phi[e]);
    return f;
}

FlowAllocation potential_gradient(const GameInstance& game, const FlowAllocation& x) {
    const auto losses = path_losses(game, x);
    const PathSet& paths = game.paths();
    FlowAllocation grad(x.size(), std::vector<double>(paths.total_paths(), 0.0));
    for (std::size_t k = 0; k < x.size(); ++k) {
        for (std::size_t i = 0; i < paths.od_count(); ++i) {
            for (std::size_t j = paths.offset(i); j < paths.offset(i) + paths.block_size(i); ++j) {
                grad[k][j] = game.theta(k)[i] * losses[j];
            }
        }
    }
    return grad;
}

double theta_inner(const PathSet& paths, std::span<const double> x, std::span<const double> y,
                   std::span<const double> theta) {
    require(x.size() == paths.total_paths() && y.size() == paths.total_paths() && theta.size() == paths.od_count(),
            ErrorCode::invalid_argument, "theta_inner dimension mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < paths.od_count(); ++i) {
        double block = 0.0;
        for (std::size_t j = paths.offset(i); j < paths.offset(i) + paths.block_size(i); ++j) block += x[j] * y[j];
        total += theta[i] * block;
    }
    return total;
}

double nash_gap(const GameInstance& game, const FlowAllocation& x) {
    const auto losses = path_losses(game, x);
    const PathSet& paths = game.paths();
    double gap = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        for (std::size_t i = 0; i < paths.od_count(); ++i) {
            const double mass = game.theta(k)[i];
            if (mass == 0.0) continue;
            double current = 0.0;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = paths.offset(i); j < paths.offset(i) + paths.block_size(i); ++j) {
                current += x[k][j] * losses[j];
                best = std::min(best, losses[j]);
            }
            gap += mass * std::max(current - best, 0.0);
        }
    }
    return gap;
}

EquilibriumResult solve_equilibrium(const GameInstance& game, double tol, std::size_t max_iterations) {
    require(tol > 0.0 && std::isfinite(tol), ErrorCode::invalid_argument, "equilibrium tolerance must be positive");
    const PathSet& paths = game.paths();
    EquilibriumResult result;
    FlowAllocation x = uniform_allocation(paths, game.population_count());
    double f = potential(game, x);
    double step = 1.0;

    for (std::size_t it = 0; it < max_iterations; ++it) {
        const double gap = nash_gap(game, x);
        if (gap <= tol) {
            result.allocation = std::move(x);
            result.potential = f;
            result.gap = gap;
            result.iterations = it;
            return result;
        }
        const FlowAllocation grad = potential_gradient(game, x);

        // Backtrack until the quadratic upper model holds at the trial point.
        for (;;) {
            FlowAllocation trial = x;
            double linear = 0.0;
            double dist2 = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) {
                for (std::size_t i = 0; i < paths.od_count(); ++i) {
                    auto block = paths.block(std::span<double>(trial[k]), i);
                    auto g = paths.block(std::span<const double>(grad[k]), i);
                    for (std::size_t p = 0; p < block.size(); ++p) block[p] -= step * g[p];
                    project_to_simplex(block);
                }
                for (std::size_t j = 0; j < trial[k].size(); ++j) {
                    const double d = trial[k][j] - x[k][j];
                    linear += grad[k][j] * d;
                    dist2 += d * d;
                }
            }
            const double f_trial = potential(game, trial);
            if (f_trial <= f + linear + dist2 / (2.0 * step) + 1e-15 * std::abs(f) || step < 1e-14) {
                x = std::move(trial);
                f = f_trial;
                break;
            }
            step *= 0.5;
        }
        step = std::min(step * 1.25, 1e6);
    }
    throw Error(ErrorCode::convergence,
                "equilibrium solver exhausted " + std::to_string(max_iterations) + " iterations before reaching tol");
}

}  // namespace privroute
