#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "privroute/dynamics.hpp"
#include "privroute/game.hpp"

namespace privroute {

using Rng = std::mt19937_64;

/// Seed of Monte Carlo run `run` derived from the master seed by two rounds
/// of the splitmix64 finalizer: splitmix(splitmix(master) ^ run).
std::uint64_t run_seed(std::uint64_t master, std::uint64_t run);

struct SimulationConfig {
    std::vector<PopulationLearner> learners;
    double sigma = 0.0;
    std::size_t iterations = 200;  // T
    std::size_t runs = 1;
    std::uint64_t seed = 0;
    /// Worker threads for monte_carlo; 0 picks the hardware concurrency.
    std::size_t threads = 0;
    /// Inclusive window of iterations for the log-log slope fit; 0 means
    /// the default [T/4, T].
    std::size_t slope_first = 0;
    std::size_t slope_last = 0;
    double equilibrium_tol = 1e-8;
    bool keep_runs = false;

    void validate(const GameInstance& game) const;
};

/// loss + i.i.d. N(0, sigma^2) per coordinate, drawn in path order.
std::vector<double> observe_losses(std::span<const double> loss, double sigma, Rng& rng);

/// One trajectory. Row t-1 of every series describes x^(t), the state after
/// t updates, for t = 1..T.
struct RunRecord {
    std::uint64_t seed = 0;
    std::vector<double> potential;
    std::vector<double> gap;
    std::vector<FlowAllocation> allocations;
    /// released[t] is the noisy loss vector observed before update t.
    std::vector<std::vector<double>> released;
    bool feasible = true;
};

RunRecord run_trajectory(const GameInstance& game, const SimulationConfig& cfg, std::uint64_t seed);

struct EnsembleStats {
    std::size_t iterations = 0;
    std::size_t runs = 0;
    double sigma = 0.0;
    std::vector<double> f_mean;
    std::vector<double> f_std;
    std::vector<double> gap_mean;
    /// mean_flow[t][k][j] = mean over runs of (theta_k)_i (x_k)_j at x^(t+1).
    std::vector<std::vector<std::vector<double>>> mean_flow;
    double f_star = 0.0;
    double equilibrium_gap = 0.0;
    std::size_t slope_first = 0;
    std::size_t slope_last = 0;
    double slope = 0.0;
    bool feasible = true;
    std::vector<std::uint64_t> seeds;
    std::vector<RunRecord> records;  // only when cfg.keep_runs
};

/// Runs cfg.runs independent trajectories and aggregates them. When f_star is
/// not given it is computed with solve_equilibrium at cfg.equilibrium_tol.
EnsembleStats monte_carlo(const GameInstance& game, const SimulationConfig& cfg,
                          std::optional<double> f_star = std::nullopt);

/// Least-squares slope of log(values[t-1] - offset) against log t over the
/// inclusive window; points with nonpositive differences are skipped.
/// Returns NaN with fewer than two usable points.
double fit_loglog_slope(std::span<const double> values, double offset, std::size_t first, std::size_t last);

/// Ensemble CSV: t, f_mean, f_std, gap_mean, flow[k][j]...
std::string ensemble_csv(const EnsembleStats& stats);
/// Single-run CSV: t, f, gap, flow[k][j]..., lhat[j]...
std::string run_csv(const GameInstance& game, const RunRecord& record);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace privroute
