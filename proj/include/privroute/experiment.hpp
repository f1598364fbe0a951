#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "privroute/dynamics.hpp"
#include "privroute/game.hpp"
#include "privroute/network.hpp"
#include "privroute/privacy.hpp"
#include "privroute/sim.hpp"

namespace privroute {

struct PopulationConfig {
    std::string name;
    std::vector<double> theta;
    PopulationLearner learner;
};

struct SimulationBlock {
    std::size_t iterations = 200;
    std::size_t runs = 150;
    std::uint64_t seed = 1;
    std::vector<double> sigmas{0.01, 0.1, 0.4};
    std::size_t slope_first = 0;  // 0/0 selects [T/4, T]
    std::size_t slope_last = 0;
    double equilibrium_tol = 1e-8;
    std::size_t threads = 0;
};

struct PrivacyBlock {
    double adjacency_radius = 1e-6;  // c
    double clip = 2.0;               // a
    double delta_budget = 1e-3;
    DeltaSplit split = DeltaSplit::uniform;
    bool paper_variant = false;
    /// (c, sigma) pairs for accountant curves.
    std::vector<std::pair<double, double>> pairs;
    std::size_t t_first = 1;
    std::size_t t_last = 200;
    std::size_t t_stride = 1;
};

/// Everything a config file describes. Parsing rejects unknown keys.
struct ExperimentConfig {
    std::string description;
    NetworkSpec network;
    std::vector<std::pair<double, double>> affine_costs;  // (slope, intercept) per edge
    std::vector<PopulationConfig> populations;
    std::optional<double> mass_bound;
    std::size_t path_cap = PathSet::kDefaultCap;
    SimulationBlock simulation;
    PrivacyBlock privacy;
    std::string output_dir;

    static ExperimentConfig parse(const std::string& json_text);
    static ExperimentConfig load(const std::string& path);

    /// Effective configuration, including defaults and applied overrides.
    std::string to_json() const;

    GameInstance build_game() const;
    std::vector<PopulationLearner> learners() const;
    SimulationConfig simulation_config(double sigma) const;
    AccountantOptions accountant_options(double sigma, std::size_t iterations) const;
};

/// Constants report with a short derivation string per constant.
std::string constants_json(const ExperimentConfig& cfg);

/// Equilibrium allocation, potential and certifying gap.
std::string equilibrium_json(const ExperimentConfig& cfg, double tol);

/// Manifest for one simulate invocation. The timestamp is the only field that
/// is not a function of the config.
std::string manifest_json(const ExperimentConfig& cfg, const EnsembleStats& stats, const std::string& timestamp);

/// Full privacy report (constants, per-step arrays, composed guarantee).
std::string privacy_report_json(const PrivacyReport& report);

/// CSV rows c,sigma,T,epsilon,delta,delta_tail,valid,trivial for T in
/// [t_first, t_last] with the given stride.
std::string accountant_curve_csv(const ExperimentConfig& cfg, double c, double sigma, std::size_t t_first,
                                 std::size_t t_last, std::size_t stride, bool header = true);

}  // namespace privroute
