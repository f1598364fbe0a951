#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "privroute/network.hpp"

namespace privroute {

/// Distance generating function of a population, applied per OD simplex.
enum class Geometry {
    entropic,   ///< negative entropy; divergence is KL
    euclidean,  ///< half squared l2 norm
};

Geometry parse_geometry(std::string_view name);
std::string_view to_string(Geometry g);

/// eta(t) = scale * (t + 1)^(-decay) for a 0-based iteration counter t.
struct LearningSchedule {
    double scale = 1.0;
    double decay = 0.5;

    double rate(std::size_t t) const;
    /// Throws unless scale > 0 and decay lies in (0, 1).
    void validate() const;
};

struct PopulationLearner {
    Geometry geometry = Geometry::entropic;
    LearningSchedule schedule;
};

// The reference norm on a flat path vector is the sum of per-OD l2 norms.
// Its dual is the largest per-OD l2 norm.
double reference_norm(const PathSet& paths, std::span<const double> x);
double dual_norm(const PathSet& paths, std::span<const double> loss);

/// Strong-convexity modulus of either geometry with respect to the
/// reference norm on the simplex product: 1 / (number of OD pairs).
double strong_convexity_modulus(Geometry g, const PathSet& paths);

/// Largest divergence D(x, x0) from the uniform start x0 over the simplex
/// product: sum_i ln|P_i| (entropic) or sum_i (1 - 1/|P_i|)/2 (euclidean).
double divergence_bound(Geometry g, const PathSet& paths);

/// Bregman divergence D(x, y), summed over OD blocks. Entropic requires y > 0.
double bregman(Geometry g, const PathSet& paths, std::span<const double> x, std::span<const double> y);

/// Euclidean projection onto the probability simplex, in place.
void project_to_simplex(std::span<double> v);

/// One mirror-descent step for a single population:
/// argmin over the simplex product of <loss, z>_theta + D(z, x) / eta.
std::vector<double> smd_update(Geometry g, const PathSet& paths, double eta, std::span<const double> x,
                               std::span<const double> theta, std::span<const double> loss);

std::vector<double> smd_update(const PopulationLearner& learner, const PathSet& paths, std::size_t t,
                               std::span<const double> x, std::span<const double> theta,
                               std::span<const double> loss);

/// Per-population inputs to the expected-suboptimality bound.
struct BoundTerm {
    double divergence_bound;  // D_k
    double scale;             // c_k
    double decay;             // alpha_k
    double modulus;           // l_psi_k
};

/// (1 + H_t) * sum_k [ D_k / (c_k t^(1-a_k)) + c_k L / (2 l_k (1-a_k) t^(a_k)) ]
/// where H_t is the t-th harmonic number and L bounds E||loss||_*^2.
double suboptimality_bound(std::span<const BoundTerm> terms, double second_moment, std::size_t t);

/// Conservative L for Gaussian-noised losses bounded by M in sup norm:
/// (total paths) * (M^2 + sigma^2).
double loss_second_moment_bound(std::size_t total_paths, double loss_bound, double sigma);

}  // namespace privroute
