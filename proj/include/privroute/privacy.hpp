#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "privroute/dynamics.hpp"
#include "privroute/game.hpp"

namespace privroute {

/// Largest singular value of an incidence matrix by power iteration on M^T M.
/// Throws Error(numeric) for an all-zero matrix or if iteration stalls.
double spectral_norm(const IncidenceMatrix& m, double rel_tol = 1e-10, std::size_t max_iterations = 100000);

/// A_x = sup over ||x|| <= 1 of ||sum_i M_i x_i||_2. With the summed per-block
/// reference norm the supremum sits on a single block: max_i sigma_max(M_i).
double compute_A_x(const PathSet& paths);

/// A_Delta = sup of the reference norm over the simplex product (= I).
double compute_A_delta(const PathSet& paths);

/// Lipschitz bound for phi -> (M_i^T c(phi))_i from l2 to the reference norm:
/// (sum_i sigma_max(M_i)) * max_e lambda_e.
double compute_A_ell(const GameInstance& game);

/// M = max_p sum_{e in p} c_e(total mass). Bounds ||l(x)||_inf on the
/// feasible set because costs are nondecreasing.
double compute_loss_bound_M(const GameInstance& game);

struct SensitivityConstants {
    double mass_bound = 0.0;        // A_theta
    double adjacency_radius = 0.0;  // c
    double A_delta = 0.0;
    double A_x = 0.0;
    double A_ell = 0.0;
    double loss_bound = 0.0;  // M
    std::vector<double> moduli;  // l_psi_k per population
    double min_modulus = 0.0;
    std::size_t total_paths = 0;
};

SensitivityConstants sensitivity_constants(const GameInstance& game, std::span<const PopulationLearner> learners);

/// Displacement bound for one population's update when its mass vector moves
/// by dtheta_inf in sup norm: eta * ||loss||_* * dtheta_inf / modulus.
double update_sensitivity_bound(double eta, double loss_dual_norm, double modulus, double dtheta_inf);

/// Edge-flow displacement bound between adjacent mass profiles after one update:
/// c * A_x * [A_Delta + A_theta * eta * ||loss||_* / modulus].
double flow_sensitivity_bound(const SensitivityConstants& k, double eta, double loss_dual_norm, double modulus);

/// l2 sensitivity of a released loss vector:
/// c * A_ell * A_x * [A_Delta + A_theta * eta_max * ||loss||_* / min modulus].
double per_step_sensitivity(const SensitivityConstants& k, double eta_max, double loss_dual_bound);

/// sqrt(total paths) * (M + a): bound on ||loss_hat||_* while every noise
/// coordinate stays within [-a, a].
double clipped_loss_dual_bound(const SensitivityConstants& k, double clip);

/// Largest learning rate across populations at 0-based iteration t.
double max_rate(std::span<const PopulationLearner> learners, std::size_t t);

struct GaussianStep {
    double epsilon = 0.0;
    bool valid = false;
};

/// Inverts the Gaussian-mechanism calibration sigma >= b * sensitivity / eps
/// with b^2 = 2 ln(1.25 / delta). paper_variant divides by sigma^2 instead.
/// valid is true iff the result is in (0, 1), or the sensitivity is zero.
GaussianStep gaussian_epsilon(double sensitivity, double sigma, double delta, bool paper_variant = false);

/// Probability that some of `observations` Gaussian coordinates leaves
/// [-a, a]: 1 - (1 - 2 exp(-a^2 / 2 sigma^2))^observations.
double tail_delta(double sigma, double clip, std::uint64_t observations);

struct StepPrivacy {
    double sensitivity = 0.0;
    double epsilon = 0.0;
    double delta = 0.0;
    bool valid = true;
};

struct PrivacyReport {
    SensitivityConstants constants;
    double sigma = 0.0;
    double clip = 0.0;  // a
    bool paper_variant = false;
    std::vector<StepPrivacy> steps;
    double delta_tail = 0.0;
    double epsilon = 0.0;
    double delta = 0.0;
    bool valid = true;    // every step satisfies the mechanism preconditions
    bool trivial = false;  // delta >= 1
};

/// Repeated adaptive composition of per-step guarantees plus the tail mass:
/// eps = sum eps_t, delta = sum_t exp(sum_{t' > t} eps_t') delta_t + delta_tail.
PrivacyReport compose(std::span<const StepPrivacy> steps, double delta_tail);

enum class DeltaSplit {
    uniform,   ///< delta_t = budget / T
    constant,  ///< delta_t = budget for every step
};

DeltaSplit parse_delta_split(std::string_view name);
std::string_view to_string(DeltaSplit s);

struct AccountantOptions {
    double sigma = 0.1;
    double clip = 2.0;
    std::size_t iterations = 200;
    double delta_budget = 1e-3;
    DeltaSplit split = DeltaSplit::uniform;
    bool paper_variant = false;
};

/// Full (epsilon, delta) guarantee for releasing T noisy loss vectors. Release
/// t in 1..T follows the update with learning rate eta at 0-based index t-1.
PrivacyReport accountant(const GameInstance& game, std::span<const PopulationLearner> learners,
                         const AccountantOptions& options);

/// Same as accountant() with precomputed constants.
PrivacyReport accountant(const SensitivityConstants& constants, std::span<const PopulationLearner> learners,
                         const AccountantOptions& options);

}  // namespace privroute
