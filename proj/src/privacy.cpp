#include "privroute/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "privroute/error.hpp"

namespace privroute {

namespace {

void require(bool ok, ErrorCode code, const std::string& msg) {
    if (!ok) throw Error(code, msg);
}

}  // namespace

double spectral_norm(const IncidenceMatrix& m, double rel_tol, std::size_t max_iterations) {
    const std::size_t rows = m.rows();
    const std::size_t cols = m.cols();
    require(cols > 0 && rows > 0, ErrorCode::numeric, "spectral norm of an empty matrix");
    bool nonzero = false;
    for (double v : m.data()) nonzero = nonzero || v != 0.0;
    require(nonzero, ErrorCode::numeric, "spectral norm power iteration on an all-zero incidence matrix");

    // Start from the all-ones vector; M^T M is entrywise nonnegative, so it
    // overlaps the Perron eigenvector.
    std::vector<double> v(cols, 1.0 / std::sqrt(static_cast<double>(cols)));
    std::vector<double> mv(rows);
    std::vector<double> w(cols);
    for (std::size_t it = 0; it < max_iterations; ++it) {
        std::fill(mv.begin(), mv.end(), 0.0);
        for (std::size_t p = 0; p < cols; ++p) {
            for (std::size_t e = 0; e < rows; ++e) mv[e] += m(e, p) * v[p];
        }
        double rayleigh = 0.0;
        for (double x : mv) rayleigh += x * x;
        double residual = 0.0;
        double norm_w = 0.0;
        for (std::size_t p = 0; p < cols; ++p) {
            double s = 0.0;
            for (std::size_t e = 0; e < rows; ++e) s += m(e, p) * mv[e];
            w[p] = s;
            residual += (s - rayleigh * v[p]) * (s - rayleigh * v[p]);
            norm_w += s * s;
        }
        norm_w = std::sqrt(norm_w);
        require(norm_w > 0.0, ErrorCode::numeric, "power iteration collapsed to zero");
        if (std::sqrt(residual) <= rel_tol * rayleigh) return std::sqrt(rayleigh);
        for (std::size_t p = 0; p < cols; ++p) v[p] = w[p] / norm_w;
    }
    throw Error(ErrorCode::numeric, "power iteration did not converge");
}

double compute_A_x(const PathSet& paths) {
    double best = 0.0;
    for (std::size_t i = 0; i < paths.od_count(); ++i) best = std::max(best, spectral_norm(paths.incidence(i)));
    return best;
}

double compute_A_delta(const PathSet& paths) { return static_cast<double>(paths.od_count()); }

double compute_A_ell(const GameInstance& game) {
    double lambda = 0.0;
    for (const EdgeCost& c : game.costs()) {
        require(std::isfinite(c.lipschitz()), ErrorCode::config, "edge cost is missing a Lipschitz constant");
        lambda = std::max(lambda, c.lipschitz());
    }
    double spectral_sum = 0.0;
    const PathSet& paths = game.paths();
    for (std::size_t i = 0; i < paths.od_count(); ++i) spectral_sum += spectral_norm(paths.incidence(i));
    return spectral_sum * lambda;
}

double compute_loss_bound_M(const GameInstance& game) {
    const double worst_flow = game.total_mass();
    std::vector<double> edge_cost;
    edge_cost.reserve(game.costs().size());
    for (const EdgeCost& c : game.costs()) edge_cost.push_back(c(worst_flow));

    const PathSet& paths = game.paths();
    double bound = 0.0;
    for (std::size_t i = 0; i < paths.od_count(); ++i) {
        for (const Path& p : paths.paths(i)) {
            double sum = 0.0;
            for (std::size_t e : p) sum += edge_cost[e];
            bound = std::max(bound, sum);
        }
    }
    return bound;
}

SensitivityConstants sensitivity_constants(const GameInstance& game, std::span<const PopulationLearner> learners) {
    require(learners.size() == game.population_count(), ErrorCode::config,
            "need one learner per population (got " + std::to_string(learners.size()) + ")");
    SensitivityConstants k;
    k.mass_bound = game.mass_bound();
    k.adjacency_radius = game.adjacency_radius();
    k.A_delta = compute_A_delta(game.paths());
    k.A_x = compute_A_x(game.paths());
    k.A_ell = compute_A_ell(game);
    k.loss_bound = compute_loss_bound_M(game);
    k.total_paths = game.paths().total_paths();
    for (const PopulationLearner& l : learners) k.moduli.push_back(strong_convexity_modulus(l.geometry, game.paths()));
    k.min_modulus = *std::min_element(k.moduli.begin(), k.moduli.end());
    return k;
}

double update_sensitivity_bound(double eta, double loss_dual_norm, double modulus, double dtheta_inf) {
    require(eta >= 0.0 && loss_dual_norm >= 0.0 && dtheta_inf >= 0.0 && modulus > 0.0, ErrorCode::invalid_argument,
            "update sensitivity bound needs nonnegative inputs and a positive modulus");
    return eta * loss_dual_norm * dtheta_inf / modulus;
}

double flow_sensitivity_bound(const SensitivityConstants& k, double eta, double loss_dual_norm, double modulus) {
    return k.adjacency_radius * k.A_x * (k.A_delta + k.mass_bound * eta * loss_dual_norm / modulus);
}

double per_step_sensitivity(const SensitivityConstants& k, double eta_max, double loss_dual_bound) {
    require(k.min_modulus > 0.0, ErrorCode::invalid_argument, "minimum strong-convexity modulus must be positive");
    return k.adjacency_radius * k.A_ell * k.A_x *
           (k.A_delta + k.mass_bound * eta_max * loss_dual_bound / k.min_modulus);
}

double clipped_loss_dual_bound(const SensitivityConstants& k, double clip) {
    return std::sqrt(static_cast<double>(k.total_paths)) * (k.loss_bound + clip);
}

double max_rate(std::span<const PopulationLearner> learners, std::size_t t) {
    double eta = 0.0;
    for (const PopulationLearner& l : learners) eta = std::max(eta, l.schedule.rate(t));
    return eta;
}

GaussianStep gaussian_epsilon(double sensitivity, double sigma, double delta, bool paper_variant) {
    require(sigma > 0.0 && std::isfinite(sigma), ErrorCode::invalid_argument, "noise level sigma must be positive");
    require(sensitivity >= 0.0 && std::isfinite(sensitivity), ErrorCode::invalid_argument,
            "sensitivity must be finite and >= 0");
    require(delta > 0.0, ErrorCode::invalid_argument, "per-step delta must be positive");
    require(delta <= 1.25, ErrorCode::invalid_argument, "per-step delta must not exceed 1.25");

    const double b = std::sqrt(2.0 * std::log(1.25 / delta));
    const double scale = paper_variant ? sigma * sigma : sigma;
    GaussianStep step;
    step.epsilon = sensitivity * b / scale;
    if (sensitivity == 0.0) {
        step.valid = b > 0.0;
    } else {
        step.valid = step.epsilon > 0.0 && step.epsilon < 1.0;
    }
    return step;
}

double tail_delta(double sigma, double clip, std::uint64_t observations) {
    require(sigma > 0.0 && clip > 0.0, ErrorCode::invalid_argument, "tail bound needs sigma > 0 and a > 0");
    const double q = 2.0 * std::exp(-clip * clip / (2.0 * sigma * sigma));
    require(q < 1.0, ErrorCode::numeric,
            "noise too large relative to clip level a: 2 exp(-a^2 / 2 sigma^2) >= 1");
    if (observations == 0) return 0.0;
    return -std::expm1(static_cast<double>(observations) * std::log1p(-q));
}

PrivacyReport compose(std::span<const StepPrivacy> steps, double delta_tail) {
    PrivacyReport r;
    r.steps.assign(steps.begin(), steps.end());
    r.delta_tail = delta_tail;
    double suffix = 0.0;
    double delta = 0.0;
    for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
        require(it->epsilon >= 0.0 && it->delta >= 0.0, ErrorCode::invalid_argument,
                "per-step epsilon and delta must be nonnegative");
        delta += std::exp(suffix) * it->delta;
        suffix += it->epsilon;
        r.valid = r.valid && it->valid;
    }
    r.epsilon = suffix;
    r.delta = delta + delta_tail;
    r.trivial = r.delta >= 1.0;
    return r;
}

DeltaSplit parse_delta_split(std::string_view name) {
    if (name == "uniform") return DeltaSplit::uniform;
    if (name == "constant") return DeltaSplit::constant;
    throw Error(ErrorCode::config, "unknown delta split '" + std::string(name) + "' (expected uniform or constant)");
}

std::string_view to_string(DeltaSplit s) { return s == DeltaSplit::uniform ? "uniform" : "constant"; }

PrivacyReport accountant(const GameInstance& game, std::span<const PopulationLearner> learners,
                         const AccountantOptions& options) {
    return accountant(sensitivity_constants(game, learners), learners, options);
}

PrivacyReport accountant(const SensitivityConstants& constants, std::span<const PopulationLearner> learners,
                         const AccountantOptions& options) {
    require(options.iterations >= 1, ErrorCode::invalid_argument, "accountant needs T >= 1");
    require(options.delta_budget > 0.0, ErrorCode::invalid_argument, "delta budget must be positive");
    require(!learners.empty(), ErrorCode::invalid_argument, "accountant needs at least one learner");
    for (const PopulationLearner& l : learners) l.schedule.validate();

    const double step_delta = options.split == DeltaSplit::uniform
                                  ? options.delta_budget / static_cast<double>(options.iterations)
                                  : options.delta_budget;
    const double dual_bound = clipped_loss_dual_bound(constants, options.clip);

    std::vector<StepPrivacy> steps(options.iterations);
    for (std::size_t t = 1; t <= options.iterations; ++t) {
        StepPrivacy& s = steps[t - 1];
        s.sensitivity = per_step_sensitivity(constants, max_rate(learners, t - 1), dual_bound);
        const GaussianStep g = gaussian_epsilon(s.sensitivity, options.sigma, step_delta, options.paper_variant);
        s.epsilon = g.epsilon;
        s.delta = step_delta;
        s.valid = g.valid;
    }
    const std::uint64_t observations = static_cast<std::uint64_t>(options.iterations) * constants.total_paths;

    PrivacyReport report = compose(steps, tail_delta(options.sigma, options.clip, observations));
    report.constants = constants;
    report.sigma = options.sigma;
    report.clip = options.clip;
    report.paper_variant = options.paper_variant;
    return report;
}

}  // namespace privroute
