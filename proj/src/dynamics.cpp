#include "privroute/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "privroute/error.hpp"

namespace privroute {

namespace {

void require(bool ok, ErrorCode code, const std::string& msg) {
    if (!ok) throw Error(code, msg);
}

void check_lengths(const PathSet& paths, std::span<const double> a, std::span<const double> b) {
    require(a.size() == paths.total_paths() && b.size() == paths.total_paths(), ErrorCode::invalid_argument,
            "path vector length mismatch");
}

}  // namespace

Geometry parse_geometry(std::string_view name) {
    if (name == "entropic") return Geometry::entropic;
    if (name == "euclidean") return Geometry::euclidean;
    throw Error(ErrorCode::config, "unknown geometry '" + std::string(name) + "' (expected entropic or euclidean)");
}

std::string_view to_string(Geometry g) { return g == Geometry::entropic ? "entropic" : "euclidean"; }

double LearningSchedule::rate(std::size_t t) const { return scale * std::pow(static_cast<double>(t) + 1.0, -decay); }

void LearningSchedule::validate() const {
    require(std::isfinite(scale) && scale > 0.0, ErrorCode::config, "learning-rate scale c_k must be positive");
    require(decay > 0.0 && decay < 1.0, ErrorCode::config, "learning-rate decay alpha_k must lie in (0, 1)");
}

double reference_norm(const PathSet& paths, std::span<const double> x) {
    double total = 0.0;
    for (std::size_t i = 0; i < paths.od_count(); ++i) {
        const auto b = paths.block(x, i);
        total += std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
    }
    return total;
}

double dual_norm(const PathSet& paths, std::span<const double> loss) {
    double best = 0.0;
    for (std::size_t i = 0; i < paths.od_count(); ++i) {
        const auto b = paths.block(loss, i);
        best = std::max(best, std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0)));
    }
    return best;
}

double strong_convexity_modulus(Geometry, const PathSet& paths) {
    // Per block both generators are 1-strongly convex w.r.t. l2 on the simplex;
    // (sum_i |u_i|)^2 <= I * sum_i |u_i|^2 costs a factor I for the summed norm.
    return 1.0 / static_cast<double>(paths.od_count());
}

double divergence_bound(Geometry g, const PathSet& paths) {
    double total = 0.0;
    for (std::size_t i = 0; i < paths.od_count(); ++i) {
        const double n = static_cast<double>(paths.block_size(i));
        total += g == Geometry::entropic ? std::log(n) : 0.5 * (1.0 - 1.0 / n);
    }
    return total;
}

double bregman(Geometry g, const PathSet& paths, std::span<const double> x, std::span<const double> y) {
    check_lengths(paths, x, y);
    double d = 0.0;
    if (g == Geometry::euclidean) {
        for (std::size_t j = 0; j < x.size(); ++j) d += 0.5 * (x[j] - y[j]) * (x[j] - y[j]);
        return d;
    }
    // KL(x || y); on the simplex the linear terms cancel.
    for (std::size_t j = 0; j < x.size(); ++j) {
        require(y[j] > 0.0, ErrorCode::numeric, "entropic divergence needs a strictly positive reference point");
        if (x[j] > 0.0) d += x[j] * std::log(x[j] / y[j]);
    }
    return std::max(d, 0.0);
}

void project_to_simplex(std::span<double> v) {
    if (v.empty()) return;
    std::vector<double> sorted(v.begin(), v.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double threshold = 0.0;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        cumulative += sorted[j];
        const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (sorted[j] - candidate > 0.0) threshold = candidate;
    }
    double sum = 0.0;
    for (double& value : v) {
        value = std::max(value - threshold, 0.0);
        sum += value;
    }
    for (double& value : v) value /= sum;
}

std::vector<double> smd_update(Geometry g, const PathSet& paths, double eta, std::span<const double> x,
                               std::span<const double> theta, std::span<const double> loss) {
    check_lengths(paths, x, loss);
    require(theta.size() == paths.od_count(), ErrorCode::invalid_argument, "mass vector length mismatch");
    require(std::isfinite(eta) && eta >= 0.0, ErrorCode::invalid_argument, "learning rate must be finite and >= 0");
    for (double l : loss) require(std::isfinite(l), ErrorCode::numeric, "non-finite loss entry");

    std::vector<double> next(x.begin(), x.end());
    for (std::size_t i = 0; i < paths.od_count(); ++i) {
        auto out = paths.block(std::span<double>(next), i);
        const auto l = paths.block(loss, i);
        const double step = eta * theta[i];

        if (g == Geometry::euclidean) {
            for (std::size_t p = 0; p < out.size(); ++p) out[p] -= step * l[p];
            project_to_simplex(out);
            continue;
        }

        // Multiplicative weights in the log domain, shifted by the max so the
        // largest weight is exactly 1.
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < out.size(); ++p) {
            require(out[p] > 0.0, ErrorCode::numeric, "entropic update needs a strictly positive iterate");
            out[p] = std::log(out[p]) - step * l[p];
            top = std::max(top, out[p]);
        }
        double sum = 0.0;
        for (double& v : out) {
            v = std::exp(v - top);
            sum += v;
        }
        // Keep every entry representable so later entropic steps stay defined.
        constexpr double kFloor = std::numeric_limits<double>::min();
        double clamped_sum = 0.0;
        for (double& v : out) {
            v = std::max(v / sum, kFloor);
            clamped_sum += v;
        }
        for (double& v : out) v /= clamped_sum;
    }
    return next;
}

std::vector<double> smd_update(const PopulationLearner& learner, const PathSet& paths, std::size_t t,
                               std::span<const double> x, std::span<const double> theta,
                               std::span<const double> loss) {
    return smd_update(learner.geometry, paths, learner.schedule.rate(t), x, theta, loss);
}

double suboptimality_bound(std::span<const BoundTerm> terms, double second_moment, std::size_t t) {
    require(t >= 1, ErrorCode::invalid_argument, "suboptimality bound needs t >= 1");
    require(second_moment >= 0.0, ErrorCode::invalid_argument, "second-moment bound L must be >= 0");
    double harmonic = 0.0;
    for (std::size_t tau = 1; tau <= t; ++tau) harmonic += 1.0 / static_cast<double>(tau);

    const double tt = static_cast<double>(t);
    double sum = 0.0;
    for (const BoundTerm& term : terms) {
        require(term.decay > 0.0 && term.decay < 1.0, ErrorCode::invalid_argument, "alpha_k must lie in (0, 1)");
        require(term.scale > 0.0 && term.modulus > 0.0, ErrorCode::invalid_argument,
                "c_k and the strong-convexity modulus must be positive");
        sum += term.divergence_bound / (term.scale * std::pow(tt, 1.0 - term.decay));
        sum += term.scale * second_moment / (2.0 * term.modulus * (1.0 - term.decay) * std::pow(tt, term.decay));
    }
    return (1.0 + harmonic) * sum;
}

double loss_second_moment_bound(std::size_t total_paths, double loss_bound, double sigma) {
    return static_cast<double>(total_paths) * (loss_bound * loss_bound + sigma * sigma);
}

}  // namespace privroute
