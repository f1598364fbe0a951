#include "privroute/sim.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "privroute/error.hpp"

namespace privroute {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t run_seed(std::uint64_t master, std::uint64_t run) { return splitmix64(splitmix64(master) ^ run); }

void SimulationConfig::validate(const GameInstance& game) const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::config, msg); };
    if (learners.size() != game.population_count()) fail("need one learner per population");
    for (const auto& l : learners) l.schedule.validate();
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail("sigma must be finite and >= 0");
    if (iterations < 1) fail("T must be >= 1");
    if (runs < 1) fail("runs must be >= 1");
    if (slope_first > slope_last || slope_last > iterations) fail("slope window must satisfy first <= last <= T");
    if (!(equilibrium_tol > 0.0)) fail("equilibrium tolerance must be positive");
}

std::vector<double> observe_losses(std::span<const double> loss, double sigma, Rng& rng) {
    std::vector<double> out(loss.begin(), loss.end());
    if (sigma == 0.0) return out;
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& v : out) v += noise(rng);
    return out;
}

RunRecord run_trajectory(const GameInstance& game, const SimulationConfig& cfg, std::uint64_t seed) {
    const PathSet& paths = game.paths();
    const std::size_t populations = game.population_count();
    RunRecord rec;
    rec.seed = seed;
    rec.potential.reserve(cfg.iterations);
    rec.gap.reserve(cfg.iterations);
    rec.allocations.reserve(cfg.iterations);
    rec.released.reserve(cfg.iterations);

    Rng rng(seed);
    FlowAllocation x = uniform_allocation(paths, populations);
    for (std::size_t t = 0; t < cfg.iterations; ++t) {
        const auto loss = path_losses(game, x);
        auto observed = observe_losses(loss, cfg.sigma, rng);
        // Every population sees the same realized observation.
        for (std::size_t k = 0; k < populations; ++k) {
            x[k] = smd_update(cfg.learners[k], paths, t, x[k], game.theta(k), observed);
        }
        rec.feasible = rec.feasible && is_feasible(paths, x);
        rec.potential.push_back(potential(game, x));
        rec.gap.push_back(nash_gap(game, x));
        rec.allocations.push_back(x);
        rec.released.push_back(std::move(observed));
    }
    return rec;
}

double fit_loglog_slope(std::span<const double> values, double offset, std::size_t first, std::size_t last) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (std::size_t t = std::max<std::size_t>(first, 1); t <= last && t <= values.size(); ++t) {
        const double d = values[t - 1] - offset;
        if (!(d > 0.0)) continue;
        const double lx = std::log(static_cast<double>(t));
        const double ly = std::log(d);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double nn = static_cast<double>(n);
    const double denom = nn * sxx - sx * sx;
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (nn * sxy - sx * sy) / denom;
}

EnsembleStats monte_carlo(const GameInstance& game, const SimulationConfig& cfg, std::optional<double> f_star) {
    cfg.validate(game);
    EnsembleStats stats;
    stats.iterations = cfg.iterations;
    stats.runs = cfg.runs;
    stats.sigma = cfg.sigma;
    if (f_star) {
        stats.f_star = *f_star;
    } else {
        const EquilibriumResult eq = solve_equilibrium(game, cfg.equilibrium_tol);
        stats.f_star = eq.potential;
        stats.equilibrium_gap = eq.gap;
    }

    for (std::size_t r = 0; r < cfg.runs; ++r) stats.seeds.push_back(run_seed(cfg.seed, r));

    std::vector<RunRecord> records(cfg.runs);
    std::size_t workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, cfg.runs);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t r = next++; r < cfg.runs; r = next++) {
            try {
                records[r] = run_trajectory(game, cfg, stats.seeds[r]);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
        work();
    }
    if (failure) std::rethrow_exception(failure);

    // Reduction in run-index order, independent of completion order.
    const PathSet& paths = game.paths();
    const std::size_t T = cfg.iterations;
    const std::size_t K = game.population_count();
    const double runs = static_cast<double>(cfg.runs);
    stats.f_mean.assign(T, 0.0);
    stats.f_std.assign(T, 0.0);
    stats.gap_mean.assign(T, 0.0);
    stats.mean_flow.assign(T, std::vector<std::vector<double>>(K, std::vector<double>(paths.total_paths(), 0.0)));
    for (const RunRecord& rec : records) {
        stats.feasible = stats.feasible && rec.feasible;
        for (std::size_t t = 0; t < T; ++t) {
            stats.f_mean[t] += rec.potential[t] / runs;
            stats.gap_mean[t] += rec.gap[t] / runs;
            for (std::size_t k = 0; k < K; ++k) {
                for (std::size_t i = 0; i < paths.od_count(); ++i) {
                    for (std::size_t j = paths.offset(i); j < paths.offset(i) + paths.block_size(i); ++j) {
                        stats.mean_flow[t][k][j] += game.theta(k)[i] * rec.allocations[t][k][j] / runs;
                    }
                }
            }
        }
    }
    for (const RunRecord& rec : records) {
        for (std::size_t t = 0; t < T; ++t) {
            const double d = rec.potential[t] - stats.f_mean[t];
            stats.f_std[t] += d * d / runs;
        }
    }
    for (double& v : stats.f_std) v = std::sqrt(v);

    stats.slope_first = cfg.slope_last ? cfg.slope_first : std::max<std::size_t>(T / 4, 1);
    stats.slope_last = cfg.slope_last ? cfg.slope_last : T;
    stats.slope = fit_loglog_slope(stats.f_mean, stats.f_star, stats.slope_first, stats.slope_last);
    if (cfg.keep_runs) stats.records = std::move(records);
    return stats;
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) return "nan";
    return std::string(buf, end);
}

std::string ensemble_csv(const EnsembleStats& stats) {
    std::string out = "t,f_mean,f_std,gap_mean";
    const std::size_t K = stats.mean_flow.empty() ? 0 : stats.mean_flow.front().size();
    const std::size_t N = K ? stats.mean_flow.front().front().size() : 0;
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t j = 0; j < N; ++j) out += ",flow[" + std::to_string(k) + "][" + std::to_string(j) + "]";
    }
    out += "\r\n";
    for (std::size_t t = 0; t < stats.iterations; ++t) {
        out += std::to_string(t + 1);
        out += ',' + format_double(stats.f_mean[t]);
        out += ',' + format_double(stats.f_std[t]);
        out += ',' + format_double(stats.gap_mean[t]);
        for (const auto& flows : stats.mean_flow[t]) {
            for (double v : flows) out += ',' + format_double(v);
        }
        out += "\r\n";
    }
    return out;
}

std::string run_csv(const GameInstance& game, const RunRecord& record) {
    const PathSet& paths = game.paths();
    const std::size_t K = game.population_count();
    const std::size_t N = paths.total_paths();
    std::string out = "t,f,gap";
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t j = 0; j < N; ++j) out += ",flow[" + std::to_string(k) + "][" + std::to_string(j) + "]";
    }
    for (std::size_t j = 0; j < N; ++j) out += ",lhat[" + std::to_string(j) + "]";
    out += "\r\n";
    for (std::size_t t = 0; t < record.potential.size(); ++t) {
        out += std::to_string(t + 1);
        out += ',' + format_double(record.potential[t]);
        out += ',' + format_double(record.gap[t]);
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t i = 0; i < paths.od_count(); ++i) {
                for (std::size_t j = paths.offset(i); j < paths.offset(i) + paths.block_size(i); ++j) {
                    out += ',' + format_double(game.theta(k)[i] * record.allocations[t][k][j]);
                }
            }
        }
        for (double v : record.released[t]) out += ',' + format_double(v);
        out += "\r\n";
    }
    return out;
}

}  // namespace privroute
