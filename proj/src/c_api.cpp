#include "privroute/privroute.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "privroute/error.hpp"
#include "privroute/experiment.hpp"

using namespace privroute;

struct prv_experiment {
    ExperimentConfig config;
};

struct prv_ensemble {
    ExperimentConfig config;
    GameInstance game;
    EnsembleStats stats;
};

struct prv_report {
    PrivacyReport report;
};

namespace {

thread_local std::string last_error;

prv_status to_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return PRV_ERR_INVALID_ARGUMENT;
        case ErrorCode::config: return PRV_ERR_CONFIG;
        case ErrorCode::network: return PRV_ERR_NETWORK;
        case ErrorCode::numeric: return PRV_ERR_NUMERIC;
        case ErrorCode::convergence: return PRV_ERR_CONVERGENCE;
        case ErrorCode::io: return PRV_ERR_IO;
    }
    return PRV_ERR_INTERNAL;
}

template <typename F>
prv_status guarded(F&& body) {
    try {
        body();
        last_error.clear();
        return PRV_OK;
    } catch (const Error& e) {
        last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return PRV_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return PRV_ERR_INTERNAL;
    }
}

void require_arg(bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::invalid_argument, what);
}

char* copy_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

}  // namespace

extern "C" {

const char* prv_version(void) { return "1.0.0"; }

const char* prv_last_error(void) { return last_error.c_str(); }

void prv_string_free(char* s) { delete[] s; }

prv_status prv_experiment_from_file(const char* path, prv_experiment** out) {
    return guarded([&] {
        require_arg(path && out, "null argument");
        *out = nullptr;
        auto exp = std::make_unique<prv_experiment>(prv_experiment{ExperimentConfig::load(path)});
        (void)exp->config.build_game();
        *out = exp.release();
    });
}

prv_status prv_experiment_from_json(const char* json, prv_experiment** out) {
    return guarded([&] {
        require_arg(json && out, "null argument");
        *out = nullptr;
        auto exp = std::make_unique<prv_experiment>(prv_experiment{ExperimentConfig::parse(json)});
        (void)exp->config.build_game();
        *out = exp.release();
    });
}

void prv_experiment_free(prv_experiment* exp) { delete exp; }

prv_status prv_experiment_set_seed(prv_experiment* exp, uint64_t seed) {
    return guarded([&] {
        require_arg(exp, "null experiment");
        exp->config.simulation.seed = seed;
    });
}

prv_status prv_experiment_set_runs(prv_experiment* exp, size_t runs) {
    return guarded([&] {
        require_arg(exp, "null experiment");
        require_arg(runs >= 1, "runs must be >= 1");
        exp->config.simulation.runs = runs;
    });
}

prv_status prv_experiment_set_iterations(prv_experiment* exp, size_t T) {
    return guarded([&] {
        require_arg(exp, "null experiment");
        require_arg(T >= 1, "T must be >= 1");
        auto& sim = exp->config.simulation;
        sim.iterations = T;
        if (sim.slope_last > T) sim.slope_first = sim.slope_last = 0;
    });
}

prv_status prv_experiment_set_sigmas(prv_experiment* exp, const double* sigmas, size_t n) {
    return guarded([&] {
        require_arg(exp && (sigmas || n == 0), "null argument");
        for (size_t j = 0; j < n; ++j) require_arg(sigmas[j] >= 0.0, "sigma must be >= 0");
        exp->config.simulation.sigmas.assign(sigmas, sigmas + n);
    });
}

prv_status prv_experiment_set_threads(prv_experiment* exp, size_t threads) {
    return guarded([&] {
        require_arg(exp, "null experiment");
        exp->config.simulation.threads = threads;
    });
}

prv_status prv_experiment_set_adjacency(prv_experiment* exp, double c) {
    return guarded([&] {
        require_arg(exp, "null experiment");
        require_arg(c >= 0.0, "adjacency radius must be >= 0");
        exp->config.privacy.adjacency_radius = c;
        for (auto& [pc, ps] : exp->config.privacy.pairs) pc = c;
    });
}

prv_status prv_experiment_set_clip(prv_experiment* exp, double a) {
    return guarded([&] {
        require_arg(exp, "null experiment");
        require_arg(a > 0.0, "clip level a must be positive");
        exp->config.privacy.clip = a;
    });
}

prv_status prv_experiment_set_pairs(prv_experiment* exp, const double* c, const double* sigma, size_t n) {
    return guarded([&] {
        require_arg(exp && ((c && sigma) || n == 0), "null argument");
        std::vector<std::pair<double, double>> pairs;
        for (size_t j = 0; j < n; ++j) {
            require_arg(c[j] >= 0.0 && sigma[j] > 0.0, "pairs need c >= 0 and sigma > 0");
            pairs.emplace_back(c[j], sigma[j]);
        }
        exp->config.privacy.pairs = std::move(pairs);
    });
}

prv_status prv_experiment_set_t_range(prv_experiment* exp, size_t first, size_t last, size_t stride) {
    return guarded([&] {
        require_arg(exp, "null experiment");
        require_arg(first >= 1 && first <= last && stride >= 1, "T range must satisfy 1 <= first <= last, stride >= 1");
        exp->config.privacy.t_first = first;
        exp->config.privacy.t_last = last;
        exp->config.privacy.t_stride = stride;
    });
}

prv_status prv_experiment_sigmas(const prv_experiment* exp, double* out, size_t cap, size_t* n) {
    return guarded([&] {
        require_arg(exp && n, "null argument");
        const auto& s = exp->config.simulation.sigmas;
        *n = s.size();
        if (out) {
            for (size_t j = 0; j < s.size() && j < cap; ++j) out[j] = s[j];
        }
    });
}

prv_status prv_experiment_pairs(const prv_experiment* exp, double* c, double* sigma, size_t cap, size_t* n) {
    return guarded([&] {
        require_arg(exp && n, "null argument");
        const auto& p = exp->config.privacy.pairs;
        *n = p.size();
        for (size_t j = 0; j < p.size() && j < cap; ++j) {
            if (c) c[j] = p[j].first;
            if (sigma) sigma[j] = p[j].second;
        }
    });
}

prv_status prv_experiment_t_range(const prv_experiment* exp, size_t* first, size_t* last, size_t* stride) {
    return guarded([&] {
        require_arg(exp && first && last && stride, "null argument");
        *first = exp->config.privacy.t_first;
        *last = exp->config.privacy.t_last;
        *stride = exp->config.privacy.t_stride;
    });
}

prv_status prv_experiment_output_dir(const prv_experiment* exp, char** out) {
    return guarded([&] {
        require_arg(exp && out, "null argument");
        *out = copy_string(exp->config.output_dir);
    });
}

prv_status prv_experiment_config_json(const prv_experiment* exp, char** out) {
    return guarded([&] {
        require_arg(exp && out, "null argument");
        *out = copy_string(exp->config.to_json());
    });
}

prv_status prv_constants_json(const prv_experiment* exp, char** out) {
    return guarded([&] {
        require_arg(exp && out, "null argument");
        *out = copy_string(constants_json(exp->config));
    });
}

prv_status prv_equilibrium_json(const prv_experiment* exp, double tol, char** out) {
    return guarded([&] {
        require_arg(exp && out, "null argument");
        *out = copy_string(equilibrium_json(exp->config, tol));
    });
}

prv_status prv_simulate(const prv_experiment* exp, double sigma, int keep_runs, prv_ensemble** out) {
    return guarded([&] {
        require_arg(exp && out, "null argument");
        *out = nullptr;
        GameInstance game = exp->config.build_game();
        SimulationConfig sim = exp->config.simulation_config(sigma);
        sim.keep_runs = keep_runs != 0;
        EnsembleStats stats = monte_carlo(game, sim);
        *out = new prv_ensemble{exp->config, std::move(game), std::move(stats)};
    });
}

void prv_ensemble_free(prv_ensemble* ens) { delete ens; }

prv_status prv_ensemble_summary_get(const prv_ensemble* ens, prv_ensemble_summary* out) {
    return guarded([&] {
        require_arg(ens && out, "null argument");
        const EnsembleStats& s = ens->stats;
        out->iterations = s.iterations;
        out->runs = s.runs;
        out->sigma = s.sigma;
        out->f_star = s.f_star;
        out->slope = s.slope;
        out->terminal_f_mean = s.f_mean.empty() ? 0.0 : s.f_mean.back();
        out->feasible = s.feasible ? 1 : 0;
    });
}

prv_status prv_ensemble_csv(const prv_ensemble* ens, char** out) {
    return guarded([&] {
        require_arg(ens && out, "null argument");
        *out = copy_string(ensemble_csv(ens->stats));
    });
}

prv_status prv_ensemble_run_csv(const prv_ensemble* ens, size_t run, char** out) {
    return guarded([&] {
        require_arg(ens && out, "null argument");
        require_arg(run < ens->stats.records.size(), "run index out of range (were runs kept?)");
        *out = copy_string(run_csv(ens->game, ens->stats.records[run]));
    });
}

prv_status prv_ensemble_manifest_json(const prv_ensemble* ens, const char* timestamp, char** out) {
    return guarded([&] {
        require_arg(ens && out, "null argument");
        *out = copy_string(manifest_json(ens->config, ens->stats, timestamp ? timestamp : ""));
    });
}

prv_status prv_accountant(const prv_experiment* exp, double c, double sigma, size_t T, prv_report** out) {
    return guarded([&] {
        require_arg(exp && out, "null argument");
        *out = nullptr;
        const GameInstance game = exp->config.build_game().with_adjacency_radius(c);
        const auto learners = exp->config.learners();
        *out = new prv_report{accountant(game, learners, exp->config.accountant_options(sigma, T))};
    });
}

void prv_report_free(prv_report* rep) { delete rep; }

prv_status prv_report_summary_get(const prv_report* rep, prv_report_summary* out) {
    return guarded([&] {
        require_arg(rep && out, "null argument");
        out->epsilon = rep->report.epsilon;
        out->delta = rep->report.delta;
        out->delta_tail = rep->report.delta_tail;
        out->iterations = rep->report.steps.size();
        out->valid = rep->report.valid ? 1 : 0;
        out->trivial = rep->report.trivial ? 1 : 0;
    });
}

prv_status prv_report_json(const prv_report* rep, char** out) {
    return guarded([&] {
        require_arg(rep && out, "null argument");
        *out = copy_string(privacy_report_json(rep->report));
    });
}

prv_status prv_accountant_curve_csv(const prv_experiment* exp, double c, double sigma, size_t t_first,
                                    size_t t_last, size_t stride, int header, char** out) {
    return guarded([&] {
        require_arg(exp && out, "null argument");
        *out = copy_string(accountant_curve_csv(exp->config, c, sigma, t_first, t_last, stride, header != 0));
    });
}

prv_status prv_gaussian_epsilon(double sensitivity, double sigma, double delta, int paper_variant, double* epsilon,
                                int* valid) {
    return guarded([&] {
        require_arg(epsilon, "null argument");
        const GaussianStep g = gaussian_epsilon(sensitivity, sigma, delta, paper_variant != 0);
        *epsilon = g.epsilon;
        if (valid) *valid = g.valid ? 1 : 0;
    });
}

prv_status prv_tail_delta(double sigma, double a, uint64_t observations, double* out) {
    return guarded([&] {
        require_arg(out, "null argument");
        *out = tail_delta(sigma, a, observations);
    });
}

prv_status prv_compose(const double* epsilon, const double* delta, size_t n, double delta_tail, double* epsilon_out,
                       double* delta_out) {
    return guarded([&] {
        require_arg((n == 0 || (epsilon && delta)) && epsilon_out && delta_out, "null argument");
        std::vector<StepPrivacy> steps(n);
        for (size_t j = 0; j < n; ++j) {
            steps[j].epsilon = epsilon[j];
            steps[j].delta = delta[j];
        }
        const PrivacyReport r = compose(steps, delta_tail);
        *epsilon_out = r.epsilon;
        *delta_out = r.delta;
    });
}

}  // extern "C"
