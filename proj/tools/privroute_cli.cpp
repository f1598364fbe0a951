// Command-line front end. Links only the C API of libprivroute.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "privroute/privroute.h"

namespace fs = std::filesystem;

namespace {

struct Failure {
    int code;
};

void check(prv_status s, const char* what) {
    if (s != PRV_OK) {
        std::cerr << "privroute: " << what << ": " << prv_last_error() << "\n";
        throw Failure{2};
    }
}

std::string take(char* s) {
    std::string out = s ? s : "";
    prv_string_free(s);
    return out;
}

struct Experiment {
    prv_experiment* handle = nullptr;
    explicit Experiment(const std::string& path) { check(prv_experiment_from_file(path.c_str(), &handle), "config"); }
    ~Experiment() { prv_experiment_free(handle); }
    Experiment(const Experiment&) = delete;
    Experiment& operator=(const Experiment&) = delete;
};

std::string label(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

fs::path output_dir(const std::string& flag, prv_experiment* exp) {
    std::string dir = flag;
    if (dir.empty()) {
        char* s = nullptr;
        check(prv_experiment_output_dir(exp, &s), "output dir");
        dir = take(s);
    }
    if (dir.empty()) {
        const char* env = std::getenv("PRIVROUTE_OUT_DIR");
        dir = env && *env ? env : "out";
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        std::cerr << "privroute: cannot create output directory '" << dir << "': " << ec.message() << "\n";
        throw Failure{3};
    }
    return dir;
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    out << contents;
    if (!out) {
        std::cerr << "privroute: cannot write '" << path.string() << "'\n";
        throw Failure{3};
    }
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct CommonOptions {
    std::string config;
    std::string out;
};

struct SimulateOptions {
    std::vector<double> sigmas;
    std::optional<std::size_t> runs;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> iterations;
    std::optional<std::size_t> threads;
    bool per_run = false;
};

int cmd_simulate(const CommonOptions& common, const SimulateOptions& opt) {
    Experiment exp(common.config);
    if (!opt.sigmas.empty()) check(prv_experiment_set_sigmas(exp.handle, opt.sigmas.data(), opt.sigmas.size()), "--sigma");
    if (opt.runs) check(prv_experiment_set_runs(exp.handle, *opt.runs), "--runs");
    if (opt.seed) check(prv_experiment_set_seed(exp.handle, *opt.seed), "--seed");
    if (opt.iterations) check(prv_experiment_set_iterations(exp.handle, *opt.iterations), "--T");
    if (opt.threads) check(prv_experiment_set_threads(exp.handle, *opt.threads), "--threads");
    const fs::path dir = output_dir(common.out, exp.handle);

    std::size_t n = 0;
    check(prv_experiment_sigmas(exp.handle, nullptr, 0, &n), "sigmas");
    std::vector<double> sigmas(n);
    check(prv_experiment_sigmas(exp.handle, sigmas.data(), n, &n), "sigmas");
    if (sigmas.empty()) {
        std::cerr << "privroute: no sigma values configured\n";
        return 2;
    }

    bool ok = true;
    const std::string stamp = utc_timestamp();
    for (double sigma : sigmas) {
        prv_ensemble* ens = nullptr;
        check(prv_simulate(exp.handle, sigma, opt.per_run ? 1 : 0, &ens), "simulate");
        std::unique_ptr<prv_ensemble, void (*)(prv_ensemble*)> guard(ens, prv_ensemble_free);

        prv_ensemble_summary summary{};
        check(prv_ensemble_summary_get(ens, &summary), "summary");
        char* s = nullptr;
        const std::string stem = "simulate_sigma" + label(sigma);
        check(prv_ensemble_csv(ens, &s), "csv");
        write_file(dir / (stem + ".csv"), take(s));
        check(prv_ensemble_manifest_json(ens, stamp.c_str(), &s), "manifest");
        write_file(dir / (stem + ".manifest.json"), take(s));
        if (opt.per_run) {
            for (std::size_t r = 0; r < summary.runs; ++r) {
                check(prv_ensemble_run_csv(ens, r, &s), "run csv");
                write_file(dir / (stem + "_run" + std::to_string(r) + ".csv"), take(s));
            }
        }

        std::cout << "sigma=" << sigma << " runs=" << summary.runs << " T=" << summary.iterations
                  << " f*=" << summary.f_star << " terminal_f_mean=" << summary.terminal_f_mean
                  << " slope=" << summary.slope << (summary.feasible ? "" : " INFEASIBLE") << "\n";
        ok = ok && summary.feasible && summary.terminal_f_mean >= summary.f_star - 1e-6;
    }
    return ok ? 0 : 1;
}

struct AccountantCliOptions {
    std::optional<double> c;
    std::optional<double> sigma;
    std::optional<double> clip;
    std::string t_range;
};

int cmd_accountant(const CommonOptions& common, const AccountantCliOptions& opt) {
    Experiment exp(common.config);
    if (opt.clip) check(prv_experiment_set_clip(exp.handle, *opt.clip), "--a");

    std::size_t first = 0, last = 0, stride = 0;
    check(prv_experiment_t_range(exp.handle, &first, &last, &stride), "T range");
    if (!opt.t_range.empty()) {
        unsigned long a = 0, b = 0, s = 1;
        const int got = std::sscanf(opt.t_range.c_str(), "%lu:%lu:%lu", &a, &b, &s);
        if (got < 2) {
            std::cerr << "privroute: --T-range expects first:last[:stride]\n";
            return 2;
        }
        first = a;
        last = b;
        stride = got == 3 ? s : 1;
        check(prv_experiment_set_t_range(exp.handle, first, last, stride), "--T-range");
    }

    std::size_t n = 0;
    check(prv_experiment_pairs(exp.handle, nullptr, nullptr, 0, &n), "pairs");
    std::vector<double> cs(n), sigmas(n);
    check(prv_experiment_pairs(exp.handle, cs.data(), sigmas.data(), n, &n), "pairs");
    if (cs.empty()) {
        cs.push_back(0.0);
        sigmas.push_back(0.1);
    }
    for (auto& c : cs) c = opt.c.value_or(c);
    for (auto& s : sigmas) s = opt.sigma.value_or(s);
    const fs::path dir = output_dir(common.out, exp.handle);

    std::string csv;
    for (std::size_t j = 0; j < cs.size(); ++j) {
        char* s = nullptr;
        check(prv_accountant_curve_csv(exp.handle, cs[j], sigmas[j], first, last, stride, j == 0, &s), "accountant");
        csv += take(s);

        prv_report* rep = nullptr;
        check(prv_accountant(exp.handle, cs[j], sigmas[j], last, &rep), "accountant");
        prv_report_summary sum{};
        check(prv_report_summary_get(rep, &sum), "report");
        check(prv_report_json(rep, &s), "report json");
        write_file(dir / ("accountant_c" + label(cs[j]) + "_sigma" + label(sigmas[j]) + ".json"), take(s));
        prv_report_free(rep);
        std::cout << "c=" << cs[j] << " sigma=" << sigmas[j] << " T=" << last << " epsilon=" << sum.epsilon
                  << " delta=" << sum.delta << (sum.valid ? "" : " (invalid step)")
                  << (sum.trivial ? " (trivial)" : "") << "\n";
    }
    write_file(dir / "accountant.csv", csv);
    return 0;
}

int cmd_constants(const CommonOptions& common) {
    Experiment exp(common.config);
    char* s = nullptr;
    check(prv_constants_json(exp.handle, &s), "constants");
    const std::string text = take(s);
    std::cout << text << "\n";
    if (!common.out.empty()) write_file(output_dir(common.out, exp.handle) / "constants.json", text);
    return 0;
}

int cmd_equilibrium(const CommonOptions& common, double tol) {
    Experiment exp(common.config);
    char* s = nullptr;
    check(prv_equilibrium_json(exp.handle, tol, &s), "equilibrium");
    const std::string text = take(s);
    std::cout << text << "\n";
    if (!common.out.empty()) write_file(output_dir(common.out, exp.handle) / "equilibrium.json", text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic mirror descent routing dynamics with differential-privacy accounting"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(prv_version()));

    CommonOptions common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out,-o", common.out, "Output directory (default: config, then $PRIVROUTE_OUT_DIR, then ./out)");
    };

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Run the Monte Carlo ensemble for each sigma");
    add_common(simulate);
    simulate->add_option("--sigma", sim.sigmas, "Noise standard deviation(s); replaces the configured list");
    simulate->add_option("--runs", sim.runs, "Monte Carlo runs");
    simulate->add_option("--seed", sim.seed, "Master seed");
    simulate->add_option("--T", sim.iterations, "Iterations per run");
    simulate->add_option("--threads", sim.threads, "Worker threads (0 = hardware concurrency)");
    simulate->add_flag("--per-run", sim.per_run, "Also write one CSV per run");

    AccountantCliOptions acc;
    auto* accountant = app.add_subcommand("accountant", "Composed (epsilon, delta) curves over T");
    add_common(accountant);
    accountant->add_option("--c", acc.c, "Adjacency radius for every curve");
    accountant->add_option("--sigma", acc.sigma, "Noise level for every curve");
    accountant->add_option("--a", acc.clip, "Noise clip level a");
    accountant->add_option("--T-range", acc.t_range, "first:last[:stride]");

    auto* constants = app.add_subcommand("constants", "Print the sensitivity constants");
    add_common(constants);

    double tol = 1e-8;
    auto* equilibrium = app.add_subcommand("equilibrium", "Solve for the Nash equilibrium and f*");
    add_common(equilibrium);
    equilibrium->add_option("--tol", tol, "Nash-gap tolerance")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) return cmd_simulate(common, sim);
        if (*accountant) return cmd_accountant(common, acc);
        if (*constants) return cmd_constants(common);
        if (*equilibrium) return cmd_equilibrium(common, tol);
    } catch (const Failure& f) {
        return f.code;
    }
    return 0;
}
