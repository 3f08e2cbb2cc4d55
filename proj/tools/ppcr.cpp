// ppcr: privacy-preserving CR bounds, identifiability checks and experiments.
#include "ppcr/errors.hpp"
#include "ppcr/experiments.hpp"
#include "ppcr/parallel.hpp"
#include "ppcr/report.hpp"
#include "ppcr/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

enum Exit : int { kOk = 0, kConfig = 1, kNotIdentifiable = 2, kAssertion = 3 };

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    std::string out = ".";
    bool svg = false;
    std::string grid;
    std::optional<int> threads;
    bool assert_dominance = false;
    std::size_t samples = 100000;
};

void apply_threads(const Options& o) {
    if (o.threads) {
        if (*o.threads < 1) throw ppcr::ConfigError("--threads: must be >= 1");
        ppcr::set_threads(*o.threads);
        return;
    }
    if (const char* env = std::getenv("PPCR_THREADS"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (*end != '\0' || n < 1) throw ppcr::ConfigError("PPCR_THREADS: expected a positive integer, got \"" + std::string(env) + "\"");
        ppcr::set_threads(static_cast<int>(n));
    }
}

ppcr::ExperimentSpec load_with_overrides(const Options& o) {
    ppcr::ExperimentSpec spec = ppcr::load_scenario(o.config);
    if (o.seed) spec.seed = *o.seed;
    if (o.reps) {
        if (*o.reps < 1) throw ppcr::ConfigError("--reps: must be >= 1");
        spec.reps = *o.reps;
    }
    if (!o.grid.empty()) {
        if (spec.scenario != ppcr::Scenario::mech_sweep) throw ppcr::ConfigError("--grid: only mech_sweep scenarios have a grid");
        spec.grid = ppcr::parse_grid(o.grid);
    }
    try {
        spec.validate();
    } catch (const ppcr::InvalidInput& e) {
        throw ppcr::ConfigError(std::string("overrides: ") + e.what());
    }
    return spec;
}

int cmd_bound(const Options& o) {
    const ppcr::BoundAnswer a = ppcr::evaluate_bound(ppcr::load_bound_query(o.config));
    std::cout << ppcr::bound_to_json(a) << "\n";
    return a.identifiable ? kOk : kNotIdentifiable;
}

int cmd_run(const Options& o) {
    const ppcr::ExperimentSpec spec = load_with_overrides(o);
    const ppcr::RunResult r = ppcr::run_experiment(spec);
    const std::string stem = std::filesystem::path(o.config).stem().string();
    for (const auto& p : ppcr::write_outputs(r, o.out, stem, o.svg)) std::cout << "wrote " << p.string() << "\n";
    ppcr::print_summary(r, std::cout);
    if (o.assert_dominance && !ppcr::dominance_violations(r).empty()) return kAssertion;
    return kOk;
}

int cmd_check(const Options& o) {
    const ppcr::ExperimentSpec spec = load_with_overrides(o);
    const ppcr::CheckReport rep = ppcr::run_check(spec, o.samples);
    std::cout << "identifiability: " << (rep.identifiable ? "PASS" : "FAIL") << " (" << rep.identifiability_detail
              << ")\n";
    for (const auto& a : rep.audits) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "admissibility %-18s s=%-6g cross-term %6.2f se, score-mean %s: %s\n",
                      a.mechanism.c_str(), a.budget_s, a.cross_term_z,
                      a.score_supported ? (std::to_string(a.score_mean_z).substr(0, 6) + " se").c_str() : "n/a",
                      a.pass ? "PASS" : "FAIL");
        std::cout << buf;
    }
    if (!rep.identifiable) return kNotIdentifiable;
    return rep.pass() ? kOk : kAssertion;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Privacy-preserving Cramer-Rao bounds and distributed identification experiments"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "scenario or bound-query JSON")->required();
        sub->add_option("--threads", o.threads, "worker threads (fallback: PPCR_THREADS)");
    };
    auto experiment = [&](CLI::App* sub) {
        sub->add_option("--seed", o.seed, "master seed override");
        sub->add_option("--reps", o.reps, "replication count override");
    };

    CLI::App* bound = app.add_subcommand("bound", "print pp_fisher, sigma_ppcr, trace and identifiability as JSON");
    common(bound);

    CLI::App* run = app.add_subcommand("run", "run an experiment scenario and write CSVs");
    common(run);
    experiment(run);
    run->add_option("--out", o.out, "output directory");
    run->add_flag("--svg", o.svg, "also write an SVG plot per CSV");
    run->add_option("--grid", o.grid, "budget grid override \"start:step:stop\"");
    run->add_flag("--assert-dominance", o.assert_dominance, "exit 3 when an estimate beats its bound");

    CLI::App* check = app.add_subcommand("check", "identifiability and admissibility audit");
    common(check);
    experiment(check);
    check->add_option("--samples", o.samples, "Monte Carlo samples per audit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        apply_threads(o);
        if (*bound) return cmd_bound(o);
        if (*run) return cmd_run(o);
        return cmd_check(o);
    } catch (const ppcr::NotIdentifiable& e) {
        std::cerr << "ppcr: not identifiable: " << e.what() << "\n";
        return kNotIdentifiable;
    } catch (const ppcr::InvalidInput& e) {
        std::cerr << "ppcr: config error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "ppcr: error: " << e.what() << "\n";
        return kConfig;
    }
}
