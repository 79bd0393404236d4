// Command-line front end: simulate / analyze scenario configs, recommend a
// redundancy strategy, and probe the full-forking conjecture.

#include "redsched/errors.hpp"
#include "redsched/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2, kIo = 3 };

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Redundancy scheduling: simulation and closed-form analysis"};
    app.require_subcommand(1);

    std::string config;
    std::string out_path;
    std::uint64_t seed = 0;
    long jobs = 0;
    unsigned workers = 0;
    std::string trace_path;

    auto* simulate = app.add_subcommand("simulate", "Simulate every sweep point and compare with closed forms");
    simulate->add_option("--config", config, "Scenario config (JSON)")->required();
    simulate->add_option("--out", out_path, "CSV output path (default: stdout)");
    auto* seed_opt = simulate->add_option("--seed", seed, "Override the seed of every scenario");
    auto* jobs_opt = simulate->add_option("--jobs", jobs, "Override the job count of every scenario");
    simulate->add_option("--workers", workers, "Parallel sweep workers (default: all cores)");
    simulate->add_option("--trace", trace_path, "Per-job trace CSV of the first sweep point");

    auto* analyze = app.add_subcommand("analyze", "Closed-form metrics only");
    analyze->add_option("--config", config, "Scenario config (JSON)")->required();
    analyze->add_option("--out", out_path, "CSV output path (default: stdout)");

    std::string dist_literal;
    int n = 0;
    std::string load = "high";
    auto* decide = app.add_subcommand("decide", "Recommend a redundancy strategy");
    decide->add_option("--dist", dist_literal, "Distribution literal, e.g. '{kind = \"exp\", mu = 1}'")->required();
    decide->add_option("--n", n, "Number of servers")->required();
    decide->add_option("--load", load, "low or high")->check(CLI::IsMember({"low", "high"}, CLI::ignore_case));

    std::vector<double> lambdas;
    long probe_jobs = 100000;
    auto* probe = app.add_subcommand("probe-conjecture", "Check whether r = n is optimal for a log-convex tail");
    probe->add_option("--dist", dist_literal, "Distribution literal")->required();
    probe->add_option("--n", n, "Number of servers")->required();
    probe->add_option("--lambda", lambdas, "Arrival rates (default: 0.1..0.9 of capacity)");
    probe->add_option("--jobs", probe_jobs, "Jobs per simulation");
    probe->add_option("--seed", seed, "Seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kValidation;
    }

    try {
        if (*simulate || *analyze) {
            redsched::RunOptions opts;
            opts.simulate = static_cast<bool>(*simulate);
            if (*seed_opt) opts.seed = seed;
            if (*jobs_opt) opts.jobs = jobs;
            opts.workers = workers;
            const auto scenarios = redsched::load_scenarios(config);
            const auto rows = redsched::run_scenarios(scenarios, opts);
            if (out_path.empty()) redsched::write_csv(std::cout, rows);
            else redsched::emit_csv(rows, out_path);

            if (!trace_path.empty() && *simulate) {
                auto spec = scenarios.front().run_spec(scenarios.front().lambdas().front(), 0);
                if (opts.seed) spec.seed = *opts.seed;
                if (opts.jobs) spec.jobs = *opts.jobs;
                spec.keep_records = true;
                const auto result = redsched::run(spec);
                std::ofstream trace(trace_path);
                if (!trace) throw redsched::IoError("cannot open " + trace_path + " for writing");
                redsched::write_trace_csv(trace, result.records);
            }
            return kOk;
        }
        if (*decide) {
            const auto dist = redsched::parse_distribution_literal(dist_literal);
            const auto report = redsched::decision_report(dist, n, redsched::parse_load(load));
            std::cout << report.render();
            return report.rule_available ? kOk : kRuntime;
        }
        if (*probe) {
            const auto dist = redsched::parse_distribution_literal(dist_literal);
            const auto report = redsched::conjecture_probe(dist, n, lambdas, probe_jobs, *probe->get_option("--seed") ? seed : 1);
            std::cout << report.render();
            return kOk;
        }
    } catch (const redsched::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const redsched::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kOk;
}
