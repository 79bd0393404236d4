#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "redsched/errors.hpp"
#include "redsched/experiments.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace redsched;
namespace fs = std::filesystem;

namespace {

std::vector<ServiceDistribution> test_set() {
    return {
        ServiceDistribution::shifted_exp(1.0, 0.5), ServiceDistribution::shifted_exp(2.0, 0.5),
        ServiceDistribution::hyper_exp(0.1, 1.5, 0.5), ServiceDistribution::hyper_exp(0.4, 0.5, 2.0),
        ServiceDistribution::exponential(0.5),
    };
}

struct ScratchDir {
    fs::path path = fs::temp_directory_path() / ("redsched-test-" + std::to_string(::getpid()));
    ScratchDir() { fs::create_directories(path); }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

fs::path scratch_dir() {
    static const ScratchDir dir;
    return dir.path;
}

fs::path write_file(const std::string& name, const std::string& text) {
    const auto path = scratch_dir() / name;
    std::ofstream(path) << text;
    return path;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Runs the command-line tool and returns its exit status.
int cli(const std::string& args, const std::string& capture = "") {
    std::string cmd = std::string("\"") + REDSCHED_CLI + "\" " + args;
    cmd += capture.empty() ? " >/dev/null 2>&1" : " >\"" + capture + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string message_of(const std::string& text) {
    try {
        parse_scenarios(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

RunSpec spec(int n, int r, double lambda, Policy p, const ServiceDistribution& d, long jobs) {
    RunSpec s;
    s.system.n = n;
    s.system.r = r;
    s.system.lambda = lambda;
    s.system.policy = p;
    s.system.dist = d;
    s.jobs = jobs;
    s.keep_records = false;
    return s;
}

std::string csv_of(const std::vector<ComparisonRow>& rows) {
    std::ostringstream out;
    write_csv(out, rows);
    return out.str();
}

}  // namespace

TEST_CASE("a single scenario object parses with defaults") {
    const auto s = parse_scenarios(R"({
        // fork-join defaults r to n
        "name": "one", "n": 3, "lambda": 0.25, "policy": "fork-join",
        "dist": "{kind = \"shiftedexp\", delta = 1.0, mu = 0.5}"
    })");
    REQUIRE(s.size() == 1);
    CHECK(s[0].name == "one");
    CHECK(s[0].n == 3);
    CHECK(s[0].r == 3);
    CHECK(s[0].policy == Policy::ForkJoin);
    CHECK(s[0].jobs == 100000);
    CHECK(s[0].seed == 1);
    CHECK(s[0].replications == 1);
    CHECK(s[0].lambdas() == std::vector<double>{0.25});
    CHECK(s[0].dist.mean() == doctest::Approx(3.0));
}

TEST_CASE("a scenario list with sweeps, warm-up and object distributions") {
    const auto s = parse_scenarios(R"({
        "scenarios": [
            {"name": "a", "n": 6, "r": 2, "policy": "uniform-random", "lambda_sweep": {"lo": 0.1, "hi": 0.5, "steps": 5},
             "dist": {"kind": "hyperexp", "p": 0.1, "mu1": 1.5, "mu2": 0.5}, "jobs": 30000, "warmup": 0.2, "seed": 9},
            {"name": "b", "n": 4, "policy": "early-cancel", "lambda": 0.3, "dist": {"kind": "exp", "mu": 1}, "warmup": 500,
             "replications": 3}
        ]
    })");
    REQUIRE(s.size() == 2);
    const auto pts = s[0].lambdas();
    REQUIRE(pts.size() == 5);
    CHECK(pts.front() == doctest::Approx(0.1));
    CHECK(pts[2] == doctest::Approx(0.3));
    CHECK(pts.back() == doctest::Approx(0.5));
    CHECK(s[0].run_spec(0.3, 0).effective_warmup() == 6000);
    CHECK(s[0].run_spec(0.3, 0).seed == 9);
    CHECK(s[0].run_spec(0.3, 2).seed == 11);
    CHECK(s[1].policy == Policy::ForkEarlyCancel);
    CHECK(s[1].r == 4);
    CHECK(s[1].run_spec(0.3, 0).effective_warmup() == 500);
    CHECK(s[1].replications == 3);
}

TEST_CASE("config errors name the line of the offending scenario") {
    const std::string text = "{\"scenarios\": [\n"
                             "  {\"name\": \"ok\", \"n\": 2, \"policy\": \"fork-join\", \"lambda\": 0.1, \"dist\": {\"kind\": \"exp\", \"mu\": 1}},\n"
                             "  {\"name\": \"bad\", \"n\": 2, \"policy\": \"fork-join\", \"lambda\": 0.1, \"dist\": {\"kind\": \"exp\", \"mu\": 1}, \"colour\": 3}\n"
                             "]}\n";
    const auto msg = message_of(text);
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("bad") != std::string::npos);
    CHECK(msg.find("colour") != std::string::npos);
}

TEST_CASE("invalid configs are rejected") {
    const char* dist = R"("dist": {"kind": "exp", "mu": 1})";
    auto obj = [&](const std::string& fields) { return "{" + fields + ", " + dist + "}"; };
    CHECK_THROWS_AS(parse_scenarios("{ not json"), ConfigError);
    CHECK_THROWS_AS(parse_scenarios(R"({"name": "x", "n": 2, "policy": "fork-join", "lambda": 0.1})"), ConfigError);
    CHECK_THROWS_AS(parse_scenarios(obj(R"("n": 2, "policy": "fork-join", "lambda": 0.1, "lambda_sweep": {"lo": 0.1, "hi": 0.2, "steps": 2})")),
                    ConfigError);
    CHECK_THROWS_AS(parse_scenarios(obj(R"("n": 2, "policy": "fork-join", "lambda_sweep": {"lo": 0.2, "hi": 0.1, "steps": 3})")), ConfigError);
    CHECK_THROWS_AS(parse_scenarios(obj(R"("n": 2, "policy": "fork-join", "lambda_sweep": {"lo": 0.1, "hi": 0.2, "steps": 1})")), ConfigError);
    CHECK_THROWS_AS(parse_scenarios(obj(R"("n": 4, "policy": "uniform-random", "lambda": 0.1)")), ConfigError);
    CHECK_THROWS_AS(parse_scenarios(obj(R"("n": 4, "r": 3, "policy": "group-random", "lambda": 0.1)")), ConfigError);
    CHECK_THROWS_AS(parse_scenarios(obj(R"("n": 4, "r": 2, "policy": "fork-join", "lambda": 0.1)")), ConfigError);
    CHECK_THROWS_AS(parse_scenarios(obj(R"("n": 4, "policy": "fork-join", "lambda": 0.1, "jobs": 100, "warmup": 200)")), ConfigError);
    CHECK_THROWS_AS(parse_scenarios(obj(R"("n": 4, "policy": "fork-join", "lambda": 0.1, "replications": 0)")), ConfigError);
    CHECK_THROWS_AS(parse_scenarios(obj(R"("n": 4, "policy": "fork-join", "lambda": -0.1)")), ConfigError);
    CHECK_THROWS_AS(parse_scenarios(obj(R"("n": 4, "lambda": 0.1, "policy": "shortest-queue")")), ConfigError);
    CHECK_THROWS_AS(parse_scenarios(R"({"n": 2, "policy": "fork-join", "lambda": 0.1, "dist": "{kind = \"weibull\", k = 2}"})"), ConfigError);
}

TEST_CASE("missing config files are I/O errors") {
    CHECK_THROWS_AS(load_scenarios(scratch_dir() / "does-not-exist.json"), IoError);
}

TEST_CASE("every figure preset loads") {
    for (const char* name : {"fig5", "fig6", "fig7", "fig8", "fig9", "fig10"}) {
        CAPTURE(name);
        const auto s = load_scenarios(fs::path(REDSCHED_PRESET_DIR) / (std::string(name) + ".json"));
        CHECK_FALSE(s.empty());
        for (const auto& sc : s) CHECK(sc.jobs == 100000);
    }
    CHECK(load_scenarios(fs::path(REDSCHED_PRESET_DIR) / "fig5.json").size() == 30);
    CHECK(load_scenarios(fs::path(REDSCHED_PRESET_DIR) / "fig9.json").front().lambdas().size() == 9);
}

TEST_CASE("zero-load points report pure service time") {
    const auto s = parse_scenarios(R"({"scenarios": [
        {"name": "idle", "n": 2, "policy": "fork-join", "lambda": 0, "dist": {"kind": "shiftedexp", "delta": 1, "mu": 0.5}, "jobs": 40000},
        {"name": "idle", "n": 3, "policy": "fork-join", "lambda": 0, "dist": {"kind": "shiftedexp", "delta": 1, "mu": 0.5}, "jobs": 40000}
    ]})");
    const auto rows = run_scenarios(s);
    REQUIRE(rows.size() == 2);
    const auto d = ServiceDistribution::shifted_exp(1.0, 0.5);
    for (std::size_t i = 0; i < 2; ++i) {
        const int n = static_cast<int>(i) + 2;
        REQUIRE(rows[i].et_analytic);
        CHECK(*rows[i].et_analytic == doctest::Approx(d.min_moment(n, 1)).epsilon(1e-12));
        CHECK(std::abs(*rows[i].et_sim - *rows[i].et_analytic) <= *rows[i].et_ci);
        CHECK(rows[i].stable == true);
    }
}

TEST_CASE("analyze-only rows carry closed forms and no simulation") {
    const auto s = parse_scenarios(R"({"scenarios": [
        {"name": "g", "n": 6, "r": 2, "policy": "group-random", "lambda": 0.5, "dist": {"kind": "shiftedexp", "delta": 1, "mu": 0.5}},
        {"name": "u", "n": 6, "r": 2, "policy": "uniform-random", "lambda": 0.5, "dist": {"kind": "shiftedexp", "delta": 1, "mu": 0.5}}
    ]})");
    RunOptions opt;
    opt.simulate = false;
    const auto rows = run_scenarios(s, opt);
    REQUIRE(rows.size() == 2);
    CHECK(*rows[0].et_analytic == doctest::Approx(2.625));
    CHECK(*rows[0].ec_lo == doctest::Approx(4.0));
    CHECK(*rows[0].ec_hi == doctest::Approx(4.0));
    CHECK(*rows[0].capacity == doctest::Approx(1.5));
    CHECK_FALSE(rows[0].et_sim);
    CHECK(rows[1].et_kind == LatencyKind::BoundsOnly);
    CHECK_FALSE(rows[1].et_analytic);
    CHECK(*rows[1].ec_lo == doctest::Approx(3.0));
    CHECK(*rows[1].ec_hi == doctest::Approx(4.0));
    CHECK_FALSE(rows[1].capacity);
}

TEST_CASE("points beyond capacity are still simulated and flagged") {
    const auto s = parse_scenarios(R"({"name": "over", "n": 4, "policy": "fork-join", "lambda": 0.5, "jobs": 40000,
        "dist": {"kind": "shiftedexp", "delta": 2, "mu": 0.5}})");
    const auto rows = run_scenarios(s);
    REQUIRE(rows.size() == 1);
    CHECK_FALSE(rows[0].et_analytic);
    CHECK(rows[0].ec_lo);
    REQUIRE(rows[0].et_sim);
    CHECK(rows[0].stable == false);
    const auto text = csv_of(rows);
    CHECK(text.find(",false\n") != std::string::npos);
}

TEST_CASE("CSV output: header, one line per row, empty unavailable fields") {
    ComparisonRow row;
    row.scenario = "x";
    row.policy = Policy::PartialUniformRandom;
    row.n = 6;
    row.r = 2;
    row.lambda = 0.5;
    row.et_sim = 2.123456789;
    row.et_ci = 0.01;
    row.ec_sim = 3.5;
    row.ec_ci = 0.02;
    row.et_kind = LatencyKind::BoundsOnly;
    row.ec_lo = 3.0;
    row.ec_hi = 4.0;
    row.stable = true;
    const auto path = scratch_dir() / "one.csv";
    emit_csv({row}, path);
    const auto text = read_file(path);
    CHECK(text == std::string(kCsvHeader) + "\nx,uniform-random,6,2,0.5,2.12346,0.01,3.5,0.02,,BoundsOnly,3,4,,true\n");
}

TEST_CASE("CSV round trip reproduces the rows") {
    const auto s = parse_scenarios(R"({"scenarios": [
        {"name": "fj", "n": 3, "policy": "fork-join", "lambda_sweep": {"lo": 0.1, "hi": 0.3, "steps": 3}, "jobs": 20000,
         "dist": {"kind": "shiftedexp", "delta": 1, "mu": 0.5}},
        {"name": "pc", "n": 4, "r": 2, "policy": "partial-cancel", "lambda": 0.5, "jobs": 20000,
         "dist": {"kind": "hyperexp", "p": 0.1, "mu1": 1.5, "mu2": 0.5}}
    ]})");
    const auto rows = run_scenarios(s);
    const auto text = csv_of(rows);
    std::istringstream in(text);
    const auto back = parse_csv(in);
    REQUIRE(back.size() == rows.size());
    CHECK(csv_of(back) == text);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].scenario == rows[i].scenario);
        CHECK(back[i].policy == rows[i].policy);
        CHECK(back[i].n == rows[i].n);
        CHECK(back[i].r == rows[i].r);
        CHECK(back[i].et_kind == rows[i].et_kind);
        CHECK(back[i].et_analytic.has_value() == rows[i].et_analytic.has_value());
        CHECK(*back[i].et_sim == doctest::Approx(*rows[i].et_sim).epsilon(1e-5));
        CHECK(back[i].stable == rows[i].stable);
    }
}

TEST_CASE("CSV emission errors") {
    CHECK_THROWS_AS(emit_csv({}, scratch_dir() / "empty.csv"), ConfigError);
    ComparisonRow row;
    row.scenario = "x";
    CHECK_THROWS_AS(emit_csv({row}, scratch_dir() / "no-such-dir" / "out.csv"), IoError);
}

TEST_CASE("results do not depend on the worker count") {
    auto s = load_scenarios(fs::path(REDSCHED_PRESET_DIR) / "fig7.json");
    RunOptions one;
    one.workers = 1;
    one.jobs = 15000;
    RunOptions many = one;
    many.workers = 4;
    CHECK(csv_of(run_scenarios(s, one)) == csv_of(run_scenarios(s, many)));
}

TEST_CASE("decision report examples") {
    SUBCASE("log-concave, high load: cancel early, one server") {
        const auto rep = decision_report(ServiceDistribution::shifted_exp(1.0, 0.5), 4, Load::High);
        CHECK(rep.concavity == ConcavityClass::LogConcave);
        CHECK(rep.rule_available);
        CHECK(rep.cancel_early);
        CHECK(rep.recommended_r == 1);
    }
    SUBCASE("log-concave, low load: keep redundancy") {
        const auto rep = decision_report(ServiceDistribution::shifted_exp(1.0, 0.5), 4, Load::Low);
        CHECK_FALSE(rep.cancel_early);
        CHECK(rep.recommended_r == 4);
    }
    SUBCASE("log-convex, any load: keep redundancy, fork to all") {
        for (Load load : {Load::Low, Load::High}) {
            const auto rep = decision_report(ServiceDistribution::hyper_exp(0.1, 1.5, 0.5), 6, load);
            CHECK(rep.concavity == ConcavityClass::LogConvex);
            CHECK_FALSE(rep.cancel_early);
            CHECK(rep.recommended_r == 6);
        }
    }
    SUBCASE("exponential: cost-neutral") {
        const auto rep = decision_report(ServiceDistribution::exponential(0.5), 4, Load::High);
        CHECK(rep.concavity == ConcavityClass::Both);
        CHECK(rep.note.find("cost-neutral") != std::string::npos);
        for (const auto& o : rep.options) CHECK(o.cost == doctest::Approx(2.0).epsilon(1e-9));
    }
    SUBCASE("neither class: no rule") {
        // Tail of a uniform(1, 2) mixed with a far exponential: concave then convex.
        auto tail = [](double x) {
            const double u = x < 1.0 ? 1.0 : (x < 2.0 ? 2.0 - x : 0.0);
            return 0.5 * u + 0.5 * std::exp(-0.2 * x);
        };
        const auto d = ServiceDistribution::generic(tail, 10.0);
        REQUIRE(d.classify() == ConcavityClass::Neither);
        const auto rep = decision_report(d, 4, Load::High);
        CHECK_FALSE(rep.rule_available);
        CHECK(rep.render().find("none") != std::string::npos);
    }
    SUBCASE("supporting numbers") {
        const auto rep = decision_report(ServiceDistribution::shifted_exp(2.0, 0.5), 4, Load::High);
        REQUIRE(rep.options.size() == 3);
        CHECK(rep.options[0].cost == doctest::Approx(10.0));
        CHECK(rep.options[0].capacity == doctest::Approx(0.4));
        CHECK(rep.options[1].cost == doctest::Approx(4.0));
        CHECK(rep.options[1].capacity == doctest::Approx(1.0));
    }
}

TEST_CASE("the recommendation matches the empirically faster option") {
    // Keep redundancy = fork-join, cancel early = fork-early-cancel; load is a
    // fraction of the larger of the two capacities.
    const int n = 4;
    for (const auto& d : test_set()) {
        const double cap = std::max(1.0 / d.min_moment(n, 1), n / d.mean());
        for (Load load : {Load::Low, Load::High}) {
            CAPTURE(d.to_literal());
            CAPTURE((load == Load::High ? "high" : "low"));
            const double lambda = (load == Load::High ? 0.9 : 0.1) * cap;
            const auto fj = run(spec(n, n, lambda, Policy::ForkJoin, d, 100000)).summary.latency;
            const auto ec = run(spec(n, n, lambda, Policy::ForkEarlyCancel, d, 100000)).summary.latency;
            const auto rep = decision_report(d, n, load);
            REQUIRE(rep.rule_available);
            if (rep.cancel_early) CHECK(ec.mean < fj.mean);
            else CHECK(fj.mean < ec.mean);
        }
    }
}

namespace {

struct PolicyPair {
    stats::Estimate uniform_latency, group_latency, uniform_cost, group_cost;
};

// n = 6, r = 2 at 0.9 of group-random's capacity. Group-random's capacity is
// exact and is the larger guaranteed capacity of the two policies.
PolicyPair compare_policies(const ServiceDistribution& d) {
    const int n = 6;
    const int r = 2;
    const double lambda = 0.9 * n / (r * d.min_moment(r, 1));
    auto us = spec(n, r, lambda, Policy::PartialUniformRandom, d, 220000);
    auto gs = spec(n, r, lambda, Policy::PartialGroupRandom, d, 220000);
    us.warmup = gs.warmup = 20000;
    const auto u = run(us).summary;
    const auto g = run(gs).summary;
    return {u.latency, g.latency, u.cost, g.cost};
}

}  // namespace

TEST_CASE("log-concave: uniform-random is faster than group-random at high load") {
    for (const auto& d : test_set()) {
        if (d.classify() != ConcavityClass::LogConcave) continue;
        CAPTURE(d.to_literal());
        const auto p = compare_policies(d);
        CHECK(below_beyond_ci(p.uniform_latency, p.group_latency));
    }
}

// Known deviation: for the log-convex test laws the capacity gap between the
// two policies is only 1-7%, so at 0.9 of capacity uniform-random's queue
// diversity still wins (or the intervals overlap). The ordering only appears
// within a few percent of capacity. Kept as an expected failure so a change
// in behaviour is noticed.
TEST_CASE("log-convex: group-random is faster than uniform-random at high load" * doctest::should_fail()) {
    for (const auto& d : test_set()) {
        if (d.classify() != ConcavityClass::LogConvex) continue;
        CAPTURE(d.to_literal());
        const auto p = compare_policies(d);
        CHECK(below_beyond_ci(p.group_latency, p.uniform_latency));
    }
}

TEST_CASE("simultaneous starts cost more for log-concave tails and less for log-convex ones") {
    for (const auto& d : test_set()) {
        const auto cls = d.classify();
        if (cls == ConcavityClass::Both) continue;
        CAPTURE(d.to_literal());
        const auto p = compare_policies(d);
        if (cls == ConcavityClass::LogConcave) CHECK(below_beyond_ci(p.uniform_cost, p.group_cost));
        else CHECK(below_beyond_ci(p.group_cost, p.uniform_cost));
    }
}

TEST_CASE("conjecture probe") {
    SUBCASE("a single server is trivially optimal") {
        const auto rep = conjecture_probe(ServiceDistribution::hyper_exp(0.1, 1.5, 0.5), 1, {0.2, 0.4}, 20000);
        REQUIRE(rep.points.size() == 2);
        for (const auto& p : rep.points) {
            CHECK(p.best_latency_r == 1);
            CHECK(p.full_fork_minimizes_latency);
            CHECK(p.full_fork_minimizes_cost);
            CHECK_FALSE(p.counterexample);
        }
    }
    SUBCASE("log-convex: forking to all six servers is fastest over the fig10 sweep") {
        const auto d = ServiceDistribution::hyper_exp(0.1, 1.5, 0.5);
        const auto grid = load_scenarios(fs::path(REDSCHED_PRESET_DIR) / "fig10.json").front().lambdas();
        const auto rep = conjecture_probe(d, 6, grid, 100000);
        REQUIRE(rep.points.size() == grid.size());
        for (const auto& p : rep.points) {
            CAPTURE(p.lambda);
            CHECK(p.full_fork_minimizes_latency);
            CHECK_FALSE(p.counterexample);
        }
        CHECK(rep.render().find("COUNTEREXAMPLE") == std::string::npos);
    }
    SUBCASE("exponential: every r costs E[X]") {
        const auto d = ServiceDistribution::exponential(0.5);
        const auto rep = conjecture_probe(d, 4, {0.8}, 100000);
        const boost::math::students_t t(19);
        const double q = boost::math::quantile(t, 1.0 - 0.05 / (2.0 * 4));
        for (const auto& c : rep.points.front().cost) CHECK(std::abs(c.mean - 2.0) <= q * c.std_error);
    }
    SUBCASE("default grid stays below every capacity") {
        const auto d = ServiceDistribution::hyper_exp(0.4, 0.5, 2.0);
        CHECK(min_capacity_over_r(d, 3) == doctest::Approx(3.0 / d.mean()));
        const auto rep = conjecture_probe(d, 3, {}, 20000);
        REQUIRE(rep.points.size() == 9);
        CHECK(rep.points.back().lambda == doctest::Approx(0.9 * 3.0 / d.mean()));
    }
    SUBCASE("log-concave tails are refused") {
        CHECK_THROWS_AS(conjecture_probe(ServiceDistribution::shifted_exp(1.0, 0.5), 3, {0.1}), ConfigError);
    }
}

TEST_CASE("command-line exit codes") {
    const auto good = write_file("good.json", R"({"name": "cli", "n": 2, "policy": "fork-join", "lambda": 0.3, "jobs": 20000,
        "dist": "{kind = \"shiftedexp\", delta = 1.0, mu = 0.5}"})");
    const auto bad = write_file("bad.json", "{\"name\": \"cli\", \"n\": 2, \"policy\": \"fork-join\",\n \"lambda\": 0.3, \"typo\": 1,\n"
                                            " \"dist\": {\"kind\": \"exp\", \"mu\": 1}}");
    const auto out = scratch_dir() / "cli.csv";
    const auto log = (scratch_dir() / "cli.log").string();

    CHECK(cli("simulate --config \"" + good.string() + "\" --out \"" + out.string() + "\"") == 0);
    const auto csv = read_file(out);
    CHECK(csv.rfind(kCsvHeader, 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);

    CHECK(cli("simulate --config \"" + good.string() + "\" --out \"" + out.string() + "\" --seed 5 --jobs 12000") == 0);
    CHECK(cli("analyze --config \"" + good.string() + "\"") == 0);

    CHECK(cli("simulate --config \"" + bad.string() + "\"", log) == 1);
    CHECK(read_file(log).find("line 2") != std::string::npos);
    CHECK(cli("simulate") == 1);
    CHECK(cli("frobnicate") == 1);
    CHECK(cli("simulate --config \"" + (scratch_dir() / "missing.json").string() + "\"") == 3);
    CHECK(cli("simulate --config \"" + good.string() + "\" --out \"" + (scratch_dir() / "nope" / "x.csv").string() +
              "\"") == 3);

    CHECK(cli("decide --dist '{kind = \"shiftedexp\", delta = 1, mu = 0.5}' --n 4 --load high", log) == 0);
    CHECK(read_file(log).find("cancel early, r = 1") != std::string::npos);
    CHECK(cli("decide --dist '{kind = \"hyperexp\", p = 0.1, mu1 = 1.5, mu2 = 0.5}' --n 6 --load low", log) == 0);
    CHECK(read_file(log).find("keep redundancy, r = 6") != std::string::npos);
    CHECK(cli("decide --dist '{kind = \"exp\", mu = 1}' --n 4 --load medium") == 1);
    CHECK(cli("decide --dist '{kind = \"gamma\"}' --n 4 --load low") == 1);

    CHECK(cli("probe-conjecture --dist '{kind = \"exp\", mu = 1}' --n 2 --lambda 0.5 --jobs 20000") == 0);
    CHECK(cli("probe-conjecture --dist '{kind = \"shiftedexp\", delta = 1, mu = 0.5}' --n 2") == 1);
}
