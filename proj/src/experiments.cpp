#include "redsched/experiments.hpp"

#include "redsched/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace redsched {

using nlohmann::json;

std::vector<double> LambdaSweep::points() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) {
        out.push_back(i == steps - 1 ? hi : lo + (hi - lo) * i / (steps - 1));
    }
    return out;
}

std::vector<double> Scenario::lambdas() const {
    if (const auto* sweep = std::get_if<LambdaSweep>(&lambda)) return sweep->points();
    return {std::get<double>(lambda)};
}

SystemSpec Scenario::system(double rate) const {
    SystemSpec spec;
    spec.n = n;
    spec.r = r;
    spec.lambda = rate;
    spec.policy = policy;
    spec.dist = dist;
    return spec;
}

RunSpec Scenario::run_spec(double rate, int replication) const {
    RunSpec spec;
    spec.system = system(rate);
    spec.jobs = jobs;
    spec.seed = seed + static_cast<std::uint64_t>(replication);
    spec.keep_records = false;
    if (warmup) {
        if (const auto* count = std::get_if<long>(&*warmup)) spec.warmup = *count;
        else spec.warmup = static_cast<long>(std::llround(std::get<double>(*warmup) * jobs));
    }
    return spec;
}

void Scenario::validate() const {
    if (name.empty()) throw ConfigError("scenario name must not be empty");
    if (name.find_first_of(",\"\n\r") != std::string::npos)
        throw ConfigError("scenario name must not contain commas, quotes or newlines");
    if (const auto* sweep = std::get_if<LambdaSweep>(&lambda)) {
        if (!(sweep->lo < sweep->hi)) throw ConfigError("lambda sweep needs lo < hi");
        if (sweep->steps < 2) throw ConfigError("lambda sweep needs at least 2 steps");
        if (sweep->lo < 0.0) throw ConfigError("lambda sweep must start at a rate >= 0");
    }
    if (replications < 1) throw ConfigError("replications must be >= 1");
    for (double rate : lambdas()) run_spec(rate, 0).validate();
}

namespace {

// Locates, for error messages, where each scenario object starts in the raw
// text and on which line a given key appears. Comments and strings are skipped.
class SourceMap {
public:
    explicit SourceMap(const std::string& text) : text_(text) { scan(); }

    int line_of(std::size_t offset) const {
        return 1 + static_cast<int>(std::count(text_.begin(),
                                               text_.begin() + static_cast<long>(std::min(offset, text_.size())), '\n'));
    }

    int scenario_line(std::size_t index) const {
        return index < starts_.size() ? line_of(starts_[index]) : 1;
    }

    int key_line(std::size_t index, const std::string& key) const {
        if (index >= starts_.size()) return 1;
        const std::size_t begin = starts_[index];
        const std::size_t end = index + 1 < starts_.size() ? starts_[index + 1] : text_.size();
        const auto pos = text_.find("\"" + key + "\"", begin);
        return pos != std::string::npos && pos < end ? line_of(pos) : line_of(begin);
    }

private:
    void scan() {
        int depth = 0;
        bool wrapped = false;  // {"scenarios": [ {...}, ... ]}
        for (std::size_t i = 0; i < text_.size(); ++i) {
            const char c = text_[i];
            if (c == '"') {
                const std::size_t close = skip_string(i);
                if (depth == 1 && text_.compare(i, close - i + 1, "\"scenarios\"") == 0) wrapped = true;
                i = close;
            } else if (c == '/' && i + 1 < text_.size() && text_[i + 1] == '/') {
                i = text_.find('\n', i);
                if (i == std::string::npos) break;
            } else if (c == '/' && i + 1 < text_.size() && text_[i + 1] == '*') {
                i = text_.find("*/", i + 2);
                if (i == std::string::npos) break;
                ++i;
            } else if (c == '{' || c == '[') {
                if (c == '{' && depth == 0) top_ = i;
                if (c == '{' && depth == 2 && wrapped) starts_.push_back(i);
                ++depth;
            } else if (c == '}' || c == ']') {
                --depth;
            }
        }
        if (!wrapped) starts_ = {top_};
    }

    std::size_t skip_string(std::size_t open) const {
        for (std::size_t j = open + 1; j < text_.size(); ++j) {
            if (text_[j] == '\\') ++j;
            else if (text_[j] == '"') return j;
        }
        return text_.size() - 1;
    }

    const std::string& text_;
    std::vector<std::size_t> starts_;
    std::size_t top_ = 0;
};

struct FieldError {
    std::string key;
    std::string message;
};

Scenario scenario_from_json(const json& j, std::size_t index) {
    if (!j.is_object()) throw FieldError{"", "scenario must be a JSON object"};
    static const std::vector<std::string> known = {"name", "n", "r", "lambda", "lambda_sweep", "policy",
                                                   "dist", "jobs", "seed", "warmup", "replications"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw FieldError{key, "unknown key '" + key + "'"};
    }

    auto get_int = [&](const char* key, long fallback) -> long {
        if (!j.contains(key)) return fallback;
        const auto& v = j.at(key);
        if (!v.is_number_integer()) throw FieldError{key, std::string("'") + key + "' must be an integer"};
        return v.get<long>();
    };
    auto get_num = [&](const json& obj, const char* key) -> double {
        if (!obj.contains(key)) throw FieldError{key, std::string("missing '") + key + "'"};
        const auto& v = obj.at(key);
        if (!v.is_number()) throw FieldError{key, std::string("'") + key + "' must be a number"};
        return v.get<double>();
    };

    Scenario s;
    try {
        s.name = j.contains("name") ? j.at("name").get<std::string>() : "scenario" + std::to_string(index);
    } catch (const json::exception&) {
        throw FieldError{"name", "'name' must be a string"};
    }

    if (!j.contains("policy")) throw FieldError{"policy", "missing 'policy'"};
    try {
        s.policy = parse_policy(j.at("policy").get<std::string>());
    } catch (const json::exception&) {
        throw FieldError{"policy", "'policy' must be a string"};
    } catch (const ConfigError& e) {
        throw FieldError{"policy", e.what()};
    }

    if (!j.contains("n")) throw FieldError{"n", "missing 'n'"};
    s.n = static_cast<int>(get_int("n", 1));
    const bool all_servers = s.policy == Policy::ForkJoin || s.policy == Policy::ForkEarlyCancel;
    if (!j.contains("r") && !all_servers) throw FieldError{"r", "missing 'r'"};
    s.r = static_cast<int>(get_int("r", s.n));

    if (j.contains("lambda") == j.contains("lambda_sweep"))
        throw FieldError{"lambda", "exactly one of 'lambda' and 'lambda_sweep' is required"};
    if (j.contains("lambda")) {
        s.lambda = get_num(j, "lambda");
    } else {
        const auto& sw = j.at("lambda_sweep");
        if (!sw.is_object()) throw FieldError{"lambda_sweep", "'lambda_sweep' must be {lo, hi, steps}"};
        LambdaSweep sweep;
        sweep.lo = get_num(sw, "lo");
        sweep.hi = get_num(sw, "hi");
        if (!sw.contains("steps") || !sw.at("steps").is_number_integer())
            throw FieldError{"lambda_sweep", "'steps' must be an integer"};
        sweep.steps = sw.at("steps").get<int>();
        s.lambda = sweep;
    }

    if (!j.contains("dist")) throw FieldError{"dist", "missing 'dist'"};
    try {
        const auto& d = j.at("dist");
        s.dist = parse_distribution_literal(d.is_string() ? d.get<std::string>() : d.dump());
    } catch (const ConfigError& e) {
        throw FieldError{"dist", e.what()};
    }

    s.jobs = get_int("jobs", s.jobs);
    if (j.contains("seed")) {
        const auto& v = j.at("seed");
        if (!v.is_number_unsigned()) throw FieldError{"seed", "'seed' must be a non-negative integer"};
        s.seed = v.get<std::uint64_t>();
    }
    if (j.contains("warmup")) {
        const auto& v = j.at("warmup");
        if (v.is_number_integer()) {
            s.warmup = Warmup{v.get<long>()};
        } else if (v.is_number_float()) {
            const double f = v.get<double>();
            if (!(f >= 0.0 && f < 1.0)) throw FieldError{"warmup", "fractional 'warmup' must lie in [0, 1)"};
            s.warmup = Warmup{f};
        } else {
            throw FieldError{"warmup", "'warmup' must be a job count or a fraction"};
        }
    }
    s.replications = static_cast<int>(get_int("replications", 1));

    try {
        s.validate();
    } catch (const ConfigError& e) {
        throw FieldError{"", e.what()};
    }
    return s;
}

}  // namespace

std::vector<Scenario> parse_scenarios(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        const SourceMap map(text);
        throw ConfigError("line " + std::to_string(map.line_of(e.byte == 0 ? 0 : e.byte - 1)) +
                          ": malformed config: " + e.what());
    }

    const SourceMap map(text);
    std::vector<json> entries;
    if (doc.is_object() && doc.contains("scenarios")) {
        if (!doc.at("scenarios").is_array() || doc.at("scenarios").empty())
            throw ConfigError("line 1: 'scenarios' must be a non-empty array");
        for (const auto& e : doc.at("scenarios")) entries.push_back(e);
    } else {
        entries.push_back(doc);
    }

    std::vector<Scenario> out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        try {
            out.push_back(scenario_from_json(entries[i], i));
        } catch (const FieldError& e) {
            const int line = e.key.empty() ? map.scenario_line(i) : map.key_line(i, e.key);
            std::string label = entries[i].is_object() && entries[i].contains("name") && entries[i]["name"].is_string()
                                    ? entries[i]["name"].get<std::string>()
                                    : "#" + std::to_string(i);
            throw ConfigError("line " + std::to_string(line) + ": scenario '" + label + "': " + e.message);
        }
    }
    return out;
}

std::vector<Scenario> load_scenarios(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenarios(buf.str());
}

ComparisonRow analytic_row(const Scenario& s, double rate) {
    ComparisonRow row;
    row.scenario = s.name;
    row.policy = s.policy;
    row.n = s.n;
    row.r = s.r;
    row.lambda = rate;
    const AnalyticMetrics m = analyze(s.system(rate));
    row.et_analytic = m.expected_latency;
    row.et_kind = m.latency_kind;
    if (m.expected_cost) {
        row.ec_lo = m.expected_cost->lo;
        row.ec_hi = m.expected_cost->hi;
    }
    row.capacity = m.capacity;
    return row;
}

std::vector<ComparisonRow> run_scenarios(const std::vector<Scenario>& scenarios, const RunOptions& options) {
    struct Point {
        const Scenario* scenario;
        double lambda;
        int replication;
    };
    std::vector<Scenario> adjusted = scenarios;
    for (auto& s : adjusted) {
        if (options.seed) s.seed = *options.seed;
        if (options.jobs) s.jobs = *options.jobs;
        s.validate();
    }
    std::vector<Point> points;
    for (const auto& s : adjusted)
        for (double rate : s.lambdas())
            for (int rep = 0; rep < (options.simulate ? s.replications : 1); ++rep) points.push_back({&s, rate, rep});

    std::vector<ComparisonRow> rows(points.size());
    auto evaluate = [&](std::size_t i) {
        const Point& p = points[i];
        ComparisonRow row = analytic_row(*p.scenario, p.lambda);
        if (options.simulate) {
            const RunResult result = run(p.scenario->run_spec(p.lambda, p.replication));
            const auto& sum = result.summary;
            row.et_sim = sum.latency.mean;
            row.et_ci = sum.latency.half_width;
            row.ec_sim = sum.cost.mean;
            row.ec_ci = sum.cost.half_width;
            row.stable = sum.stability == StabilityVerdict::Stable;
            if (!row.capacity && sum.cost.mean > 0.0) row.capacity = p.scenario->n / sum.cost.mean;
        }
        rows[i] = std::move(row);
    };

    unsigned workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, points.size())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < points.size(); ++i) evaluate(i);
        return rows;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < points.size(); i = next++) evaluate(i);
            } catch (...) {
                errors[w] = std::current_exception();
                next = points.size();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return rows;
}

std::vector<ComparisonRow> run_scenario(const std::filesystem::path& config, const RunOptions& options) {
    return run_scenarios(load_scenarios(config), options);
}

namespace {

std::string fmt6(const std::optional<double>& v) {
    if (!v || !std::isfinite(*v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", *v);
    return buf;
}

std::optional<double> parse_opt(const std::string& field) {
    if (field.empty()) return std::nullopt;
    try {
        return std::stod(field);
    } catch (const std::exception&) {
        throw ConfigError("malformed number '" + field + "' in CSV");
    }
}

LatencyKind parse_kind(const std::string& s) {
    if (s == "Exact") return LatencyKind::Exact;
    if (s == "Approximation") return LatencyKind::Approximation;
    if (s == "BoundsOnly") return LatencyKind::BoundsOnly;
    throw ConfigError("unknown latency kind '" + s + "' in CSV");
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
    out << kCsvHeader << '\n';
    for (const auto& row : rows) {
        out << row.scenario << ',' << to_string(row.policy) << ',' << row.n << ',' << row.r << ','
            << fmt6(row.lambda) << ',' << fmt6(row.et_sim) << ',' << fmt6(row.et_ci) << ','
            << fmt6(row.ec_sim) << ',' << fmt6(row.ec_ci) << ',' << fmt6(row.et_analytic) << ','
            << to_string(row.et_kind) << ',' << fmt6(row.ec_lo) << ',' << fmt6(row.ec_hi) << ','
            << fmt6(row.capacity) << ',' << (row.stable ? (*row.stable ? "true" : "false") : "") << '\n';
    }
}

void emit_csv(const std::vector<ComparisonRow>& rows, const std::filesystem::path& path) {
    if (rows.empty()) throw ConfigError("no rows to write");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_csv(out, rows);
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<ComparisonRow> parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw ConfigError("CSV header mismatch");
    std::vector<ComparisonRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 15) throw ConfigError("CSV row has " + std::to_string(f.size()) + " fields, expected 15");
        ComparisonRow row;
        row.scenario = f[0];
        row.policy = parse_policy(f[1]);
        row.n = std::stoi(f[2]);
        row.r = std::stoi(f[3]);
        row.lambda = parse_opt(f[4]).value_or(0.0);
        row.et_sim = parse_opt(f[5]);
        row.et_ci = parse_opt(f[6]);
        row.ec_sim = parse_opt(f[7]);
        row.ec_ci = parse_opt(f[8]);
        row.et_analytic = parse_opt(f[9]);
        row.et_kind = parse_kind(f[10]);
        row.ec_lo = parse_opt(f[11]);
        row.ec_hi = parse_opt(f[12]);
        row.capacity = parse_opt(f[13]);
        if (f[14] == "true") row.stable = true;
        else if (f[14] == "false") row.stable = false;
        else if (!f[14].empty()) throw ConfigError("stable flag must be true/false");
        rows.push_back(std::move(row));
    }
    return rows;
}

Load parse_load(const std::string& text) {
    std::string t;
    for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "low") return Load::Low;
    if (t == "high") return Load::High;
    throw ConfigError("load must be 'low' or 'high', got '" + text + "'");
}

DecisionReport decision_report(const ServiceDistribution& dist, int n, Load load) {
    if (n < 1) throw ConfigError("server count n must be >= 1");
    DecisionReport rep;
    rep.concavity = dist.classify();
    rep.load = load;

    const double ex = dist.mean();
    const double full = n * dist.min_moment(n, 1);
    rep.options = {
        {"keep redundancy, r = n (fork-join)", full, n / full},
        {"cancel early (fork-early-cancel)", ex, n / ex},
        {"r = 1 (no replication)", ex, n / ex},
    };

    switch (rep.concavity) {
        case ConcavityClass::LogConcave:
            rep.rule_available = true;
            if (load == Load::High) {
                rep.cancel_early = true;
                rep.recommended_r = 1;
                rep.note = "log-concave service at high load: replicas inflate cost and cut capacity; cancel early, fork to one server";
            } else {
                rep.recommended_r = n;
                rep.note = "log-concave service at low load: redundancy cuts latency; keep it and fork to all servers (cost-optimal choice remains r = 1)";
            }
            break;
        case ConcavityClass::LogConvex:
            rep.rule_available = true;
            rep.recommended_r = n;
            rep.note = "log-convex service: full redundancy lowers both latency and cost at any load";
            break;
        case ConcavityClass::Both:
            rep.rule_available = true;
            rep.recommended_r = n;
            rep.note = "exponential service: replication is cost-neutral (r E[X_1:r] = E[X]); full forking still gives the lowest latency";
            break;
        case ConcavityClass::Neither:
            rep.rule_available = false;
            rep.note = "no rule: the service tail is neither log-concave nor log-convex";
            break;
    }
    return rep;
}

std::string DecisionReport::render() const {
    std::ostringstream out;
    out << "service tail: " << to_string(concavity) << '\n';
    out << "load: " << (load == Load::High ? "high" : "low") << '\n';
    if (!rule_available) {
        out << "recommendation: none\n" << note << '\n';
        return out.str();
    }
    out << "recommendation: " << (cancel_early ? "cancel early" : "keep redundancy") << ", r = " << recommended_r
        << '\n';
    out << note << '\n';
    char buf[160];
    for (const auto& o : options) {
        std::snprintf(buf, sizeof buf, "  %-38s E[C] = %-10.6g capacity = %.6g\n", o.label.c_str(), o.cost,
                      o.capacity);
        out << buf;
    }
    return out.str();
}

bool below_beyond_ci(const stats::Estimate& a, const stats::Estimate& b) {
    return a.mean + a.half_width < b.mean - b.half_width;
}

double min_capacity_over_r(const ServiceDistribution& dist, int n) {
    double best = std::numeric_limits<double>::infinity();
    for (int r = 1; r <= n; ++r) {
        SystemSpec spec;
        spec.n = n;
        spec.r = r;
        spec.policy = Policy::PartialUniformRandom;
        spec.dist = dist;
        const auto bounds = cost_bounds(spec);
        const double worst = bounds ? bounds->hi : std::max(dist.mean(), r * dist.min_moment(r, 1));
        best = std::min(best, n / worst);
    }
    return best;
}

ConjectureReport conjecture_probe(const ServiceDistribution& dist, int n, std::vector<double> lambdas, long jobs,
                                  std::uint64_t seed) {
    const auto cls = dist.classify();
    if (cls != ConcavityClass::LogConvex && cls != ConcavityClass::Both)
        throw ConfigError("conjecture probe needs a log-convex service distribution");
    if (n < 1) throw ConfigError("server count n must be >= 1");
    if (lambdas.empty()) {
        const double cap = min_capacity_over_r(dist, n);
        for (int i = 1; i <= 9; ++i) lambdas.push_back(0.1 * i * cap);
    }

    ConjectureReport report;
    report.n = n;
    for (double rate : lambdas) {
        ConjecturePoint pt;
        pt.lambda = rate;
        for (int r = 1; r <= n; ++r) {
            RunSpec spec;
            spec.system.n = n;
            spec.system.r = r;
            spec.system.lambda = rate;
            spec.system.policy = Policy::PartialUniformRandom;
            spec.system.dist = dist;
            spec.jobs = jobs;
            spec.seed = seed;
            spec.keep_records = false;
            const auto res = run(spec);
            pt.latency.push_back(res.summary.latency);
            pt.cost.push_back(res.summary.cost);
        }
        auto argmin = [](const std::vector<stats::Estimate>& v) {
            return 1 + static_cast<int>(std::min_element(v.begin(), v.end(), [](const auto& a, const auto& b) {
                                            return a.mean < b.mean;
                                        }) - v.begin());
        };
        pt.best_latency_r = argmin(pt.latency);
        pt.best_cost_r = argmin(pt.cost);
        pt.full_fork_minimizes_latency = pt.best_latency_r == n;
        pt.full_fork_minimizes_cost = pt.best_cost_r == n;
        const auto idx = static_cast<std::size_t>(n - 1);
        for (std::size_t i = 0; i < idx; ++i) {
            if (below_beyond_ci(pt.latency[i], pt.latency[idx]) || below_beyond_ci(pt.cost[i], pt.cost[idx]))
                pt.counterexample = true;
        }
        report.points.push_back(std::move(pt));
    }
    return report;
}

std::string ConjectureReport::render() const {
    std::ostringstream out;
    char buf[200];
    out << "uniform-random forking, n = " << n << '\n';
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, "lambda = %-8.4g best r (latency) = %d, best r (cost) = %d%s\n", p.lambda,
                      p.best_latency_r, p.best_cost_r, p.counterexample ? "  COUNTEREXAMPLE" : "");
        out << buf;
        for (std::size_t i = 0; i < p.latency.size(); ++i) {
            std::snprintf(buf, sizeof buf, "  r = %-3zu E[T] = %.5g +- %.3g   E[C] = %.5g +- %.3g\n", i + 1,
                          p.latency[i].mean, p.latency[i].half_width, p.cost[i].mean, p.cost[i].half_width);
            out << buf;
        }
    }
    return out.str();
}

}  // namespace redsched
