#include "redsched/simulator.hpp"

#include "redsched/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace redsched {

namespace {

// Uniform integer in [0, k).
int uniform_index(Rng& rng, int k) {
    const int v = static_cast<int>(uniform01(rng) * k);
    return std::min(v, k - 1);
}

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_index(rng, static_cast<int>(i)));
        std::swap(v[i - 1], v[j]);
    }
}

bool breaks_ties_randomly(Policy p) {
    return p == Policy::ForkEarlyCancel || p == Policy::PartialCancellation;
}

// Decorrelates the arrival stream from the service stream of the same seed.
std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::string to_string(StabilityVerdict v) {
    return v == StabilityVerdict::Stable ? "Stable" : "Unstable";
}

long RunSpec::effective_warmup() const {
    if (warmup) return *warmup;
    return std::min(std::max(10000L, jobs / 10), jobs / 2);
}

void RunSpec::validate() const {
    system.validate();
    if (jobs < 1) throw ConfigError("job count must be >= 1");
    const long w = effective_warmup();
    if (w < 0 || w >= jobs) throw ConfigError("warm-up must be smaller than the job count");
    if (batches < 2) throw ConfigError("need at least 2 batches");
}

Simulation::Simulation(SystemSpec system, std::uint64_t seed)
    : system_(std::move(system)), rng_(seed) {
    system_.validate();
    servers_.resize(static_cast<std::size_t>(system_.n));
    for (int s = 0; s < system_.n; ++s) servers_[static_cast<std::size_t>(s)].id = s;
}

int Simulation::add_job(double arrival_time, std::optional<std::vector<int>> servers) {
    if (arrival_time < now_) throw ConfigError("job arrival lies in the simulated past");
    if (servers) {
        if (servers->empty()) throw ConfigError("explicit placement needs at least one server");
        std::vector<int> sorted = *servers;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end() || sorted.front() < 0 ||
            sorted.back() >= system_.n)
            throw ConfigError("explicit placement must name distinct servers in [0, n)");
    }
    Job job;
    job.arrival = arrival_time;
    job.placement = std::move(servers);
    jobs_.push_back(std::move(job));
    const int id = static_cast<int>(jobs_.size()) - 1;
    schedule(arrival_time, SimEvent::Kind::JobArrival, id);
    return id;
}

void Simulation::schedule(double time, SimEvent::Kind kind, int id) {
    calendar_.push(SimEvent{time, next_seq_++, kind, id});
}

double Simulation::next_event_time() const {
    return calendar_.empty() ? std::numeric_limits<double>::infinity() : calendar_.top().time;
}

bool Simulation::step() {
    if (calendar_.empty()) return false;
    const SimEvent ev = calendar_.top();
    calendar_.pop();
    now_ = ev.time;
    if (ev.kind == SimEvent::Kind::JobArrival) on_arrival(ev.id);
    else on_completion(ev.id);
    return true;
}

void Simulation::run_until_idle() {
    while (step()) {
    }
}

std::vector<int> Simulation::place(int job) {
    auto& placement = jobs_[static_cast<std::size_t>(job)].placement;
    if (placement) return *placement;

    const int n = system_.n;
    const int r = system_.r;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(r));
    switch (system_.policy) {
        case Policy::ForkJoin:
        case Policy::ForkEarlyCancel:
        case Policy::PartialCancellation:
            for (int s = 0; s < n; ++s) out.push_back(s);
            break;
        case Policy::PartialGroupRandom: {
            const int group = uniform_index(rng_, n / r);
            for (int i = 0; i < r; ++i) out.push_back(group * r + i);
            break;
        }
        case Policy::PartialUniformRandom: {
            // Partial Fisher-Yates over the server indices.
            scratch_.resize(static_cast<std::size_t>(n));
            for (int s = 0; s < n; ++s) scratch_[static_cast<std::size_t>(s)] = s;
            for (int i = 0; i < r; ++i) {
                const int j = i + uniform_index(rng_, n - i);
                std::swap(scratch_[static_cast<std::size_t>(i)], scratch_[static_cast<std::size_t>(j)]);
                out.push_back(scratch_[static_cast<std::size_t>(i)]);
            }
            break;
        }
        case Policy::PartialRoundRobin:
            for (int i = 0; i < r; ++i) out.push_back((round_robin_offset_ + i) % n);
            round_robin_offset_ = (round_robin_offset_ + r) % n;
            break;
    }
    return out;
}

void Simulation::on_arrival(int job_id) {
    const std::vector<int> targets = place(job_id);
    auto& job = jobs_[static_cast<std::size_t>(job_id)];
    job.first_task = static_cast<int>(task_job_.size());
    job.task_count = static_cast<int>(targets.size());
    ++jobs_in_system_;

    std::vector<int> idle;
    for (int s : targets) {
        const int task = static_cast<int>(task_job_.size());
        task_job_.push_back(job_id);
        task_server_.push_back(s);
        task_state_.push_back(TaskState::Queued);
        task_start_.push_back(std::numeric_limits<double>::quiet_NaN());
        auto& server = servers_[static_cast<std::size_t>(s)];
        server.queue.push_back(task);
        ++server.live_queued;
        if (!server.busy()) idle.push_back(s);
    }
    if (idle.size() > 1 && breaks_ties_randomly(system_.policy)) shuffle(idle, rng_);
    for (int s : idle) {
        if (!servers_[static_cast<std::size_t>(s)].busy()) start_next(s);
    }
}

void Simulation::start_next(int server_id) {
    auto& server = servers_[static_cast<std::size_t>(server_id)];
    while (!server.busy() && !server.queue.empty()) {
        const int task = server.queue.front();
        server.queue.pop_front();
        if (task_state_[static_cast<std::size_t>(task)] == TaskState::Queued) start_task(server_id, task);
    }
}

void Simulation::start_task(int server_id, int task) {
    auto& server = servers_[static_cast<std::size_t>(server_id)];
    const auto t = static_cast<std::size_t>(task);
    task_state_[t] = TaskState::InService;
    task_start_[t] = now_;
    server.in_service = task;
    server.service_start = now_;
    --server.live_queued;
    ++server.started;

    const int job_id = task_job_[t];
    auto& job = jobs_[static_cast<std::size_t>(job_id)];
    ++job.started;
    schedule(now_ + system_.dist.sample(rng_), SimEvent::Kind::ServiceCompletion, task);

    if (system_.policy == Policy::ForkEarlyCancel) {
        cancel_job_tasks(job_id, task);
    } else if (system_.policy == Policy::PartialCancellation && job.started == system_.r) {
        std::vector<int> freed;
        for (int i = 0; i < job.task_count; ++i) {
            const int other = job.first_task + i;
            if (task_state_[static_cast<std::size_t>(other)] == TaskState::Queued) cancel_task(other, freed);
        }
    }
}

void Simulation::cancel_task(int task, std::vector<int>& freed) {
    const auto t = static_cast<std::size_t>(task);
    auto& server = servers_[static_cast<std::size_t>(task_server_[t])];
    if (task_state_[t] == TaskState::Queued) {
        task_state_[t] = TaskState::Canceled;
        --server.live_queued;
    } else if (task_state_[t] == TaskState::InService) {
        // Partially served work still counts toward the job's cost.
        jobs_[static_cast<std::size_t>(task_job_[t])].cost += now_ - task_start_[t];
        task_state_[t] = TaskState::Canceled;
        server.in_service = -1;
        freed.push_back(server.id);
    }
}

void Simulation::cancel_job_tasks(int job_id, std::optional<int> keep_task) {
    const auto& job = jobs_.at(static_cast<std::size_t>(job_id));
    std::vector<int> freed;
    for (int i = 0; i < job.task_count; ++i) {
        const int task = job.first_task + i;
        if (keep_task && *keep_task == task) continue;
        cancel_task(task, freed);
    }
    if (freed.size() > 1 && breaks_ties_randomly(system_.policy)) shuffle(freed, rng_);
    for (int s : freed) start_next(s);
}

void Simulation::on_completion(int task) {
    const auto t = static_cast<std::size_t>(task);
    if (task_state_[t] != TaskState::InService) return;  // canceled mid-service earlier

    const int server_id = task_server_[t];
    auto& server = servers_[static_cast<std::size_t>(server_id)];
    auto& job = jobs_[static_cast<std::size_t>(task_job_[t])];
    job.cost += now_ - task_start_[t];
    task_state_[t] = TaskState::Done;
    server.in_service = -1;
    job.done = true;
    job.completion = now_;
    --jobs_in_system_;

    std::vector<int> freed{server_id};
    for (int i = 0; i < job.task_count; ++i) cancel_task(job.first_task + i, freed);
    if (freed.size() > 1 && breaks_ties_randomly(system_.policy)) shuffle(freed, rng_);
    for (int s : freed) start_next(s);
}

std::vector<int> Simulation::job_tasks(int job_id) const {
    const auto& job = jobs_.at(static_cast<std::size_t>(job_id));
    std::vector<int> out;
    for (int i = 0; i < job.task_count; ++i) out.push_back(job.first_task + i);
    return out;
}

bool Simulation::task_live(int task) const {
    const auto s = task_state_.at(static_cast<std::size_t>(task));
    return s == TaskState::Queued || s == TaskState::InService;
}

JobRecord Simulation::record(int job_id) const {
    const auto& job = jobs_.at(static_cast<std::size_t>(job_id));
    JobRecord rec;
    rec.id = job_id;
    rec.arrival = job.arrival;
    for (int i = 0; i < job.task_count; ++i) {
        const auto t = static_cast<std::size_t>(job.first_task + i);
        rec.servers.push_back(task_server_[t]);
        if (std::isnan(task_start_[t])) rec.start_times.emplace_back(std::nullopt);
        else rec.start_times.emplace_back(task_start_[t]);
    }
    rec.completion = job.completion;
    rec.latency = job.done ? job.completion - job.arrival : std::numeric_limits<double>::infinity();
    rec.cost = job.cost;
    // A job that is still running has an in-service task whose elapsed time
    // is not yet charged; the record reflects the cost accrued so far.
    return rec;
}

namespace {

struct QueueSample {
    double time;
    double jobs;
};

std::pair<StabilityVerdict, double> judge_stability(const std::vector<QueueSample>& samples,
                                                    std::size_t skip, int batches) {
    if (samples.size() <= skip + static_cast<std::size_t>(2 * batches))
        return {StabilityVerdict::Stable, 0.0};
    const std::size_t usable = samples.size() - skip;
    const std::size_t per = usable / static_cast<std::size_t>(batches);
    std::vector<double> xs;
    std::vector<double> ys;
    for (int b = 0; b < batches; ++b) {
        double tx = 0.0;
        double ty = 0.0;
        for (std::size_t i = 0; i < per; ++i) {
            const auto& s = samples[skip + static_cast<std::size_t>(b) * per + i];
            tx += s.time;
            ty += s.jobs;
        }
        xs.push_back(tx / static_cast<double>(per));
        ys.push_back(ty / static_cast<double>(per));
    }
    const auto fit = stats::linear_fit(xs, ys);
    // Queue-length batch means stay correlated near capacity, which makes the
    // plain OLS standard error optimistic. Widen it by the AR(1) variance
    // inflation factor estimated from the residuals.
    std::vector<double> res(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) res[i] = ys[i] - fit.intercept - fit.slope * xs[i];
    double c0 = 0.0;
    double c1 = 0.0;
    for (std::size_t i = 0; i < res.size(); ++i) {
        c0 += res[i] * res[i];
        if (i > 0) c1 += res[i] * res[i - 1];
    }
    const double rho = c0 > 0.0 ? std::clamp(c1 / c0, 0.0, 0.95) : 0.0;
    const double se = fit.slope_std_error * std::sqrt((1.0 + rho) / (1.0 - rho));
    // Besides being significant, the trend must be material: over the observed
    // window it has to add at least as many jobs as the average backlog. A
    // queue that diverges from near-empty grows by roughly twice its mean.
    double level = 0.0;
    for (double y : ys) level += y;
    level /= static_cast<double>(ys.size());
    const double growth = fit.slope * (xs.back() - xs.front());
    const bool growing = fit.slope > 0.0 && fit.slope > 3.0 * se && growth >= level;
    return {growing ? StabilityVerdict::Unstable : StabilityVerdict::Stable, fit.slope};
}

}  // namespace

RunResult run(const RunSpec& spec) {
    spec.validate();
    Simulation sim(spec.system, spec.seed);
    Rng arrivals(splitmix64(spec.seed));
    const double lambda = spec.system.lambda;
    const long warmup = spec.effective_warmup();

    std::vector<QueueSample> queue_samples;
    queue_samples.reserve(static_cast<std::size_t>(spec.jobs));

    long added = 0;
    double next_arrival = lambda > 0.0 ? -std::log1p(-uniform01(arrivals)) / lambda : 0.0;
    while (true) {
        if (added < spec.jobs) {
            bool arrive = false;
            if (lambda > 0.0) {
                arrive = next_arrival <= sim.next_event_time();
            } else if (sim.jobs_in_system() == 0) {
                // Zero load: each job finds the system empty.
                next_arrival = sim.now();
                arrive = true;
            }
            if (arrive) {
                queue_samples.push_back({next_arrival, static_cast<double>(sim.jobs_in_system())});
                sim.add_job(next_arrival);
                ++added;
                if (lambda > 0.0) next_arrival += -std::log1p(-uniform01(arrivals)) / lambda;
            }
        }
        if (!sim.step()) {
            if (added >= spec.jobs) break;
        }
    }

    RunResult out;
    out.latencies.resize(static_cast<std::size_t>(spec.jobs));
    out.costs.resize(static_cast<std::size_t>(spec.jobs));
    if (spec.keep_records) out.records.reserve(static_cast<std::size_t>(spec.jobs));
    for (int j = 0; j < sim.job_count(); ++j) {
        JobRecord rec = sim.record(j);
        out.latencies[static_cast<std::size_t>(j)] = rec.latency;
        out.costs[static_cast<std::size_t>(j)] = rec.cost;
        if (spec.keep_records) out.records.push_back(std::move(rec));
    }

    auto& summary = out.summary;
    summary.warmup_discarded = warmup;
    summary.jobs_counted = spec.jobs - warmup;
    const std::span<const double> lat(out.latencies);
    const std::span<const double> cost(out.costs);
    summary.latency = stats::batch_means(lat.subspan(static_cast<std::size_t>(warmup)), spec.batches);
    summary.cost = stats::batch_means(cost.subspan(static_cast<std::size_t>(warmup)), spec.batches);
    if (lambda > 0.0) {
        const auto [verdict, slope] =
            judge_stability(queue_samples, static_cast<std::size_t>(warmup), spec.batches);
        summary.stability = verdict;
        summary.queue_growth_rate = slope;
    }
    for (int s = 0; s < sim.server_count(); ++s) summary.started_per_server.push_back(sim.server(s).started);
    return out;
}

StabilityVerdict stability_probe(const RunSpec& spec, long horizon_jobs) {
    if (horizon_jobs < 10000) throw ConfigError("stability probe needs a horizon of at least 1e4 jobs");
    if (spec.system.lambda == 0.0) return StabilityVerdict::Stable;
    RunSpec probe = spec;
    probe.jobs = horizon_jobs;
    probe.keep_records = false;
    if (probe.warmup && *probe.warmup >= horizon_jobs) probe.warmup.reset();
    return run(probe).summary.stability;
}

void write_trace_csv(std::ostream& out, std::span<const JobRecord> records) {
    out << "job_id,arrival,start_times,completion,latency,cost\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.10g", v);
        return std::string(buf);
    };
    for (const auto& rec : records) {
        out << rec.id << ',' << num(rec.arrival) << ',';
        for (std::size_t i = 0; i < rec.start_times.size(); ++i) {
            if (i) out << ';';
            out << (rec.start_times[i] ? num(*rec.start_times[i]) : std::string("-"));
        }
        out << ',' << num(rec.completion) << ',' << num(rec.latency) << ',' << num(rec.cost) << '\n';
    }
}

}  // namespace redsched
