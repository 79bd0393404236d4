#pragma once

#include "redsched/analysis.hpp"
#include "redsched/distributions.hpp"
#include "redsched/stats.hpp"

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <queue>
#include <span>
#include <vector>

namespace redsched {

struct SimEvent {
    enum class Kind : std::uint8_t { JobArrival, ServiceCompletion };

    double time = 0.0;
    std::uint64_t seq = 0;
    Kind kind = Kind::JobArrival;
    int id = 0;  // job id for arrivals, task id for completions

    // Min-heap order on (time, seq).
    bool operator>(const SimEvent& o) const {
        return time != o.time ? time > o.time : seq > o.seq;
    }
};

struct ServerState {
    int id = 0;
    std::deque<int> queue;       // task ids, FCFS; canceled entries are skipped lazily
    int live_queued = 0;         // queued tasks that are still live
    int in_service = -1;         // task id or -1 when idle
    double service_start = 0.0;
    long started = 0;            // tasks that ever began service here

    bool busy() const { return in_service >= 0; }
};

struct JobRecord {
    int id = 0;
    double arrival = 0.0;
    std::vector<int> servers;                        // one entry per replica
    std::vector<std::optional<double>> start_times;  // absolute; empty if never started
    double completion = 0.0;
    double latency = 0.0;
    double cost = 0.0;
};

enum class StabilityVerdict { Stable, Unstable };

std::string to_string(StabilityVerdict v);

struct MetricsSummary {
    stats::Estimate latency;
    stats::Estimate cost;
    long jobs_counted = 0;
    long warmup_discarded = 0;
    StabilityVerdict stability = StabilityVerdict::Stable;
    double queue_growth_rate = 0.0;  // jobs in system per second, fitted
    std::vector<long> started_per_server;
};

/// One concrete simulation: a system plus run-length knobs.
struct RunSpec {
    SystemSpec system;
    long jobs = 100000;
    std::uint64_t seed = 1;
    std::optional<long> warmup;  // default: max(1e4, 10%) capped at half the run
    int batches = 20;
    bool keep_records = true;

    long effective_warmup() const;
    void validate() const;
};

struct RunResult {
    MetricsSummary summary;
    std::vector<JobRecord> records;   // empty unless keep_records
    std::vector<double> latencies;    // all jobs, including warm-up
    std::vector<double> costs;
};

/// Single-threaded event engine for n FCFS servers under one redundancy
/// policy. Jobs can be injected by hand (for inspection) or generated as a
/// Poisson stream by `run`.
class Simulation {
public:
    Simulation(SystemSpec system, std::uint64_t seed);

    /// Schedules a job arrival. With explicit `servers` the policy's placement
    /// rule is bypassed. Returns the job id.
    int add_job(double arrival_time, std::optional<std::vector<int>> servers = std::nullopt);

    /// Processes the next event; false when the calendar is empty.
    bool step();
    void run_until_idle();

    /// Removes every live task of `job` other than `keep` in zero time. A
    /// task removed mid-service is charged its elapsed service time, and its
    /// server immediately starts the next queued task.
    void cancel_job_tasks(int job, std::optional<int> keep_task = std::nullopt);

    double now() const { return now_; }
    const ServerState& server(int s) const { return servers_.at(static_cast<std::size_t>(s)); }
    int server_count() const { return static_cast<int>(servers_.size()); }
    long jobs_in_system() const { return jobs_in_system_; }
    bool job_done(int job) const { return jobs_.at(static_cast<std::size_t>(job)).done; }
    bool has_pending_events() const { return !calendar_.empty(); }
    int job_count() const { return static_cast<int>(jobs_.size()); }
    /// Task ids of a job in replica order.
    std::vector<int> job_tasks(int job) const;
    bool task_live(int task) const;
    JobRecord record(int job) const;
    double next_event_time() const;

private:
    enum class TaskState : std::uint8_t { Queued, InService, Done, Canceled };

    struct Job {
        double arrival = 0.0;
        int first_task = -1;
        int task_count = 0;
        int started = 0;
        bool done = false;
        double completion = 0.0;
        double cost = 0.0;
        std::optional<std::vector<int>> placement;
    };

    void on_arrival(int job);
    void on_completion(int task);
    void start_next(int server);
    void start_task(int server, int task);
    void cancel_task(int task, std::vector<int>& freed);
    void schedule(double time, SimEvent::Kind kind, int id);
    std::vector<int> place(int job);

    SystemSpec system_;
    Rng rng_;
    double now_ = 0.0;
    std::uint64_t next_seq_ = 0;
    std::priority_queue<SimEvent, std::vector<SimEvent>, std::greater<>> calendar_;
    std::vector<ServerState> servers_;
    std::vector<Job> jobs_;
    std::vector<int> task_job_;
    std::vector<int> task_server_;
    std::vector<TaskState> task_state_;
    std::vector<double> task_start_;
    long jobs_in_system_ = 0;
    int round_robin_offset_ = 0;
    std::vector<int> scratch_;
};

/// Simulates `spec.jobs` Poisson arrivals to completion. Identical specs
/// produce bit-identical results.
RunResult run(const RunSpec& spec);

/// Runs `horizon_jobs` jobs and fits a linear trend to the number of jobs in
/// the system; Unstable when the slope is positive beyond three standard errors
/// and the fitted growth over the run is at least the mean backlog.
StabilityVerdict stability_probe(const RunSpec& spec, long horizon_jobs);

/// Per-job trace, header job_id,arrival,start_times,completion,latency,cost.
void write_trace_csv(std::ostream& out, std::span<const JobRecord> records);

}  // namespace redsched
