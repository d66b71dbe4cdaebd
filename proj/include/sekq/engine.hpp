#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sekq/arrivals.hpp"
#include "sekq/errors.hpp"
#include "sekq/job.hpp"
#include "sekq/policies.hpp"
#include "sekq/stats.hpp"
#include "sekq/workload.hpp"

namespace sekq {

/// Simultaneous events resolve in this order. DiffZero and Reorder only occur in coupled runs.
enum class EventKind : int { Arrival = 0, ThresholdCross = 1, DiffZero = 2, Reorder = 3, Completion = 4, End = 5 };

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::Arrival: return "arrival";
        case EventKind::ThresholdCross: return "threshold";
        case EventKind::DiffZero: return "diffzero";
        case EventKind::Reorder: return "reorder";
        case EventKind::Completion: return "completion";
        case EventKind::End: return "end";
    }
    return "?";
}

/// Random-access view of a descending vector as ascending.
class AscendingView {
public:
    explicit AscendingView(const std::vector<Job>& desc) : v_(&desc) {}
    std::size_t size() const noexcept { return v_->size(); }
    bool empty() const noexcept { return v_->empty(); }
    const Job& operator[](std::size_t i) const noexcept { return (*v_)[v_->size() - 1 - i]; }

private:
    const std::vector<Job>* v_;
};

/// One queue. Jobs are stored largest key first so that the small jobs, which arrive and
/// leave most often, sit at the cheap end of the vector; position i always means the i-th
/// smallest key.
struct SystemState {
    int k = 1;
    double clock = 0.0;
    std::vector<Job> desc;
    /// Ascending positions of the jobs in service.
    Selection served;

    std::size_t size() const noexcept { return desc.size(); }
    bool empty() const noexcept { return desc.empty(); }
    AscendingView ascending() const noexcept { return AscendingView(desc); }
    const Job& at(std::size_t i) const noexcept { return desc[desc.size() - 1 - i]; }
    Job& at(std::size_t i) noexcept { return desc[desc.size() - 1 - i]; }

    double work() const noexcept {
        double w = 0.0;
        for (const auto& j : desc) w += j.remaining;
        return w;
    }
    std::vector<double> remaining_ascending() const {
        std::vector<double> r;
        r.reserve(desc.size());
        for (auto it = desc.rbegin(); it != desc.rend(); ++it) r.push_back(it->remaining);
        return r;
    }
};

template <class Policy>
bool key_less(const Policy& policy, const Job& a, const Job& b) {
    double ka = policy.key(a), kb = policy.key(b);
    return ka < kb || (ka == kb && a.id < b.id);
}

/// Builds a state holding `jobs` in the policy's order, with the policy's selection applied.
template <class Policy>
SystemState make_state(const Policy& policy, int k, std::vector<Job> jobs, double clock = 0.0) {
    if (k < 1) throw ContractViolation("k must be >= 1");
    SystemState st;
    st.k = k;
    st.clock = clock;
    std::sort(jobs.begin(), jobs.end(), [&](const Job& a, const Job& b) { return key_less(policy, b, a); });
    st.desc = std::move(jobs);
    policy.select(st.ascending(), k, st.served);
    return st;
}

/// Serves the selected jobs for dt time at rate 1/k each.
inline void advance(SystemState& st, double dt) {
    if (!(dt >= 0)) throw ContractViolation("advance requires dt >= 0");
    const double s = dt / st.k;
    for (auto p : st.served) {
        Job& j = st.at(p);
        j.remaining -= s;
        if (j.remaining < -kSnap)
            throw KernelError("advance overshot a completion (job " + std::to_string(j.id) + " remaining " +
                              format_number(j.remaining) + ")");
        if (j.remaining < kSnap) j.remaining = 0.0;
    }
    st.clock += dt;
}

struct Event {
    EventKind kind = EventKind::End;
    /// Service each served job receives until the event, in size units.
    double service = 0.0;
    double time = 0.0;
    /// Ascending position of the job concerned (completion, threshold).
    std::size_t position = 0;
    JobId job = 0;
    double level = 0.0;
};

inline bool event_before(const Event& a, const Event& b) {
    return a.service < b.service || (a.service == b.service && a.kind < b.kind);
}

/// Earliest of the next arrival, a served completion, or a served key crossing one of the
/// policy's levels. Uses st.served as the current selection.
template <class Policy>
Event next_event(const SystemState& st, const Policy& policy, std::optional<double> next_arrival,
                 bool threshold_events = true) {
    Event best;
    best.service = std::numeric_limits<double>::infinity();
    if (next_arrival) {
        if (*next_arrival < st.clock) throw KernelError("arrival scheduled before the clock");
        best.kind = EventKind::Arrival;
        best.service = (*next_arrival - st.clock) / st.k;
    }
    for (auto p : st.served) {
        const Job& j = st.at(p);
        Event c{EventKind::Completion, j.remaining, 0.0, p, j.id, 0.0};
        if (event_before(c, best)) best = c;
        if constexpr (Policy::kHasLevels) {
            if (!threshold_events) continue;
            const double key = policy.key(j);
            for (double lvl : policy.levels()) {
                if (!above_level(key, lvl)) continue;
                Event t{EventKind::ThresholdCross, key - lvl, 0.0, p, j.id, lvl};
                if (event_before(t, best)) best = t;
            }
        }
    }
    if (best.kind == EventKind::Arrival && next_arrival)
        best.time = *next_arrival;
    else if (best.service < std::numeric_limits<double>::infinity())
        best.time = st.clock + st.k * best.service;
    else
        best.kind = EventKind::End;
    return best;
}

struct TraceRecord {
    double time = 0.0;
    EventKind kind = EventKind::End;
    JobId job = 0;
    /// State right after the event: ids and remaining sizes in priority order, and the ids
    /// selected for service until the next event.
    std::vector<JobId> ids;
    std::vector<double> remaining;
    std::vector<JobId> served;
};

struct RunOptions {
    std::size_t max_in_system = 10'000'000;
    bool store_responses = false;
    /// Off re-selects only at arrivals and completions. Diagnostic.
    bool threshold_events = true;
    std::function<void(const TraceRecord&)> trace;
};

template <class Policy>
class Simulator {
public:
    Simulator(Policy policy, int k, RunOptions options = {}) : policy_(std::move(policy)), k_(k), opt_(std::move(options)) {
        if (k < 1) throw ConfigError("k must be >= 1");
    }

    /// Runs until the stream is exhausted and the system has drained.
    RunStats run(ArrivalStream& arrivals) {
        SystemState st;
        st.k = k_;
        RunStats out;
        out.k = k_;
        Welford resp;
        JobId next_id = 0;
        double area = 0.0;

        for (;;) {
            policy_.select(st.ascending(), k_, st.served);
            const Arrival* a = arrivals.peek();
            Event ev = next_event(st, policy_, a ? std::optional<double>(a->time) : std::nullopt, opt_.threshold_events);
            if (ev.kind == EventKind::End) break;

            const double dt = ev.time - st.clock;
            area += static_cast<double>(st.size()) * dt;
            for (auto p : st.served) st.at(p).remaining -= ev.service;
            st.clock = ev.time;
            if (ev.kind == EventKind::Completion) st.at(ev.position).remaining = 0.0;

            depart(st, resp, out);
            restore_order(st);

            JobId touched = ev.job;
            if (ev.kind == EventKind::Arrival) {
                Arrival arr = arrivals.pop();
                Job j{next_id++, arr.size, arr.size, arr.time, arr.estimate};
                touched = j.id;
                insert(st, j);
                if (st.size() > opt_.max_in_system)
                    throw UnstableRun("more than " + std::to_string(opt_.max_in_system) + " jobs in system at t=" +
                                      format_number(st.clock));
                out.peak_n = std::max<std::uint64_t>(out.peak_n, st.size());
            }
            ++out.num_events;
            if (opt_.trace) emit(st, ev.kind, touched);
        }
        out.num_jobs = resp.count();
        out.total_time = st.clock;
        out.area_n = area;
        out.mean_t = resp.mean();
        out.var_t = resp.variance();
        return out;
    }

    const Policy& policy() const noexcept { return policy_; }

private:
    void depart(SystemState& st, Welford& resp, RunStats& out) {
        // Erasing a position never moves the smaller ones, so walk served positions downward.
        for (auto it = st.served.rbegin(); it != st.served.rend(); ++it) {
            Job& j = st.at(*it);
            if (j.remaining >= kSnap) continue;
            if (j.remaining < -kSnap)
                throw KernelError("job " + std::to_string(j.id) + " overshot completion by " + format_number(-j.remaining));
            const double t = st.clock - j.arrival_time;
            resp.add(t);
            if (opt_.store_responses) out.response_times.push_back(t);
            st.desc.erase(st.desc.begin() + static_cast<std::ptrdiff_t>(st.desc.size() - 1 - *it));
        }
    }

    // Only served keys moved, and every policy here serves within the k+1 smallest positions,
    // so an insertion sort of that end restores the order.
    void restore_order(SystemState& st) {
        auto& v = st.desc;
        const std::size_t n = v.size();
        if (n < 2) return;
        std::size_t lo = n > static_cast<std::size_t>(k_) + 2 ? n - static_cast<std::size_t>(k_) - 2 : 0;
        for (std::size_t i = lo + 1; i < n; ++i) {
            for (std::size_t j = i; j > lo && key_less(policy_, v[j - 1], v[j]); --j) std::swap(v[j - 1], v[j]);
        }
    }

    void insert(SystemState& st, const Job& j) {
        auto pos = std::upper_bound(st.desc.begin(), st.desc.end(), j,
                                    [this](const Job& a, const Job& b) { return key_less(policy_, b, a); });
        st.desc.insert(pos, j);
    }

    void emit(const SystemState& st, EventKind kind, JobId job) {
        TraceRecord r;
        r.time = st.clock;
        r.kind = kind;
        r.job = job;
        for (std::size_t i = 0; i < st.size(); ++i) {
            r.ids.push_back(st.at(i).id);
            r.remaining.push_back(st.at(i).remaining);
        }
        Selection sel;
        policy_.select(st.ascending(), k_, sel);
        for (auto p : sel) r.served.push_back(st.at(p).id);
        opt_.trace(r);
    }

    Policy policy_;
    int k_;
    RunOptions opt_;
};

/// Identifies everything that determines the arrival stream.
inline std::string workload_fingerprint(const JobSizeModel& model, double lambda, int k, std::uint64_t num_arrivals,
                                        std::uint64_t seed, std::optional<EstimateModel> est) {
    std::string f = "dist=" + model.to_string() + ";lambda=" + format_number(lambda) + ";k=" + std::to_string(k) +
                    ";n=" + std::to_string(num_arrivals) + ";seed=" + std::to_string(seed);
    if (est) f += ";sigma=" + format_number(est->sigma);
    return f;
}

inline RunStats run_on_stream(const PolicySpec& policy, int k, ArrivalStream& arrivals, const RunOptions& options = {}) {
    if (uses_estimates(policy) && !arrivals.has_estimates())
        throw ConfigError("policy " + to_string(policy) + " needs size estimates (set sigma)");
    RunStats st = std::visit([&](const auto& p) { return Simulator(p, k, options).run(arrivals); }, policy);
    st.policy = to_string(policy);
    return st;
}

/// Simulates exactly num_arrivals Poisson arrivals from an empty system until it drains.
inline RunStats run_single(const PolicySpec& policy, const JobSizeModel& model, double lambda, int k,
                           std::uint64_t num_arrivals, std::uint64_t seed,
                           std::optional<EstimateModel> estimates = std::nullopt, const RunOptions& options = {}) {
    if (num_arrivals < 1) throw ConfigError("num_arrivals must be >= 1");
    if (k < 1) throw ConfigError("k must be >= 1");
    ArrivalStream arrivals(model, lambda, seed, num_arrivals, estimates);
    RunStats st = run_on_stream(policy, k, arrivals, options);
    st.seed = seed;
    st.lambda = lambda;
    st.fingerprint = workload_fingerprint(model, lambda, k, num_arrivals, seed, estimates);
    return st;
}

/// All jobs present at time zero, nothing arrives later.
inline RunStats run_batch(const PolicySpec& policy, std::span<const double> sizes, int k, RunOptions options = {}) {
    options.store_responses = true;
    ArrivalStream arrivals = batch_arrivals(sizes);
    RunStats st = run_on_stream(policy, k, arrivals, options);
    st.fingerprint = "batch";
    return st;
}

}  // namespace sekq
