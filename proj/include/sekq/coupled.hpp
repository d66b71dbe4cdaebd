#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sekq/arrivals.hpp"
#include "sekq/engine.hpp"
#include "sekq/errors.hpp"
#include "sekq/joint_state.hpp"
#include "sekq/params.hpp"
#include "sekq/policies.hpp"
#include "sekq/stats.hpp"

namespace sekq {

enum class Scenario { Good, Bad, Neutral };

inline const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::Good: return "good";
        case Scenario::Bad: return "bad";
        case Scenario::Neutral: return "neutral";
    }
    return "?";
}

enum class AssertLevel { Off, Cheap, Full };

inline const char* to_string(AssertLevel a) {
    switch (a) {
        case AssertLevel::Off: return "off";
        case AssertLevel::Cheap: return "cheap";
        case AssertLevel::Full: return "full";
    }
    return "?";
}

inline AssertLevel parse_assert_level(std::string_view s) {
    if (s == "off") return AssertLevel::Off;
    if (s == "cheap") return AssertLevel::Cheap;
    if (s == "full") return AssertLevel::Full;
    throw ConfigError("assert level must be off, cheap or full, got '" + std::string(s) + "'");
}

struct DivergenceRecord {
    double t_div = 0.0;
    /// Remaining sizes at divergence, ascending (k+1 of them).
    std::vector<double> snapshot;
    Scenario scenario = Scenario::Neutral;
    /// Integral of N_srpt - N_seksmod over the episode.
    double delta = 0.0;
    std::optional<double> t_dom;
    double t_merge = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t arrivals_before_dom = 0;
    std::uint64_t arrivals = 0;
    /// When the SRPT side finished the job that was largest at divergence; NaN if it never ran.
    double max_job_completion_time = std::numeric_limits<double>::quiet_NaN();
};

/// Arrival-pattern class of a divergence at time t whose largest job has remaining b.
/// `future` holds the arrivals after t in time order, at least up to t + k(b + 2x).
inline Scenario classify_scenario(double t, double b, std::span<const Arrival> future, const ParamSet& p, int k) {
    const double kd = k;
    const double bad_end = t + 2 * kd * p.eps;
    const double quiet_end = t + kd * (b - 2 * p.x / 3);
    const double burst_end = t + kd * (b - p.x / 3);
    const double horizon = t + kd * (b + 2 * p.x);
    for (const auto& a : future) {
        if (a.time <= t) continue;
        if (a.time <= bad_end) return Scenario::Bad;
        break;
    }
    int burst = 0;
    for (const auto& a : future) {
        if (a.time <= t) continue;
        if (a.time >= horizon) break;
        if (a.time <= quiet_end) return Scenario::Neutral;
        if (a.time <= burst_end && a.size >= p.x && a.size <= 2 * p.x && burst < k) {
            ++burst;
            continue;
        }
        return Scenario::Neutral;
    }
    return burst == k ? Scenario::Good : Scenario::Neutral;
}

namespace detail {

/// SMOD on raw ascending remaining vectors; positions refer to rA.
inline void smod_positions(std::span<const double> rA, std::span<const double> rB, int k, Selection& out) {
    const std::size_t na = rA.size(), nb = rB.size(), kk = static_cast<std::size_t>(k);
    if (na <= nb || na <= kk) {
        first_k(na, k, out);
        return;
    }
    const std::size_t d = na - nb;
    const std::size_t eligible = std::min(na, kk + d);
    out.clear();
    for (std::size_t i = 0; i < eligible && out.size() < kk; ++i) {
        const double b = i < d ? 0.0 : rB[i - d];
        if (rA[i] - b > -kSnap) out.push_back(i);
    }
    for (std::size_t i = 0; i < eligible && out.size() < kk; ++i) {
        const double b = i < d ? 0.0 : rB[i - d];
        if (rA[i] - b <= -kSnap) out.push_back(i);
    }
    std::sort(out.begin(), out.end());
}

inline std::vector<double> unpadded(const std::vector<double>& b) {
    std::vector<double> r;
    for (double v : b)
        if (v > 0) r.push_back(v);
    return r;
}

}  // namespace detail

/// Served positions (ascending, into the SEK-SMOD side's own jobs) under SMOD.
inline Selection smod_select(const JointState& j, int k) {
    Selection out;
    auto rA = detail::unpadded(j.bA), rB = detail::unpadded(j.bB);
    detail::smod_positions(rA, rB, k, out);
    return out;
}

/// Served positions on the SEK-SMOD side for the joint state's phase.
inline Selection sek_smod_select(const JointState& j, const FullSek& sek, int k) {
    Selection out;
    auto rA = detail::unpadded(j.bA);
    if (j.phase == Phase::SmodPhase) return smod_select(j, k);
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < rA.size(); ++i) jobs.push_back(Job{i, rA[i], rA[i], 0.0});
    sek.select(jobs, k, out);
    return out;
}

struct Violation {
    std::string check;
    std::string detail;
    double time = 0.0;
    std::uint64_t event_index = 0;
    EventKind event = EventKind::End;
    Phase phase = Phase::Merged;
    std::optional<std::size_t> episode;
    std::vector<double> bA;
    std::vector<double> bB;
};

struct CoupledOptions {
    AssertLevel level = AssertLevel::Full;
    std::size_t max_in_system = 10'000'000;
    /// Full context is kept for this many violations; the rest are only counted.
    std::size_t max_reported = 50;
    /// Fault injection for checker tests: SMOD serves the largest jobs instead.
    bool invert_smod = false;
};

struct CoupledResult {
    RunStats seksmod;
    RunStats srpt;
    ParamSet params;
    std::vector<DivergenceRecord> divergences;
    std::vector<Violation> violations;
    std::uint64_t violation_count = 0;
    std::uint64_t events = 0;
    std::uint64_t seed = 0;
    /// Load, when the caller knows it.
    double rho = std::numeric_limits<double>::quiet_NaN();
};

/// SEK-SMOD (side A) and SRPT-k (side B) driven by one arrival stream, with the worst-case
/// structure checked at every event.
class CoupledSimulator {
public:
    CoupledSimulator(const ParamSet& params, int k, CoupledOptions options = {})
        : params_(params), sek_(params.policy()), k_(k), opt_(options) {
        if (k < 2) throw ConfigError("the coupled policy needs k >= 2");
    }

    CoupledResult run(ArrivalStream& arrivals) {
        arrivals_ = &arrivals;
        CoupledResult res;
        res.params = params_;
        result_ = &res;

        for (;;) {
            select();
            CEvent ev = next();
            if (ev.kind == EventKind::End) break;

            const double dt = ev.time - clock_;
            areaA_ += static_cast<double>(A_.size()) * dt;
            areaB_ += static_cast<double>(B_.size()) * dt;
            if (phase_ != Phase::Merged)
                current().delta += (static_cast<double>(B_.size()) - static_cast<double>(A_.size())) * dt;
            for (auto p : selA_) A_[p].remaining -= ev.service;
            for (auto p : selB_) B_[p].remaining -= ev.service;
            clock_ = ev.time;
            if (ev.kind == EventKind::Completion) (ev.side == 0 ? A_ : B_)[ev.position].remaining = 0.0;

            depart(A_, selA_, respA_, false);
            depart(B_, selB_, respB_, true);
            if (ev.kind == EventKind::Arrival) {
                Arrival a = arrivals.pop();
                Job j{next_id_++, a.size, a.size, a.time, a.estimate};
                insert(A_, j);
                insert(B_, j);
                if (B_.size() > opt_.max_in_system || A_.size() > opt_.max_in_system)
                    throw UnstableRun("coupled run exceeded " + std::to_string(opt_.max_in_system) + " jobs");
            }
            sort_small_end(A_);
            sort_small_end(B_);
            ++events_;
            after_event(ev);
        }
        if (phase_ != Phase::Merged) end_episode(EventKind::End);

        res.events = events_;
        res.seksmod = finish(respA_, areaA_, "sek-smod:" + to_string(PolicySpec(sek_)));
        res.srpt = finish(respB_, areaB_, "srpt");
        res.violation_count = violation_count_;
        return res;
    }

private:
    struct CEvent {
        EventKind kind = EventKind::End;
        double service = std::numeric_limits<double>::infinity();
        double time = 0.0;
        int side = 0;
        std::size_t position = 0;
    };

    static bool before(const CEvent& a, const CEvent& b) {
        return a.service < b.service || (a.service == b.service && a.kind < b.kind);
    }

    DivergenceRecord& current() { return result_->divergences.back(); }

    void select() {
        first_k(B_.size());
        if (phase_ == Phase::Merged) {
            if (sek_.clauses(A_, k_)) start_episode();
            else {
                selA_ = selB_;
                return;
            }
        }
        if (phase_ == Phase::SekPhase) {
            sek_.select(A_, k_, selA_);
        } else {
            remaining(A_, rA_);
            remaining(B_, rB_);
            detail::smod_positions(rA_, rB_, k_, selA_);
            if (opt_.invert_smod) {
                selA_.clear();
                const std::size_t n = A_.size(), m = std::min<std::size_t>(n, static_cast<std::size_t>(k_));
                for (std::size_t i = n - m; i < n; ++i) selA_.push_back(i);
            }
        }
    }

    void first_k(std::size_t n) { detail::first_k(n, k_, selB_); }

    CEvent next() {
        CEvent best;
        if (const Arrival* a = arrivals_->peek()) {
            best.kind = EventKind::Arrival;
            best.service = (a->time - clock_) / k_;
            best.time = a->time;
        }
        auto offer = [&](EventKind kind, double s, int side, std::size_t pos) {
            CEvent c{kind, s, 0.0, side, pos};
            if (before(c, best)) best = c;
        };
        for (auto p : selA_) offer(EventKind::Completion, A_[p].remaining, 0, p);
        for (auto p : selB_) offer(EventKind::Completion, B_[p].remaining, 1, p);
        if (phase_ != Phase::SmodPhase) {
            for (auto p : selA_) {
                for (double lvl : sek_.levels())
                    if (above_level(A_[p].remaining, lvl)) offer(EventKind::ThresholdCross, A_[p].remaining - lvl, 0, p);
            }
        }
        if (phase_ != Phase::Merged) {
            mark(selA_, A_.size(), servedA_);
            mark(selB_, B_.size(), servedB_);
            const std::size_t len = std::max(A_.size(), B_.size());
            const std::size_t dA = len - A_.size(), dB = len - B_.size();
            for (std::size_t i = 0; i < len; ++i) {
                const double a = i >= dA ? A_[i - dA].remaining : 0.0;
                const double b = i >= dB ? B_[i - dB].remaining : 0.0;
                const int rate = (i >= dB && servedB_[i - dB]) - (i >= dA && servedA_[i - dA]);
                const double diff = a - b;
                if (rate != 0 && std::abs(diff) >= kSnap && (diff > 0) == (rate < 0))
                    offer(EventKind::DiffZero, std::abs(diff), 0, i);
            }
            // A served job catching up with a smaller unserved one changes the sorted order.
            std::optional<double> last_unserved;
            for (std::size_t p = 0; p < A_.size(); ++p) {
                if (!servedA_[p]) {
                    last_unserved = A_[p].remaining;
                    continue;
                }
                if (last_unserved) {
                    const double gap = A_[p].remaining - *last_unserved;
                    if (gap >= kSnap) offer(EventKind::Reorder, gap, 0, p);
                }
            }
        }
        if (best.kind == EventKind::End) return best;
        if (best.kind != EventKind::Arrival) best.time = clock_ + k_ * best.service;
        return best;
    }

    static void mark(const Selection& sel, std::size_t n, std::vector<char>& flags) {
        flags.assign(n, 0);
        for (auto p : sel) flags[p] = 1;
    }

    static void remaining(const std::vector<Job>& jobs, std::vector<double>& out) {
        out.resize(jobs.size());
        for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = jobs[i].remaining;
    }

    void depart(std::vector<Job>& jobs, const Selection& sel, Welford& resp, bool srpt_side) {
        for (auto it = sel.rbegin(); it != sel.rend(); ++it) {
            Job& j = jobs[*it];
            if (j.remaining >= kSnap) continue;
            if (j.remaining < -kSnap)
                throw KernelError("coupled run overshot a completion by " + format_number(-j.remaining));
            resp.add(clock_ - j.arrival_time);
            if (srpt_side) {
                for (auto& [id, ep] : tracked_) {
                    if (id != j.id) continue;
                    result_->divergences[ep].max_job_completion_time = clock_;
                    if (phase_ != Phase::Merged && ep + 1 == result_->divergences.size() && !dominated_)
                        pending_max_check_ = true;
                    id = kNoJob;
                }
                std::erase_if(tracked_, [](const auto& t) { return t.first == kNoJob; });
            }
            jobs.erase(jobs.begin() + static_cast<std::ptrdiff_t>(*it));
        }
    }

    static bool less(const Job& a, const Job& b) {
        return a.remaining < b.remaining || (a.remaining == b.remaining && a.id < b.id);
    }

    static void insert(std::vector<Job>& jobs, const Job& j) {
        jobs.insert(std::upper_bound(jobs.begin(), jobs.end(), j, less), j);
    }

    // Insertion sort; only served keys moved, so this is linear.
    static void sort_small_end(std::vector<Job>& v) {
        for (std::size_t i = 1; i < v.size(); ++i)
            for (std::size_t j = i; j > 0 && less(v[j], v[j - 1]); --j) std::swap(v[j], v[j - 1]);
    }

    void start_episode() {
        DivergenceRecord r;
        r.t_div = clock_;
        for (const auto& j : A_) r.snapshot.push_back(j.remaining);
        const double b = A_.back().remaining;
        future_.clear();
        const double horizon = clock_ + k_ * (b + 2 * params_.x);
        for (std::size_t i = 0;; ++i) {
            const Arrival* a = arrivals_->peek(i);
            if (!a || a->time > horizon) break;
            future_.push_back(*a);
        }
        r.scenario = classify_scenario(clock_, b, future_, params_, k_);
        result_->divergences.push_back(std::move(r));
        tracked_.emplace_back(B_.back().id, result_->divergences.size() - 1);
        phase_ = Phase::SekPhase;
        dominated_ = false;
        last_rplus_.reset();
    }

    void end_episode(EventKind ev) {
        auto& r = current();
        r.t_merge = clock_;
        if (!r.t_dom) r.t_dom = clock_;
        const double kd = k_;
        const double tol = kTol * (1 + (clock_ - r.t_div));
        if (opt_.level != AssertLevel::Off) {
            const double floor = -kd * params_.eps * (kd + 2 + static_cast<double>(r.arrivals_before_dom));
            if (r.delta < floor - tol)
                violate("ind_per_job", ev, "delta " + format_number(r.delta) + " below " + format_number(floor));
            if (r.scenario != Scenario::Bad && params_.eps <= params_.x / 6 * (1 + 1e-12) && r.delta < -tol)
                violate("nonnegative_good_neutral", ev,
                        std::string(to_string(r.scenario)) + " episode with delta " + format_number(r.delta));
        }
        phase_ = Phase::Merged;
    }

    void after_event(const CEvent& ev) {
        if (ev.kind == EventKind::Arrival && phase_ != Phase::Merged) {
            auto& r = current();
            ++r.arrivals;
            if (!dominated_) ++r.arrivals_before_dom;
            if (phase_ == Phase::SekPhase) {
                phase_ = Phase::SmodPhase;
                last_rplus_.reset();
            }
        }
        if (phase_ == Phase::Merged) {
            pending_max_check_ = false;
            return;
        }
        remaining(A_, rA_);
        remaining(B_, rB_);
        pad_into(rA_, rB_, joint_.bA, joint_.bB);
        joint_.d = A_.size() > B_.size() ? A_.size() - B_.size() : B_.size() - A_.size();
        joint_.phase = phase_;
        joint_.clock = clock_;

        if (is_merged(joint_)) {
            for (std::size_t i = 0; i < A_.size(); ++i) A_[i].remaining = B_[i].remaining;
            pending_max_check_ = false;
            end_episode(ev.kind);
            return;
        }
        if (!dominated_ && check_dominance(joint_)) {
            dominated_ = true;
            current().t_dom = clock_;
        }
        if (opt_.level != AssertLevel::Off) check(ev.kind);
        if (pending_max_check_) {
            pending_max_check_ = false;
            if (!dominated_ && opt_.level != AssertLevel::Off)
                violate("dominance_by_max_completion", ev.kind,
                        "SRPT side finished the divergence's largest job before dominance or merge");
        }
    }

    void check(EventKind ev) {
        const double wA = sum(rA_), wB = sum(rB_);
        const double scale = 1 + wB;
        if (wA > wB + kTol * scale)
            violate("work_inequality", ev, "W_A " + format_number(wA) + " > W_B " + format_number(wB));
        if (A_.size() > B_.size() + 1)
            violate("n_difference", ev, "N_A " + std::to_string(A_.size()) + " N_B " + std::to_string(B_.size()));
        if (B_.empty() && !A_.empty()) violate("renewal", ev, "SRPT side empty while SEK-SMOD side is not");
        if (opt_.level != AssertLevel::Full) return;

        const double tol = kTol * scale;
        if (!check_zigzag(joint_, tol)) violate("zigzag", ev, "b_A[i] > b_B[i+1]");
        if (!check_pln(joint_, tol)) violate("pln", ev, "a positive diff follows a negative diff");
        const double rplus = pos_part(joint_);
        if (rplus > params_.eps + tol)
            violate("rplus_bound", ev, "r+ " + format_number(rplus) + " > eps " + format_number(params_.eps));
        if (phase_ == Phase::SmodPhase) {
            if (last_rplus_ && rplus > *last_rplus_ + tol)
                violate("rplus_monotone", ev,
                        "r+ rose from " + format_number(*last_rplus_) + " to " + format_number(rplus));
            last_rplus_ = rplus;
        }
        if (dominated_ && !check_dominance(joint_, tol)) violate("dominance_persistence", ev, "dominance was lost");
    }

    static double sum(const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }

    void violate(std::string check, EventKind ev, std::string detail) {
        ++violation_count_;
        if (result_->violations.size() >= opt_.max_reported) return;
        Violation v;
        v.check = std::move(check);
        v.detail = std::move(detail);
        v.time = clock_;
        v.event_index = events_;
        v.event = ev;
        v.phase = phase_;
        if (!result_->divergences.empty()) v.episode = result_->divergences.size() - 1;
        remaining(A_, rA_);
        remaining(B_, rB_);
        pad_into(rA_, rB_, v.bA, v.bB);
        result_->violations.push_back(std::move(v));
    }

    RunStats finish(const Welford& resp, double area, std::string name) const {
        RunStats s;
        s.policy = std::move(name);
        s.k = k_;
        s.num_jobs = resp.count();
        s.total_time = clock_;
        s.area_n = area;
        s.mean_t = resp.mean();
        s.var_t = resp.variance();
        s.num_events = events_;
        return s;
    }

    static constexpr double kTol = 1e-9;
    static constexpr JobId kNoJob = std::numeric_limits<JobId>::max();

    ParamSet params_;
    FullSek sek_;
    int k_;
    CoupledOptions opt_;

    ArrivalStream* arrivals_ = nullptr;
    CoupledResult* result_ = nullptr;
    std::vector<Job> A_, B_;
    Selection selA_, selB_;
    std::vector<char> servedA_, servedB_;
    std::vector<double> rA_, rB_;
    std::vector<Arrival> future_;
    JointState joint_;
    Phase phase_ = Phase::Merged;
    double clock_ = 0.0;
    double areaA_ = 0.0, areaB_ = 0.0;
    Welford respA_, respB_;
    JobId next_id_ = 0;
    std::uint64_t events_ = 0;
    std::uint64_t violation_count_ = 0;
    bool dominated_ = false;
    bool pending_max_check_ = false;
    std::optional<double> last_rplus_;
    std::vector<std::pair<JobId, std::size_t>> tracked_;
};

inline CoupledResult run_coupled(const JobSizeModel& model, double lambda, int k, const ParamSet& params,
                                 std::uint64_t num_arrivals, std::uint64_t seed, CoupledOptions options = {}) {
    if (num_arrivals < 1) throw ConfigError("num_arrivals must be >= 1");
    ArrivalStream arrivals(model, lambda, seed, num_arrivals);
    CoupledResult r = CoupledSimulator(params, k, options).run(arrivals);
    const std::string fp = workload_fingerprint(model, lambda, k, num_arrivals, seed, std::nullopt);
    for (RunStats* s : {&r.seksmod, &r.srpt}) {
        s->seed = seed;
        s->lambda = lambda;
        s->fingerprint = fp;
    }
    r.seed = seed;
    return r;
}

}  // namespace sekq
