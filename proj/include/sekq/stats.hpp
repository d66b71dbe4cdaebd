#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "sekq/errors.hpp"

namespace sekq {

/// Streaming mean/variance (Welford).
class Welford {
public:
    void add(double x) noexcept {
        ++n_;
        double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }
    std::uint64_t count() const noexcept { return n_; }
    double mean() const noexcept { return n_ ? mean_ : std::numeric_limits<double>::quiet_NaN(); }
    double variance() const noexcept {
        return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : std::numeric_limits<double>::quiet_NaN();
    }
    double stddev() const noexcept { return std::sqrt(variance()); }

private:
    std::uint64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Outcome of one single-queue run.
struct RunStats {
    std::string policy;
    /// Everything except the policy: two runs with equal fingerprints saw identical arrivals.
    std::string fingerprint;
    std::uint64_t seed = 0;
    int k = 1;
    double lambda = 0.0;
    std::uint64_t num_jobs = 0;
    double total_time = 0.0;
    double area_n = 0.0;  // integral of N(t) dt over [0, total_time]
    double mean_t = std::numeric_limits<double>::quiet_NaN();
    double var_t = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t peak_n = 0;
    std::uint64_t num_events = 0;
    /// Filled only when the run asked for per-job storage.
    std::vector<double> response_times;

    double time_avg_n() const { return total_time > 0 ? area_n / total_time : 0.0; }
    double total_response() const { return mean_t * static_cast<double>(num_jobs); }
};

/// Improvement of a candidate over a baseline, 1 - E[T_cand]/E[T_base].
struct Comparison {
    double baseline_mean_t = 0.0;
    double candidate_mean_t = 0.0;
    double ratio = 0.0;
    /// Paired-t 95% half-width over seeds; NaN with fewer than two pairs.
    double ci_halfwidth = std::numeric_limits<double>::quiet_NaN();
    std::size_t pairs = 0;
};

/// Two-sided 95% Student-t half-width for the mean of `values`.
inline double t_halfwidth95(std::span<const double> values) {
    if (values.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    Welford w;
    for (double v : values) w.add(v);
    boost::math::students_t dist(static_cast<double>(values.size() - 1));
    double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    return t * w.stddev() / std::sqrt(static_cast<double>(values.size()));
}

inline Comparison improvement_ratio(const RunStats& baseline, const RunStats& candidate) {
    if (baseline.fingerprint != candidate.fingerprint)
        throw PairingError("cannot pair runs with different workloads: '" + baseline.fingerprint + "' vs '" +
                           candidate.fingerprint + "'");
    Comparison c;
    c.baseline_mean_t = baseline.mean_t;
    c.candidate_mean_t = candidate.mean_t;
    c.ratio = 1.0 - candidate.mean_t / baseline.mean_t;
    c.pairs = 1;
    return c;
}

/// Pairs runs seed by seed (same index, same fingerprint). The ratio is the mean of the
/// per-seed ratios and the CI is a paired-t interval on those per-seed ratios.
inline Comparison improvement_ratio(std::span<const RunStats> baseline, std::span<const RunStats> candidate) {
    if (baseline.size() != candidate.size() || baseline.empty())
        throw PairingError("paired comparison needs equally many baseline and candidate runs");
    std::vector<double> ratios;
    Welford base, cand;
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        auto c = improvement_ratio(baseline[i], candidate[i]);
        ratios.push_back(c.ratio);
        base.add(c.baseline_mean_t);
        cand.add(c.candidate_mean_t);
    }
    Comparison out;
    out.baseline_mean_t = base.mean();
    out.candidate_mean_t = cand.mean();
    Welford r;
    for (double v : ratios) r.add(v);
    out.ratio = r.mean();
    out.ci_halfwidth = t_halfwidth95(ratios);
    out.pairs = ratios.size();
    return out;
}

inline constexpr std::size_t kBatchOracleMaxJobs = 8;

/// Minimum total response time of a batch on k servers of speed 1/k. Exhaustive over
/// nonpreemptive priority orders; preemption cannot help in the batch setting.
inline double batch_oracle(std::span<const double> sizes, int k) {
    if (sizes.size() > kBatchOracleMaxJobs)
        throw ConfigError("batch_oracle supports at most " + std::to_string(kBatchOracleMaxJobs) + " jobs");
    if (k < 1) throw ConfigError("k must be >= 1");
    std::vector<double> order(sizes.begin(), sizes.end());
    std::sort(order.begin(), order.end());
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> free_at(static_cast<std::size_t>(k));
    do {
        std::fill(free_at.begin(), free_at.end(), 0.0);
        double total = 0.0;
        for (double s : order) {
            auto server = std::min_element(free_at.begin(), free_at.end());
            *server += k * s;
            total += *server;
        }
        best = std::min(best, total);
    } while (std::next_permutation(order.begin(), order.end()));
    return sizes.empty() ? 0.0 : best;
}

/// |lambda E[T] - E[N]| / E[N].
inline double little_law_gap(const RunStats& stats, double lambda) {
    double n = stats.time_avg_n();
    if (stats.num_jobs == 0 || !(n > 0)) throw std::domain_error("Little's law gap is undefined for an empty run");
    return std::abs(lambda * stats.mean_t - n) / n;
}

}  // namespace sekq
