#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>

namespace sekq {

/// Remaining sizes and work differences below this magnitude are exactly zero.
inline constexpr double kSnap = 1e-12;

using JobId = std::uint64_t;

struct Job {
    JobId id = 0;
    double size = 0.0;
    double remaining = 0.0;
    double arrival_time = 0.0;
    /// Size estimate seen by the scheduler; NaN when the run carries no estimates.
    double estimate = std::numeric_limits<double>::quiet_NaN();

    double age() const noexcept { return size - remaining; }
    bool has_estimate() const noexcept { return !std::isnan(estimate); }
    /// (estimate - age)^+; stays at 0 once exhausted, until the job truly completes.
    double estimated_remaining() const noexcept { return std::max(estimate - age(), 0.0); }
    std::optional<double> estimate_opt() const {
        return has_estimate() ? std::optional<double>(estimate) : std::nullopt;
    }
};

/// Threshold comparisons read the state just after the current instant: a served job sitting
/// exactly on a level is about to drop below it, so "on the level" counts as below.
inline bool below_level(double key, double level) noexcept { return key < level + kSnap; }
inline bool above_level(double key, double level) noexcept { return !below_level(key, level); }
inline bool in_band(double key, double lo, double hi) noexcept {
    return above_level(key, lo) && below_level(key, hi);
}

}  // namespace sekq
