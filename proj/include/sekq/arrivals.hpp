#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "sekq/workload.hpp"

namespace sekq {

struct Arrival {
    double time = 0.0;
    double size = 0.0;
    double estimate = std::numeric_limits<double>::quiet_NaN();
};

/// Arrival sequence with unbounded lookahead. Either a seeded Poisson stream (times, sizes and
/// estimate errors each from their own named stream) or an explicit replayed list.
class ArrivalStream {
public:
    ArrivalStream(JobSizeModel model, double lambda, std::uint64_t seed, std::uint64_t count,
                  std::optional<EstimateModel> estimates = std::nullopt)
        : model_(std::move(model)),
          arrivals_(lambda),
          estimates_(estimates),
          time_rng_(seed, Stream::Arrivals),
          size_rng_(seed, Stream::Sizes),
          est_rng_(seed, Stream::Estimates),
          to_generate_(count) {}

    /// Replays the given arrivals; times must be nondecreasing.
    explicit ArrivalStream(std::vector<Arrival> list) : model_(Exponential{1.0}), arrivals_(1.0) {
        double last = -std::numeric_limits<double>::infinity();
        for (const auto& a : list) {
            if (a.time < last) throw ContractViolation("replayed arrivals must be sorted by time");
            if (!(a.size > 0)) throw ContractViolation("arrival sizes must be > 0");
            last = a.time;
        }
        buffer_.assign(list.begin(), list.end());
    }

    bool exhausted() { return !fill(1); }

    /// i-th upcoming arrival, or nullptr if the stream ends first.
    const Arrival* peek(std::size_t i = 0) {
        if (!fill(i + 1)) return nullptr;
        return &buffer_[i];
    }

    Arrival pop() {
        if (!fill(1)) throw KernelError("pop from an exhausted arrival stream");
        Arrival a = buffer_.front();
        buffer_.pop_front();
        ++consumed_;
        return a;
    }

    std::uint64_t consumed() const noexcept { return consumed_; }
    bool has_estimates() const noexcept { return estimates_.has_value(); }

private:
    bool fill(std::size_t n) {
        while (buffer_.size() < n) {
            if (to_generate_ == 0) return false;
            --to_generate_;
            Arrival a;
            clock_ += sample_interarrival(arrivals_, time_rng_);
            a.time = clock_;
            a.size = sample_size(model_, size_rng_);
            if (estimates_) a.estimate = sample_estimate(a.size, *estimates_, est_rng_);
            buffer_.push_back(a);
        }
        return true;
    }

    JobSizeModel model_;
    ArrivalModel arrivals_;
    std::optional<EstimateModel> estimates_;
    RngStream time_rng_{0, Stream::Arrivals};
    RngStream size_rng_{0, Stream::Sizes};
    RngStream est_rng_{0, Stream::Estimates};
    std::uint64_t to_generate_ = 0;
    std::uint64_t consumed_ = 0;
    double clock_ = 0.0;
    std::deque<Arrival> buffer_;
};

/// A batch present at time zero, no further arrivals.
inline ArrivalStream batch_arrivals(std::span<const double> sizes) {
    std::vector<Arrival> list;
    for (double s : sizes) list.push_back({0.0, s, std::numeric_limits<double>::quiet_NaN()});
    return ArrivalStream(std::move(list));
}

}  // namespace sekq
