#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace sekq {

/// Named random streams split from a run seed. Each concern draws from its own
/// generator so changing how one stream is consumed never shifts another.
enum class Stream : std::uint64_t {
    Arrivals = 1,
    Sizes = 2,
    Estimates = 3,
    Fuzz = 4,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class RngStream {
public:
    RngStream(std::uint64_t seed, Stream stream)
        : engine_(splitmix64(splitmix64(seed) ^ splitmix64(static_cast<std::uint64_t>(stream) * 0x632be59bd9b4e019ULL))) {}

    /// Uniform on the open interval (0, 1).
    double uniform_open() noexcept {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Exp(rate) by inversion; strictly positive.
    double exponential(double rate) noexcept { return -std::log(uniform_open()) / rate; }

    double standard_normal() { return normal_(engine_); }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace sekq
