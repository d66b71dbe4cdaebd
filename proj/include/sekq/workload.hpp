#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include "sekq/errors.hpp"
#include "sekq/rng.hpp"
#include "sekq/spec_string.hpp"

namespace sekq {

struct Exponential {
    double rate;
};

struct Uniform {
    double lo;
    double hi;
};

/// Two-branch hyperexponential; branch 1 (probability p, rate mu1) is the high-mean branch
/// when built through hyperexp_from_moments.
struct HyperExp2 {
    double p;
    double mu1;
    double mu2;
};

/// Job-size distribution. All quantities the parameter derivation needs are closed form.
class JobSizeModel {
public:
    using Variant = std::variant<Exponential, Uniform, HyperExp2>;

    JobSizeModel(Exponential e) : v_(e) {
        if (!(e.rate > 0)) throw ConfigError("exponential rate must be > 0");
    }
    JobSizeModel(Uniform u) : v_(u) {
        if (!(u.lo >= 0) || !(u.hi > u.lo)) throw ConfigError("uniform requires 0 <= lo < hi");
    }
    JobSizeModel(HyperExp2 h) : v_(h) {
        if (!(h.p > 0 && h.p < 1)) throw ConfigError("hyperexponential branch probability must be in (0,1)");
        if (!(h.mu1 > 0) || !(h.mu2 > 0)) throw ConfigError("hyperexponential rates must be > 0");
    }

    const Variant& variant() const noexcept { return v_; }

    double mean() const {
        return std::visit(
            [](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Exponential>) return 1.0 / d.rate;
                else if constexpr (std::is_same_v<T, Uniform>) return 0.5 * (d.lo + d.hi);
                else return d.p / d.mu1 + (1 - d.p) / d.mu2;
            },
            v_);
    }

    double second_moment() const {
        return std::visit(
            [](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Exponential>) return 2.0 / (d.rate * d.rate);
                else if constexpr (std::is_same_v<T, Uniform>)
                    return (d.hi * d.hi + d.hi * d.lo + d.lo * d.lo) / 3.0;
                else return 2 * d.p / (d.mu1 * d.mu1) + 2 * (1 - d.p) / (d.mu2 * d.mu2);
            },
            v_);
    }

    double csq() const {
        double m = mean();
        return second_moment() / (m * m) - 1.0;
    }

    double cdf(double s) const {
        if (s <= 0) return 0.0;
        return std::visit(
            [s](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Exponential>) return -std::expm1(-d.rate * s);
                else if constexpr (std::is_same_v<T, Uniform>) {
                    if (s <= d.lo) return 0.0;
                    if (s >= d.hi) return 1.0;
                    return (s - d.lo) / (d.hi - d.lo);
                } else
                    return d.p * -std::expm1(-d.mu1 * s) + (1 - d.p) * -std::expm1(-d.mu2 * s);
            },
            v_);
    }

    /// E[S 1{S <= y}].
    double truncated_mean(double y) const {
        if (y <= 0) return 0.0;
        auto exp_part = [y](double mu) {
            if (std::isinf(y)) return 1.0 / mu;
            return 1.0 / mu - (y + 1.0 / mu) * std::exp(-mu * y);
        };
        return std::visit(
            [&](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Exponential>) return exp_part(d.rate);
                else if constexpr (std::is_same_v<T, Uniform>) {
                    if (y <= d.lo) return 0.0;
                    if (y >= d.hi) return 0.5 * (d.lo + d.hi);
                    return (y * y - d.lo * d.lo) / (2 * (d.hi - d.lo));
                } else
                    return d.p * exp_part(d.mu1) + (1 - d.p) * exp_part(d.mu2);
            },
            v_);
    }

    double sample(RngStream& rng) const {
        return std::visit(
            [&rng](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Exponential>) return rng.exponential(d.rate);
                else if constexpr (std::is_same_v<T, Uniform>) return d.lo + (d.hi - d.lo) * rng.uniform_open();
                else {
                    double branch = rng.uniform_open();
                    return rng.exponential(branch < d.p ? d.mu1 : d.mu2);
                }
            },
            v_);
    }

    /// Canonical spec string; parse(to_string()) reproduces the same model.
    std::string to_string() const {
        return std::visit(
            [](const auto& d) -> std::string {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Exponential>) return "exp:rate=" + format_number(d.rate);
                else if constexpr (std::is_same_v<T, Uniform>)
                    return "uniform:lo=" + format_number(d.lo) + ",hi=" + format_number(d.hi);
                else
                    return "hyperexp2:p=" + format_number(d.p) + ",mu1=" + format_number(d.mu1) +
                           ",mu2=" + format_number(d.mu2);
            },
            v_);
    }

private:
    Variant v_;
};

/// Solves for the two-branch hyperexponential with the given mean, squared coefficient of
/// variation, and fraction of load carried by the high-mean branch.
///
/// With p = rho_high*mean*mu1 and mu2 = (1-p)/((1-rho_high)*mean) the second-moment condition
/// becomes a quadratic in mu1; the root with 1/mu1 >= mean is the high-mean branch.
inline JobSizeModel hyperexp_from_moments(double csq, double rho_high, double mean) {
    if (!(mean > 0)) throw ConfigError("hyperexponential mean must be > 0");
    if (!(rho_high > 0 && rho_high < 1)) throw ConfigError("rho_high must be in (0,1)");
    const double m = mean, r = rho_high;
    const double a = (csq + 1) * r * m * m * m;
    const double b = 2 * m * m * ((1 - r) * (1 - r) - r * r) - (csq + 1) * m * m;
    const double c = 2 * r * m;
    const double disc = b * b - 4 * a * c;
    // Exact C^2 = 1 gives a double root that rounding can push slightly negative.
    const double scale = b * b;
    if (!(csq >= 1) || disc < -1e-12 * scale)
        throw InfeasibleParameters("no two-branch hyperexponential with csq=" + format_number(csq) +
                                       ", rho_high=" + format_number(rho_high) + " (discriminant " +
                                       format_number(disc) + ")",
                                   disc);
    const double root = std::sqrt(std::max(disc, 0.0));
    // Numerically stable smaller root (b < 0 here).
    const double q = -0.5 * (b - root);
    double mu1 = c / q;
    if (mu1 * m > 1.0) mu1 = 1.0 / m;  // rounding at the C^2 = 1 boundary
    const double p = r * m * mu1;
    const double mu2 = (1 - p) / ((1 - r) * m);
    if (!(p > 0 && p < 1) || !(mu2 > 0))
        throw InfeasibleParameters("hyperexponential solution leaves p outside (0,1)", disc);
    return JobSizeModel(HyperExp2{p, mu1, mu2});
}

/// rho_{<=y} = lambda E[S 1{S <= y}].
inline double relevant_load(const JobSizeModel& model, double lambda, double y) {
    if (y < 0) throw ContractViolation("relevant_load requires y >= 0");
    return lambda * model.truncated_mean(y);
}

/// P(x <= S <= 2x).
inline double prob_in_band(const JobSizeModel& model, double x) {
    if (!(x > 0)) throw ContractViolation("prob_in_band requires x > 0");
    return std::visit(
        [x](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            auto exp_band = [x](double mu) { return std::exp(-mu * x) - std::exp(-2 * mu * x); };
            if constexpr (std::is_same_v<T, Exponential>) return exp_band(d.rate);
            else if constexpr (std::is_same_v<T, Uniform>) {
                double lo = std::max(x, d.lo), hi = std::min(2 * x, d.hi);
                return hi > lo ? (hi - lo) / (d.hi - d.lo) : 0.0;
            } else
                return d.p * exp_band(d.mu1) + (1 - d.p) * exp_band(d.mu2);
        },
        model.variant());
}

struct ArrivalModel {
    double lambda;

    explicit ArrivalModel(double rate) : lambda(rate) {
        if (!(rate > 0)) throw ConfigError("arrival rate must be > 0");
    }
    double load(const JobSizeModel& m) const { return lambda * m.mean(); }
    bool stable(const JobSizeModel& m) const { return load(m) < 1.0; }
};

/// Additive N(0, sigma) error on the size, clamped at zero. sigma = 0 is exact information.
struct EstimateModel {
    double sigma = 0.0;

    explicit EstimateModel(double s = 0.0) : sigma(s) {
        if (!(s >= 0)) throw ConfigError("estimate sigma must be >= 0");
    }
};

inline double sample_size(const JobSizeModel& model, RngStream& rng) { return model.sample(rng); }

inline double sample_interarrival(const ArrivalModel& arrivals, RngStream& rng) {
    return rng.exponential(arrivals.lambda);
}

/// (s + d)^+ for a given error draw.
inline double estimate_from_error(double size, double error) { return std::max(size + error, 0.0); }

/// Always consumes one normal draw so sigma grids share common random numbers.
inline double sample_estimate(double size, const EstimateModel& est, RngStream& rng) {
    double z = rng.standard_normal();
    if (est.sigma == 0.0) return size;
    return estimate_from_error(size, est.sigma * z);
}

/// Parses `exp:rate=1`, `uniform:lo=0,hi=2`, `hyperexp:csq=10,rho_high=0.5,mean=1`,
/// or the raw `hyperexp2:p=..,mu1=..,mu2=..`.
inline JobSizeModel parse_distribution(std::string_view text) {
    auto spec = SpecString::parse(text);
    if (spec.name == "exp") {
        spec.expect_only({"rate", "mean"});
        if (spec.has("mean")) return JobSizeModel(Exponential{1.0 / spec.number("mean")});
        return JobSizeModel(Exponential{spec.number("rate")});
    }
    if (spec.name == "uniform") {
        spec.expect_only({"lo", "hi"});
        return JobSizeModel(Uniform{spec.number("lo"), spec.number("hi")});
    }
    if (spec.name == "hyperexp") {
        spec.expect_only({"csq", "rho_high", "mean"});
        double mean = spec.has("mean") ? spec.number("mean") : 1.0;
        double rho_high = spec.has("rho_high") ? spec.number("rho_high") : 0.5;
        return hyperexp_from_moments(spec.number("csq"), rho_high, mean);
    }
    if (spec.name == "hyperexp2") {
        spec.expect_only({"p", "mu1", "mu2"});
        return JobSizeModel(HyperExp2{spec.number("p"), spec.number("mu1"), spec.number("mu2")});
    }
    throw ConfigError("unknown distribution '" + spec.name + "'");
}

}  // namespace sekq
