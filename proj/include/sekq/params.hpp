#pragma once

#include <cmath>
#include <string>

#include "sekq/errors.hpp"
#include "sekq/policies.hpp"
#include "sekq/spec_string.hpp"
#include "sekq/workload.hpp"

namespace sekq {

/// Thresholds of the coupled SEK-SMOD policy and the constants bounding its per-divergence gain.
struct ParamSet {
    double x = 0.0;
    double y = 0.0;
    double eps = 0.0;
    double eps_prime = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double c4 = 0.0;
    double rho_le_y = 0.0;
    /// eps*c3*c4 - eps^2*c1*c2: lower bound on the expected integrated number difference per
    /// divergence.
    double improvement_bound = 0.0;

    FullSek policy() const { return FullSek(eps_prime, eps, x, y, true); }
};

inline void fill_constants(ParamSet& p, double lambda, const JobSizeModel& model, int k) {
    const double band = prob_in_band(model, p.x);
    if (!(band > 0))
        throw ConfigError("no job-size mass in [x, 2x] for x=" + format_number(p.x) + "; pick another x");
    const double kd = k;
    p.rho_le_y = relevant_load(model, lambda, p.y);
    if (!(p.rho_le_y < 1)) throw ConfigError("relevant load of jobs <= y must be < 1");
    p.c1 = 2 * kd * lambda;
    p.c2 = kd * (lambda * ((kd + 1) * p.y + kd * p.x / 6) / (1 - p.rho_le_y) + kd + 2);
    p.c3 = std::pow(lambda * kd * p.x / 3, kd) * std::exp(-lambda * kd * (p.y + 8 * p.x / 3)) / std::tgamma(kd + 1) *
           std::pow(band, kd);
    p.c4 = kd / 2;
    p.improvement_bound = p.eps * p.c3 * p.c4 - p.eps * p.eps * p.c1 * p.c2;
}

/// y = 2x, eps = min(x/6, c3 c4 / (2 c1 c2)), eps' = eps/2.
inline ParamSet derive_parameters(double lambda, const JobSizeModel& model, int k, double x) {
    if (k < 2) throw ConfigError("the coupled policy needs k >= 2");
    if (!(x > 0)) throw ConfigError("x must be > 0");
    if (!(lambda > 0)) throw ConfigError("lambda must be > 0");
    ParamSet p;
    p.x = x;
    p.y = 2 * x;
    fill_constants(p, lambda, model, k);
    p.eps = std::min(x / 6, p.c3 * p.c4 / (2 * p.c1 * p.c2));
    p.eps_prime = p.eps / 2;
    p.improvement_bound = p.eps * p.c3 * p.c4 - p.eps * p.eps * p.c1 * p.c2;
    return p;
}

/// User-chosen thresholds (y = 2x unless given); the constants are still reported.
inline ParamSet practical_parameters(double lambda, const JobSizeModel& model, int k, double x, double eps,
                                     double eps_prime, double y = 0.0) {
    if (k < 2) throw ConfigError("the coupled policy needs k >= 2");
    ParamSet p;
    p.x = x;
    p.y = y > 0 ? y : 2 * x;
    p.eps = eps;
    p.eps_prime = eps_prime;
    (void)FullSek(eps_prime, eps, p.x, p.y, true);
    fill_constants(p, lambda, model, k);
    return p;
}

}  // namespace sekq
