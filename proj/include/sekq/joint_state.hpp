#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sekq/errors.hpp"
#include "sekq/job.hpp"

namespace sekq {

enum class Phase { Merged, SekPhase, SmodPhase };

inline const char* to_string(Phase p) {
    switch (p) {
        case Phase::Merged: return "merged";
        case Phase::SekPhase: return "sek";
        case Phase::SmodPhase: return "smod";
    }
    return "?";
}

/// Two coupled systems as equal-length sorted vectors; the shorter one is front-padded with
/// zeros. A is the SEK-SMOD side, B the SRPT-k side.
struct JointState {
    std::vector<double> bA;
    std::vector<double> bB;
    std::size_t d = 0;
    double clock = 0.0;
    Phase phase = Phase::Merged;
    std::optional<double> last_divergence;
    std::uint64_t arrivals_since_divergence = 0;

    std::size_t size() const noexcept { return bA.size(); }
    double diff(std::size_t i) const noexcept { return bA[i] - bB[i]; }
};

inline void require_sorted(std::span<const double> r, const char* which) {
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(r[i] > 0)) throw ContractViolation(std::string(which) + " remaining sizes must be > 0");
        if (i > 0 && r[i] < r[i - 1]) throw ContractViolation(std::string(which) + " must be sorted ascending");
    }
}

/// Front-pads into existing buffers; no validation. Used on every coupled event.
inline void pad_into(std::span<const double> rA, std::span<const double> rB, std::vector<double>& bA,
                     std::vector<double>& bB) {
    const std::size_t len = std::max(rA.size(), rB.size());
    bA.assign(len - rA.size(), 0.0);
    bA.insert(bA.end(), rA.begin(), rA.end());
    bB.assign(len - rB.size(), 0.0);
    bB.insert(bB.end(), rB.begin(), rB.end());
}

inline JointState pad_states(std::span<const double> rA, std::span<const double> rB) {
    require_sorted(rA, "rA");
    require_sorted(rB, "rB");
    JointState j;
    pad_into(rA, rB, j.bA, j.bB);
    j.d = rA.size() > rB.size() ? rA.size() - rB.size() : rB.size() - rA.size();
    return j;
}

inline double pos_part(const JointState& j) {
    double s = 0.0;
    for (std::size_t i = 0; i < j.size(); ++i) s += std::max(j.diff(i), 0.0);
    return s;
}

inline double neg_part(const JointState& j) {
    double s = 0.0;
    for (std::size_t i = 0; i < j.size(); ++i) s += std::max(-j.diff(i), 0.0);
    return s;
}

inline bool check_dominance(const JointState& j, double tol = kSnap) {
    for (std::size_t i = 0; i < j.size(); ++i)
        if (j.diff(i) > tol) return false;
    return true;
}

inline bool check_zigzag(const JointState& j, double tol = kSnap) {
    for (std::size_t i = 0; i + 1 < j.size(); ++i)
        if (j.bA[i] > j.bB[i + 1] + tol) return false;
    return true;
}

/// Every positive-diff index precedes every negative-diff index.
inline bool check_pln(const JointState& j, double tol = kSnap) {
    bool seen_negative = false;
    for (std::size_t i = 0; i < j.size(); ++i) {
        double d = j.diff(i);
        if (d < -tol) seen_negative = true;
        else if (d > tol && seen_negative) return false;
    }
    return true;
}

inline bool is_merged(const JointState& j, double tol = kSnap) {
    if (j.d != 0) return false;
    for (std::size_t i = 0; i < j.size(); ++i)
        if (std::abs(j.diff(i)) >= tol) return false;
    return true;
}

}  // namespace sekq
