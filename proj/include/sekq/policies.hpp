#pragma once

#include <algorithm>
#include <array>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sekq/errors.hpp"
#include "sekq/job.hpp"
#include "sekq/spec_string.hpp"

namespace sekq {

/// Positions (into a key-sorted job vector) of the jobs in service.
using Selection = std::vector<std::size_t>;

namespace detail {

inline void first_k(std::size_t n, int k, Selection& out) {
    out.clear();
    for (std::size_t i = 0; i < n && i < static_cast<std::size_t>(k); ++i) out.push_back(i);
}

/// The k-1 smallest plus position k: skips the k-th smallest.
inline void skip_kth(int k, Selection& out) {
    out.clear();
    for (int i = 0; i + 1 < k; ++i) out.push_back(static_cast<std::size_t>(i));
    out.push_back(static_cast<std::size_t>(k));
}

template <class R, class KeyFn>
bool practical_sek_clauses(const R& sorted, int k, double eps, KeyFn key) {
    const auto kk = static_cast<std::size_t>(k);
    return sorted.size() == kk + 1 && below_level(key(sorted[kk - 1]), eps) && above_level(key(sorted[kk]), eps);
}

template <class R, class KeyFn>
bool sek_n_clauses(const R& sorted, int k, double eps, int n, KeyFn key) {
    const auto kk = static_cast<std::size_t>(k);
    return sorted.size() > kk && sorted.size() <= kk + static_cast<std::size_t>(n) &&
           below_level(key(sorted[kk - 1]), eps) && above_level(key(sorted[kk]), eps);
}

}  // namespace detail

// Every policy sees the jobs as a random-access range sorted by key() (ties by id) and selects
// positions in that order. Policies exposing levels() get exact threshold-crossing events on key(),
// which must decrease at rate 1/k while the job is in service.

struct Srpt {
    static constexpr bool kHasLevels = false;
    double key(const Job& j) const noexcept { return j.remaining; }
    std::span<const double> levels() const noexcept { return {}; }
    template <class R>
    void select(const R& sorted, int k, Selection& out) const { detail::first_k(sorted.size(), k, out); }
};

struct Psjf {
    static constexpr bool kHasLevels = false;
    double key(const Job& j) const noexcept { return j.size; }
    std::span<const double> levels() const noexcept { return {}; }
    template <class R>
    void select(const R& sorted, int k, Selection& out) const { detail::first_k(sorted.size(), k, out); }
};

struct Rs {
    static constexpr bool kHasLevels = false;
    double key(const Job& j) const noexcept { return j.remaining * j.size; }
    std::span<const double> levels() const noexcept { return {}; }
    template <class R>
    void select(const R& sorted, int k, Selection& out) const { detail::first_k(sorted.size(), k, out); }
};

/// Exactly k+1 jobs, k of them below eps and the largest above: serve the k-1 smallest and the
/// largest. Otherwise SRPT-k.
struct PracticalSek {
    static constexpr bool kHasLevels = true;
    double eps;
    std::array<double, 1> lv{};

    explicit PracticalSek(double e) : eps(e), lv{e} {
        if (!(e > 0)) throw ConfigError("sek requires eps > 0");
    }
    double key(const Job& j) const noexcept { return j.remaining; }
    std::span<const double> levels() const noexcept { return lv; }
    template <class R>
    void select(const R& sorted, int k, Selection& out) const {
        if (detail::practical_sek_clauses(sorted, k, eps, [this](const Job& j) { return key(j); }))
            detail::skip_kth(k, out);
        else
            detail::first_k(sorted.size(), k, out);
    }
};

/// At most k+n jobs, exactly k below eps: skip the k-th smallest in favour of the (k+1)-st.
struct SekN {
    static constexpr bool kHasLevels = true;
    double eps;
    int n;
    std::array<double, 1> lv{};

    SekN(double e, int count) : eps(e), n(count), lv{e} {
        if (!(e > 0)) throw ConfigError("sekn requires eps > 0");
        if (count < 1) throw ConfigError("sekn requires n >= 1");
    }
    double key(const Job& j) const noexcept { return j.remaining; }
    std::span<const double> levels() const noexcept { return lv; }
    template <class R>
    void select(const R& sorted, int k, Selection& out) const {
        if (detail::sek_n_clauses(sorted, k, eps, n, [this](const Job& j) { return key(j); }))
            detail::skip_kth(k, out);
        else
            detail::first_k(sorted.size(), k, out);
    }
};

/// Four-parameter SEK: k small jobs in [eps', eps] and the largest in [x, y].
struct FullSek {
    static constexpr bool kHasLevels = true;
    double eps_prime, eps, x, y;
    std::array<double, 4> lv{};

    /// allow_empty_band admits eps' == eps, a band no job can sit in (the policy never diverges).
    FullSek(double ep, double e, double xx, double yy, bool allow_empty_band = false)
        : eps_prime(ep), eps(e), x(xx), y(yy), lv{ep, e, xx, yy} {
        const bool band_ok = ep < e || (allow_empty_band && ep == e);
        if (!(0 <= ep && band_ok && e <= xx && xx < yy))
            throw ConfigError("fullsek requires 0 <= eps' < eps <= x < y");
    }
    double key(const Job& j) const noexcept { return j.remaining; }
    std::span<const double> levels() const noexcept { return lv; }

    template <class R>
    bool clauses(const R& sorted, int k) const noexcept {
        const auto kk = static_cast<std::size_t>(k);
        if (sorted.size() != kk + 1) return false;
        for (std::size_t i = 0; i < kk; ++i)
            if (!in_band(sorted[i].remaining, eps_prime, eps)) return false;
        return in_band(sorted[kk].remaining, x, y);
    }
    template <class R>
    void select(const R& sorted, int k, Selection& out) const {
        if (clauses(sorted, k))
            detail::skip_kth(k, out);
        else
            detail::first_k(sorted.size(), k, out);
    }
};

/// SRPT-k on the estimated remaining size (E - age)^+.
struct SrptEstimate {
    static constexpr bool kHasLevels = false;
    double key(const Job& j) const noexcept { return j.estimated_remaining(); }
    std::span<const double> levels() const noexcept { return {}; }
    template <class R>
    void select(const R& sorted, int k, Selection& out) const { detail::first_k(sorted.size(), k, out); }
};

/// Practical SEK on the estimated remaining size.
struct SekEstimate {
    static constexpr bool kHasLevels = true;
    double eps;
    std::array<double, 1> lv{};

    explicit SekEstimate(double e) : eps(e), lv{e} {
        if (!(e > 0)) throw ConfigError("sek-est requires eps > 0");
    }
    double key(const Job& j) const noexcept { return j.estimated_remaining(); }
    std::span<const double> levels() const noexcept { return lv; }
    template <class R>
    void select(const R& sorted, int k, Selection& out) const {
        if (detail::practical_sek_clauses(sorted, k, eps, [this](const Job& j) { return key(j); }))
            detail::skip_kth(k, out);
        else
            detail::first_k(sorted.size(), k, out);
    }
};

using PolicySpec = std::variant<Srpt, Psjf, Rs, PracticalSek, SekN, FullSek, SrptEstimate, SekEstimate>;

inline bool uses_estimates(const PolicySpec& p) {
    return std::holds_alternative<SrptEstimate>(p) || std::holds_alternative<SekEstimate>(p);
}

/// Eps parameter of SEK-family policies, NaN for the others.
inline double policy_eps(const PolicySpec& p) {
    return std::visit(
        [](const auto& q) -> double {
            if constexpr (requires { q.eps; }) return q.eps;
            else return std::numeric_limits<double>::quiet_NaN();
        },
        p);
}

inline int policy_n(const PolicySpec& p) {
    if (auto* s = std::get_if<SekN>(&p)) return s->n;
    return 0;
}

inline std::string to_string(const PolicySpec& p) {
    struct V {
        std::string operator()(const Srpt&) const { return "srpt"; }
        std::string operator()(const Psjf&) const { return "psjf"; }
        std::string operator()(const Rs&) const { return "rs"; }
        std::string operator()(const PracticalSek& s) const { return "sek:eps=" + format_number(s.eps); }
        std::string operator()(const SekN& s) const {
            return "sekn:eps=" + format_number(s.eps) + ",n=" + std::to_string(s.n);
        }
        std::string operator()(const FullSek& s) const {
            return "fullsek:epsp=" + format_number(s.eps_prime) + ",eps=" + format_number(s.eps) +
                   ",x=" + format_number(s.x) + ",y=" + format_number(s.y);
        }
        std::string operator()(const SrptEstimate&) const { return "srpt-est"; }
        std::string operator()(const SekEstimate& s) const { return "sek-est:eps=" + format_number(s.eps); }
    };
    return std::visit(V{}, p);
}

/// Short family name without parameters, used in CSV output.
inline std::string policy_family(const PolicySpec& p) {
    static constexpr std::array<const char*, 8> names{"srpt", "psjf", "rs", "sek", "sekn", "fullsek", "srpt-est", "sek-est"};
    return names[p.index()];
}

inline PolicySpec parse_policy(std::string_view text) {
    auto spec = SpecString::parse(text);
    const auto& n = spec.name;
    if (n == "srpt") return spec.expect_only({}), Srpt{};
    if (n == "psjf") return spec.expect_only({}), Psjf{};
    if (n == "rs") return spec.expect_only({}), Rs{};
    if (n == "srpt-est") return spec.expect_only({}), SrptEstimate{};
    if (n == "sek") return spec.expect_only({"eps"}), PracticalSek(spec.number("eps"));
    if (n == "sek-est") return spec.expect_only({"eps"}), SekEstimate(spec.number("eps"));
    if (n == "sekn") {
        spec.expect_only({"eps", "n"});
        double count = spec.number("n");
        if (count != std::floor(count)) throw ConfigError("sekn n must be an integer");
        return SekN(spec.number("eps"), static_cast<int>(count));
    }
    if (n == "fullsek") {
        spec.expect_only({"epsp", "eps", "x", "y"});
        return FullSek(spec.number("epsp"), spec.number("eps"), spec.number("x"), spec.number("y"));
    }
    throw ConfigError("unknown policy '" + n + "'");
}

/// Sorts jobs by the policy key (ties by id), as the engine keeps them.
template <class Policy>
void sort_by_key(const Policy& policy, std::vector<Job>& jobs) {
    std::sort(jobs.begin(), jobs.end(), [&policy](const Job& a, const Job& b) {
        double ka = policy.key(a), kb = policy.key(b);
        return ka < kb || (ka == kb && a.id < b.id);
    });
}

/// Runs a selector on jobs in any order; returns served job ids in priority order.
template <class Policy>
std::vector<JobId> select_ids(const Policy& policy, std::span<const Job> jobs, int k) {
    if (k < 1) throw ContractViolation("k must be >= 1");
    std::vector<Job> sorted(jobs.begin(), jobs.end());
    sort_by_key(policy, sorted);
    Selection sel;
    policy.select(sorted, k, sel);
    std::vector<JobId> ids;
    ids.reserve(sel.size());
    for (auto pos : sel) ids.push_back(sorted[pos].id);
    return ids;
}

inline std::vector<JobId> select_srpt_k(std::span<const Job> jobs, int k) { return select_ids(Srpt{}, jobs, k); }
inline std::vector<JobId> select_psjf_k(std::span<const Job> jobs, int k) { return select_ids(Psjf{}, jobs, k); }
inline std::vector<JobId> select_rs_k(std::span<const Job> jobs, int k) { return select_ids(Rs{}, jobs, k); }
inline std::vector<JobId> select_practical_sek(std::span<const Job> jobs, int k, double eps) {
    return select_ids(PracticalSek(eps), jobs, k);
}
inline std::vector<JobId> select_sek_n(std::span<const Job> jobs, int k, double eps, int n) {
    return select_ids(SekN(eps, n), jobs, k);
}
inline std::vector<JobId> select_full_sek(std::span<const Job> jobs, int k, double eps_prime, double eps, double x,
                                          double y) {
    return select_ids(FullSek(eps_prime, eps, x, y), jobs, k);
}

enum class EstimateVariant { Srpt, Sek };

inline std::vector<JobId> select_estimate(std::span<const Job> jobs, int k, EstimateVariant variant, double eps = 1.0) {
    for (const auto& j : jobs)
        if (!j.has_estimate()) throw ConfigError("estimate-based policy needs an estimate on every job");
    if (variant == EstimateVariant::Srpt) return select_ids(SrptEstimate{}, jobs, k);
    return select_ids(SekEstimate(eps), jobs, k);
}

}  // namespace sekq
