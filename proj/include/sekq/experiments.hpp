#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sekq/coupled.hpp"
#include "sekq/engine.hpp"
#include "sekq/params.hpp"
#include "sekq/policies.hpp"
#include "sekq/report.hpp"
#include "sekq/stats.hpp"
#include "sekq/workload.hpp"

namespace sekq {

enum class ExperimentKind { Sweep, Coupled, Table3, Estimates, BatchOracle };

inline ExperimentKind parse_experiment_kind(std::string_view s) {
    if (s == "sweep") return ExperimentKind::Sweep;
    if (s == "coupled") return ExperimentKind::Coupled;
    if (s == "table3") return ExperimentKind::Table3;
    if (s == "estimates") return ExperimentKind::Estimates;
    if (s == "batch-oracle") return ExperimentKind::BatchOracle;
    throw ConfigError("unknown experiment '" + std::string(s) + "'");
}

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Sweep;
    /// Family names (sek, sekn, sek-est expand over the eps/n grids) or full specs like sek:eps=1.
    std::vector<std::string> policies{"srpt", "sek"};
    std::string dist = "exp:rate=1";
    std::vector<int> k{2};
    std::vector<double> rho{0.95};
    std::vector<double> eps{1.0};
    std::vector<int> n{2};
    std::vector<double> sigma;
    std::uint64_t num_arrivals = 1'000'000;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::string out;
    AssertLevel assert_level = AssertLevel::Full;
    unsigned threads = 0;  // 0: one per hardware thread

    // table3
    std::vector<double> csq{2, 4, 10, 20, 40};
    std::vector<double> rho_high{0.1, 0.3, 0.5, 0.7, 0.9};

    // coupled
    std::string regime = "practical";  // or "proof"
    double x = 1.0;
    std::optional<double> eps_prime;  // default eps/2
    std::optional<double> y;          // default 2x
    bool inject_fault = false;        // checker self-test; never set from config files

    // batch-oracle
    std::size_t max_jobs = 5;
    std::vector<double> sizes{1, 2, 3, 4};

    void validate() const {
        if (k.empty() || seeds.empty()) throw ConfigError("k and seeds must be nonempty");
        for (int kk : k)
            if (kk < 1) throw ConfigError("k must be >= 1");
        if (num_arrivals < 1) throw ConfigError("num_arrivals must be >= 1");
        if (kind == ExperimentKind::BatchOracle) return;
        if (rho.empty()) throw ConfigError("load grid is empty");
        for (double r : rho)
            if (!(r > 0 && r < 1)) throw ConfigError("loads must lie in (0,1), got " + format_number(r));
        if (kind == ExperimentKind::Sweep && policies.empty()) throw ConfigError("policy list is empty");
    }
};

/// Runs f(i) for i in [0, n) on up to `threads` workers; results keep index order.
template <class R, class F>
std::vector<R> parallel_map(std::size_t n, unsigned threads, F f) {
    std::vector<R> out(n);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                out[i] = f(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = n;
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    return out;
}

/// Expands family names over the eps and n grids.
inline std::vector<PolicySpec> expand_policies(const ExperimentConfig& cfg) {
    std::vector<PolicySpec> out;
    for (const auto& name : cfg.policies) {
        if (name.find(':') != std::string::npos) out.push_back(parse_policy(name));
        else if (name == "sek" || name == "sek-est") {
            if (cfg.eps.empty()) throw ConfigError(name + " needs a nonempty eps grid");
            for (double e : cfg.eps) out.push_back(parse_policy(name + ":eps=" + format_number(e)));
        } else if (name == "sekn") {
            if (cfg.eps.empty() || cfg.n.empty()) throw ConfigError("sekn needs nonempty eps and n grids");
            for (double e : cfg.eps)
                for (int nn : cfg.n) out.push_back(SekN(e, nn));
        } else
            out.push_back(parse_policy(name));
    }
    if (out.empty()) throw ConfigError("policy list is empty");
    return out;
}

/// One row of the stats CSV.
struct StatsRow {
    std::string policy;
    int k = 0;
    std::string dist;
    double rho = 0.0;
    double eps = std::numeric_limits<double>::quiet_NaN();
    int n = 0;
    std::optional<double> sigma;
    std::optional<std::uint64_t> seed;  // empty on aggregate rows
    std::uint64_t num_arrivals = 0;
    double mean_t = 0.0;
    double time_avg_n = 0.0;
    double improvement_ratio = 0.0;
    double ci_halfwidth = std::numeric_limits<double>::quiet_NaN();
};

inline const std::vector<std::string>& stats_header() {
    static const std::vector<std::string> h{"policy", "k",      "dist",         "rho",      "eps",
                                            "n",      "sigma",  "seed",         "num_arrivals",
                                            "mean_t", "time_avg_n", "improvement_ratio", "ci_halfwidth"};
    return h;
}

inline void write_stats_csv(std::ostream& os, const std::vector<StatsRow>& rows) {
    write_csv_row(os, stats_header());
    for (const auto& r : rows)
        write_csv_row(os, {r.policy, std::to_string(r.k), r.dist, csv_number(r.rho), csv_number(r.eps),
                           r.n ? std::to_string(r.n) : "", r.sigma ? csv_number(*r.sigma) : "",
                           r.seed ? std::to_string(*r.seed) : "all", std::to_string(r.num_arrivals),
                           csv_number(r.mean_t), csv_number(r.time_avg_n), csv_number(r.improvement_ratio),
                           csv_number(r.ci_halfwidth)});
}

namespace detail {

struct RunKey {
    std::string policy;
    int k;
    double rho;
    std::optional<double> sigma;
    std::uint64_t seed;
    auto operator<=>(const RunKey&) const = default;
};

struct SeriesKey {
    PolicySpec policy;
    std::optional<double> sigma;
};

inline PolicySpec baseline_for(const PolicySpec& p) {
    return uses_estimates(p) ? PolicySpec(SrptEstimate{}) : PolicySpec(Srpt{});
}

}  // namespace detail

/// Improvement of each policy over its SRPT baseline (SRPT-Estimate for estimate-driven
/// policies, at the same sigma) for every (k, rho, policy, sigma, seed), plus one aggregate
/// row per seed group. All policies at one (k, rho, seed) see identical arrivals.
inline std::vector<StatsRow> run_sweep(const ExperimentConfig& cfg, const std::string& dist_label,
                                       const JobSizeModel& model, const std::vector<PolicySpec>& policies) {
    std::vector<detail::SeriesKey> series;
    for (const auto& p : policies) {
        if (uses_estimates(p)) {
            if (cfg.sigma.empty()) throw ConfigError(to_string(p) + " needs a nonempty sigma grid");
            for (double s : cfg.sigma) series.push_back({p, s});
        } else
            series.push_back({p, std::nullopt});
    }

    std::map<detail::RunKey, std::size_t> index;
    std::vector<std::pair<detail::RunKey, PolicySpec>> runs;
    auto want = [&](const PolicySpec& p, int k, double rho, std::optional<double> sigma, std::uint64_t seed) {
        detail::RunKey key{to_string(p), k, rho, sigma, seed};
        if (!index.count(key)) {
            index[key] = runs.size();
            runs.emplace_back(key, p);
        }
        return key;
    };
    for (int k : cfg.k)
        for (double rho : cfg.rho)
            for (const auto& s : series)
                for (auto seed : cfg.seeds) {
                    want(detail::baseline_for(s.policy), k, rho, s.sigma, seed);
                    want(s.policy, k, rho, s.sigma, seed);
                }

    const double mean = model.mean();
    auto results = parallel_map<RunStats>(runs.size(), cfg.threads, [&](std::size_t i) {
        const auto& [key, policy] = runs[i];
        std::optional<EstimateModel> est;
        if (key.sigma) est = EstimateModel(*key.sigma);
        try {
            return run_single(policy, model, key.rho / mean, key.k, cfg.num_arrivals, key.seed, est);
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string(e.what()) + " [policy " + key.policy + ", dist " + dist_label +
                                     ", k " + std::to_string(key.k) + ", rho " + format_number(key.rho) +
                                     ", seed " + std::to_string(key.seed) + "]");
        }
    });

    std::vector<StatsRow> rows;
    for (int k : cfg.k)
        for (double rho : cfg.rho)
            for (const auto& s : series) {
                std::vector<RunStats> base, cand;
                StatsRow proto;
                proto.policy = to_string(s.policy);
                proto.k = k;
                proto.dist = dist_label;
                proto.rho = rho;
                proto.eps = policy_eps(s.policy);
                proto.n = policy_n(s.policy);
                proto.sigma = s.sigma;
                proto.num_arrivals = cfg.num_arrivals;
                Welford tavg;
                for (auto seed : cfg.seeds) {
                    const auto& b = results[index.at({to_string(detail::baseline_for(s.policy)), k, rho, s.sigma, seed})];
                    const auto& c = results[index.at({to_string(s.policy), k, rho, s.sigma, seed})];
                    base.push_back(b);
                    cand.push_back(c);
                    StatsRow r = proto;
                    r.seed = seed;
                    r.mean_t = c.mean_t;
                    r.time_avg_n = c.time_avg_n();
                    r.improvement_ratio = improvement_ratio(b, c).ratio;
                    tavg.add(r.time_avg_n);
                    rows.push_back(r);
                }
                const Comparison cmp = improvement_ratio(std::span<const RunStats>(base), std::span<const RunStats>(cand));
                StatsRow agg = proto;
                agg.mean_t = cmp.candidate_mean_t;
                agg.time_avg_n = tavg.mean();
                agg.improvement_ratio = cmp.ratio;
                agg.ci_halfwidth = cmp.ci_halfwidth;
                rows.push_back(agg);
            }
    return rows;
}

inline std::vector<StatsRow> cmd_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    return run_sweep(cfg, cfg.dist, parse_distribution(cfg.dist), expand_policies(cfg));
}

/// Imperfect-information comparison: SEK-Estimate vs SRPT-Estimate per sigma, alongside
/// perfect-information SEK vs SRPT on the same arrivals.
inline std::vector<StatsRow> cmd_estimates(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.sigma.empty()) throw ConfigError("estimates needs a nonempty sigma grid");
    ExperimentConfig c = cfg;
    c.policies = {"sek-est", "sek"};
    return run_sweep(c, c.dist, parse_distribution(c.dist), expand_policies(c));
}

struct Table3Best {
    double csq = 0.0;
    double rho_high = 0.0;
    double best_improvement = 0.0;
    double best_rho = 0.0;
    double best_eps = 0.0;
    double ci_halfwidth = 0.0;
};

struct Table3Result {
    std::vector<StatsRow> rows;
    std::vector<Table3Best> best;
};

inline std::string hyperexp_label(double csq, double rho_high) {
    return "hyperexp:csq=" + format_number(csq) + ",rho_high=" + format_number(rho_high) + ",mean=1";
}

/// SEK over the eps grid on two-branch hyperexponentials; per distribution reports the best
/// aggregate improvement (ties: smaller eps, then smaller rho).
inline Table3Result cmd_table3(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.csq.empty() || cfg.rho_high.empty() || cfg.eps.empty()) throw ConfigError("table3 grids must be nonempty");
    for (double c : cfg.csq)
        if (!(c > 1))
            throw InfeasibleParameters("table3 needs C^2 > 1 for a two-branch hyperexponential, got " + format_number(c),
                                       0.0);
    ExperimentConfig c = cfg;
    c.policies = {"sek"};
    const auto policies = expand_policies(c);
    Table3Result out;
    for (double csq : cfg.csq)
        for (double rh : cfg.rho_high) {
            const auto label = hyperexp_label(csq, rh);
            auto rows = run_sweep(c, label, hyperexp_from_moments(csq, rh, 1.0), policies);
            std::optional<Table3Best> best;
            for (const auto& r : rows) {
                if (r.seed) continue;
                const bool better = !best || r.improvement_ratio > best->best_improvement ||
                                    (r.improvement_ratio == best->best_improvement &&
                                     (r.eps < best->best_eps || (r.eps == best->best_eps && r.rho < best->best_rho)));
                if (better) best = Table3Best{csq, rh, r.improvement_ratio, r.rho, r.eps, r.ci_halfwidth};
            }
            out.best.push_back(*best);
            out.rows.insert(out.rows.end(), rows.begin(), rows.end());
        }
    return out;
}

inline void write_table3_best_csv(std::ostream& os, const std::vector<Table3Best>& best) {
    write_csv_row(os, {"csq", "rho_high", "best_improvement", "best_rho", "best_eps", "ci_halfwidth"});
    for (const auto& b : best)
        write_csv_row(os, {csv_number(b.csq), csv_number(b.rho_high), csv_number(b.best_improvement),
                           csv_number(b.best_rho), csv_number(b.best_eps), csv_number(b.ci_halfwidth)});
}

struct CoupledSummary {
    int k = 0;
    double rho = 0.0;
    ParamSet params;
    std::uint64_t divergences = 0;
    double p_bad = 0.0, p_bad_se = 0.0;
    double p_good = 0.0, p_good_se = 0.0;
    double mean_delta = std::numeric_limits<double>::quiet_NaN();
    double delta_ci_halfwidth = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t violations = 0;
    double mean_t_seksmod = 0.0;
    double mean_t_srpt = 0.0;
};

struct CoupledExperiment {
    std::vector<CoupledResult> runs;  // in (k, rho, eps, seed) order
    std::vector<CoupledSummary> summaries;
    std::uint64_t violations = 0;
};

inline ParamSet coupled_params(const ExperimentConfig& cfg, const JobSizeModel& model, int k, double rho, double eps) {
    const double lambda = rho / model.mean();
    if (cfg.regime == "proof") return derive_parameters(lambda, model, k, cfg.x);
    if (cfg.regime != "practical") throw ConfigError("regime must be practical or proof");
    return practical_parameters(lambda, model, k, cfg.x, eps, cfg.eps_prime.value_or(eps / 2), cfg.y.value_or(0.0));
}

/// Summary statistics over a set of divergence episodes.
inline void summarize_divergences(const std::vector<const DivergenceRecord*>& recs, CoupledSummary& s) {
    s.divergences = recs.size();
    if (recs.empty()) return;
    const double n = static_cast<double>(recs.size());
    std::vector<double> deltas;
    double bad = 0, good = 0;
    for (const auto* r : recs) {
        bad += r->scenario == Scenario::Bad;
        good += r->scenario == Scenario::Good;
        deltas.push_back(r->delta);
    }
    s.p_bad = bad / n;
    s.p_good = good / n;
    s.p_bad_se = std::sqrt(s.p_bad * (1 - s.p_bad) / n);
    s.p_good_se = std::sqrt(s.p_good * (1 - s.p_good) / n);
    Welford w;
    for (double d : deltas) w.add(d);
    s.mean_delta = w.mean();
    s.delta_ci_halfwidth = t_halfwidth95(deltas);
}

inline CoupledExperiment cmd_coupled(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto model = parse_distribution(cfg.dist);
    const std::vector<double> eps_grid = cfg.regime == "proof" ? std::vector<double>{0.0} : cfg.eps;
    if (eps_grid.empty()) throw ConfigError("coupled practical regime needs an eps grid");
    struct Task {
        int k;
        double rho;
        double eps;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (int k : cfg.k)
        for (double rho : cfg.rho)
            for (double e : eps_grid)
                for (auto seed : cfg.seeds) tasks.push_back({k, rho, e, seed});

    CoupledOptions opt;
    opt.level = cfg.assert_level;
    opt.invert_smod = cfg.inject_fault;
    CoupledExperiment out;
    out.runs = parallel_map<CoupledResult>(tasks.size(), cfg.threads, [&](std::size_t i) {
        const auto& t = tasks[i];
        const auto params = coupled_params(cfg, model, t.k, t.rho, t.eps);
        auto r = run_coupled(model, t.rho / model.mean(), t.k, params, cfg.num_arrivals, t.seed, opt);
        r.rho = t.rho;
        return r;
    });

    std::size_t i = 0;
    while (i < tasks.size()) {
        CoupledSummary s;
        s.k = tasks[i].k;
        s.rho = tasks[i].rho;
        s.params = out.runs[i].params;
        std::vector<const DivergenceRecord*> recs;
        Welford ta, tb;
        for (std::size_t j = 0; j < cfg.seeds.size(); ++j, ++i) {
            const auto& r = out.runs[i];
            for (const auto& d : r.divergences) recs.push_back(&d);
            s.violations += r.violation_count;
            ta.add(r.seksmod.mean_t);
            tb.add(r.srpt.mean_t);
        }
        summarize_divergences(recs, s);
        s.mean_t_seksmod = ta.mean();
        s.mean_t_srpt = tb.mean();
        out.violations += s.violations;
        out.summaries.push_back(s);
    }
    return out;
}

inline void write_divergence_ledger(std::ostream& os, const CoupledExperiment& ex) {
    int kmax = 0;
    for (const auto& r : ex.runs) kmax = std::max(kmax, r.seksmod.k);
    std::vector<std::string> header{"k", "rho", "eps", "seed", "t_div"};
    for (int i = 1; i <= kmax + 1; ++i) header.push_back("b" + std::to_string(i));
    for (const char* h : {"scenario", "delta", "t_dom_minus_t_div", "t_merge_minus_t_div", "arrivals_before_dom"})
        header.emplace_back(h);
    write_csv_row(os, header);
    for (const auto& r : ex.runs) {
        for (const auto& d : r.divergences) {
            std::vector<std::string> row{std::to_string(r.seksmod.k), csv_number(r.rho), csv_number(r.params.eps),
                                         std::to_string(r.seed), csv_number(d.t_div)};
            for (int i = 0; i <= kmax; ++i)
                row.push_back(static_cast<std::size_t>(i) < d.snapshot.size() ? csv_number(d.snapshot[i]) : "");
            row.push_back(to_string(d.scenario));
            row.push_back(csv_number(d.delta));
            row.push_back(d.t_dom ? csv_number(*d.t_dom - d.t_div) : "");
            row.push_back(csv_number(d.t_merge - d.t_div));
            row.push_back(std::to_string(d.arrivals_before_dom));
            write_csv_row(os, row);
        }
    }
}

inline void write_coupled_summary(std::ostream& os, const CoupledExperiment& ex) {
    write_csv_row(os, {"k", "rho", "x", "y", "eps", "eps_prime", "c1", "c2", "c3", "c4", "improvement_bound",
                       "divergences", "p_bad", "p_bad_se", "c1_eps", "p_good", "p_good_se", "mean_delta",
                       "delta_ci_halfwidth", "violations", "mean_t_seksmod", "mean_t_srpt"});
    for (const auto& s : ex.summaries) {
        const auto& p = s.params;
        write_csv_row(os, {std::to_string(s.k), csv_number(s.rho), csv_number(p.x), csv_number(p.y), csv_number(p.eps),
                           csv_number(p.eps_prime), csv_number(p.c1), csv_number(p.c2), csv_number(p.c3),
                           csv_number(p.c4), csv_number(p.improvement_bound), std::to_string(s.divergences),
                           csv_number(s.p_bad), csv_number(s.p_bad_se), csv_number(p.c1 * p.eps),
                           csv_number(s.p_good), csv_number(s.p_good_se), csv_number(s.mean_delta),
                           csv_number(s.delta_ci_halfwidth), std::to_string(s.violations),
                           csv_number(s.mean_t_seksmod), csv_number(s.mean_t_srpt)});
    }
}

inline void write_violations(std::ostream& os, const CoupledExperiment& ex, const std::string& workload) {
    for (const auto& r : ex.runs)
        for (const auto& v : r.violations) os << to_json(v, r, workload, r.seksmod.k).dump() << '\n';
}

struct BatchCase {
    int k = 0;
    std::vector<double> sizes;
    double simulated = 0.0;
    double oracle = 0.0;
};

/// Every size sequence of length 1..max_jobs over the size set, for each k.
inline std::vector<BatchCase> cmd_batch_oracle(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.sizes.empty()) throw ConfigError("batch-oracle needs a nonempty size set");
    if (cfg.max_jobs > kBatchOracleMaxJobs)
        throw ConfigError("batch-oracle supports at most " + std::to_string(kBatchOracleMaxJobs) + " jobs");
    std::vector<BatchCase> out;
    for (int k : cfg.k) {
        for (std::size_t len = 1; len <= cfg.max_jobs; ++len) {
            std::vector<std::size_t> digits(len, 0);
            for (;;) {
                BatchCase c;
                c.k = k;
                for (auto d : digits) c.sizes.push_back(cfg.sizes[d]);
                const auto st = run_batch(Srpt{}, c.sizes, k);
                for (double t : st.response_times) c.simulated += t;
                c.oracle = batch_oracle(c.sizes, k);
                out.push_back(std::move(c));
                std::size_t i = 0;
                while (i < len && ++digits[i] == cfg.sizes.size()) digits[i++] = 0;
                if (i == len) break;
            }
        }
    }
    return out;
}

inline void write_batch_csv(std::ostream& os, const std::vector<BatchCase>& cases) {
    write_csv_row(os, {"k", "sizes", "simulated_total", "oracle_total", "match"});
    for (const auto& c : cases) {
        std::string sizes;
        for (double s : c.sizes) sizes += (sizes.empty() ? "" : " ") + format_number(s);
        write_csv_row(os, {std::to_string(c.k), sizes, csv_number(c.simulated), csv_number(c.oracle),
                           c.simulated == c.oracle ? "1" : "0"});
    }
}

/// "a/b.csv" + ".summary.csv" -> "a/b.summary.csv".
inline std::string sibling_path(const std::string& out, const std::string& suffix) {
    auto slash = out.find_last_of('/');
    auto dot = out.find_last_of('.');
    std::string stem = (dot != std::string::npos && (slash == std::string::npos || dot > slash)) ? out.substr(0, dot) : out;
    return stem + suffix;
}

}  // namespace sekq
