// Command-line driver: sweep, estimates, table3, coupled, batch-oracle, run.
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sekq/sekq.hpp"

namespace {

using namespace sekq;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitViolation = 2;

struct Overrides {
    std::string config;
    std::vector<double> rho, eps, sigma, csq, rho_high;
    std::vector<int> k, n;
    std::vector<std::string> policies;
    std::string dist, seeds, out, assert_level, regime;
    std::uint64_t arrivals = 0;
    std::optional<unsigned> threads;
    std::optional<double> x;
    bool inject_fault = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
    cmd->add_option("--rho", o.rho, "load grid")->delimiter(',');
    cmd->add_option("--eps", o.eps, "SEK threshold grid")->delimiter(',');
    cmd->add_option("--k", o.k, "server counts")->delimiter(',');
    cmd->add_option("--arrivals", o.arrivals, "arrivals per run");
    cmd->add_option("--seeds", o.seeds, "seed list, e.g. 1..5 or 1,4,9");
    cmd->add_option("--out", o.out, "output CSV (stdout if omitted)");
    cmd->add_option("--assert-level", o.assert_level, "off, cheap or full")
        ->check(CLI::IsMember({"off", "cheap", "full"}));
    cmd->add_option("--dist", o.dist, "job-size distribution, e.g. exp:rate=1");
    cmd->add_option("--threads", o.threads, "worker threads (0: all cores)");
}

ExperimentConfig build_config(ExperimentKind kind, const Overrides& o) {
    ExperimentConfig cfg;
    cfg.kind = kind;
    if (kind == ExperimentKind::Estimates) {
        cfg.dist = "hyperexp:csq=10,rho_high=0.5,mean=1";
        cfg.eps = {2.0};
        cfg.sigma = {0.1, 0.03, 0.01, 0.003, 0.001};
    }
    if (kind == ExperimentKind::Coupled) {
        cfg.rho = {0.8};
        cfg.eps = {0.1};
    }
    if (kind == ExperimentKind::Table3) {
        cfg.rho = {0.9, 0.91, 0.92, 0.93, 0.94, 0.95, 0.96, 0.97, 0.98, 0.99};
        cfg.eps = {1, 1.5, 2, 3};
    }
    if (!o.config.empty()) {
        cfg = load_config(o.config, cfg);
        if (cfg.kind != kind) throw ConfigError("config is for a different experiment than the subcommand");
    }
    if (!o.rho.empty()) cfg.rho = o.rho;
    if (!o.eps.empty()) cfg.eps = o.eps;
    if (!o.k.empty()) cfg.k = o.k;
    if (!o.n.empty()) cfg.n = o.n;
    if (!o.sigma.empty()) cfg.sigma = o.sigma;
    if (!o.csq.empty()) cfg.csq = o.csq;
    if (!o.rho_high.empty()) cfg.rho_high = o.rho_high;
    if (!o.policies.empty()) cfg.policies = o.policies;
    if (!o.dist.empty()) cfg.dist = o.dist;
    if (!o.seeds.empty()) cfg.seeds = parse_seeds(o.seeds);
    if (!o.out.empty()) cfg.out = o.out;
    if (!o.assert_level.empty()) cfg.assert_level = parse_assert_level(o.assert_level);
    if (!o.regime.empty()) cfg.regime = o.regime;
    if (o.arrivals) cfg.num_arrivals = o.arrivals;
    if (o.threads) cfg.threads = *o.threads;
    if (o.x) cfg.x = *o.x;
    cfg.inject_fault = o.inject_fault;
    return cfg;
}

/// Main output goes to cfg.out or stdout; side files only when cfg.out is set.
class Output {
public:
    explicit Output(const std::string& path) {
        if (path.empty()) return;
        file_ = std::make_unique<std::ofstream>(path);
        if (!*file_) throw ConfigError("cannot write '" + path + "'");
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

void write_side(const std::string& out, const std::string& suffix, auto&& writer) {
    if (out.empty()) return;
    const auto path = sibling_path(out, suffix);
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write '" + path + "'");
    writer(f);
    std::cerr << "wrote " << path << '\n';
}

int do_sweep(const ExperimentConfig& cfg) {
    const auto rows = cfg.kind == ExperimentKind::Estimates ? cmd_estimates(cfg) : cmd_sweep(cfg);
    Output out(cfg.out);
    write_stats_csv(out.stream(), rows);
    return kExitOk;
}

int do_table3(const ExperimentConfig& cfg) {
    const auto res = cmd_table3(cfg);
    Output out(cfg.out);
    write_stats_csv(out.stream(), res.rows);
    if (cfg.out.empty()) write_table3_best_csv(std::cerr, res.best);
    write_side(cfg.out, ".best.csv", [&](std::ostream& os) { write_table3_best_csv(os, res.best); });
    return kExitOk;
}

int do_coupled(const ExperimentConfig& cfg) {
    const auto ex = cmd_coupled(cfg);
    Output out(cfg.out);
    write_divergence_ledger(out.stream(), ex);
    if (cfg.out.empty()) write_coupled_summary(std::cerr, ex);
    write_side(cfg.out, ".summary.csv", [&](std::ostream& os) { write_coupled_summary(os, ex); });
    if (ex.violations == 0) return kExitOk;
    const auto path = cfg.out.empty() ? std::string("violations.ndjson") : sibling_path(cfg.out, ".violations.ndjson");
    std::ofstream f(path);
    write_violations(f, ex, cfg.dist);
    std::cerr << ex.violations << " invariant violation(s); report: " << path << '\n';
    return kExitViolation;
}

int do_batch(const ExperimentConfig& cfg) {
    const auto cases = cmd_batch_oracle(cfg);
    Output out(cfg.out);
    write_batch_csv(out.stream(), cases);
    std::size_t bad = 0;
    for (const auto& c : cases) bad += c.simulated != c.oracle;
    if (bad == 0) return kExitOk;
    std::cerr << bad << " batch instance(s) where SRPT-k missed the optimum\n";
    return kExitViolation;
}

struct RunArgs {
    std::string policy = "srpt";
    std::string dist = "exp:rate=1";
    double rho = 0.8;
    int k = 2;
    std::uint64_t arrivals = 10000;
    std::uint64_t seed = 1;
    double sigma = -1;
    std::string trace;
};

int do_run(const RunArgs& a) {
    const auto model = parse_distribution(a.dist);
    std::optional<EstimateModel> est;
    if (a.sigma >= 0) est = EstimateModel(a.sigma);
    std::ofstream trace_file;
    RunOptions opt;
    if (!a.trace.empty()) {
        trace_file.open(a.trace);
        if (!trace_file) throw ConfigError("cannot write '" + a.trace + "'");
        opt.trace = ndjson_trace(trace_file);
    }
    const auto st = run_single(parse_policy(a.policy), model, a.rho / model.mean(), a.k, a.arrivals, a.seed, est, opt);
    write_csv_row(std::cout, {"policy", "fingerprint", "num_jobs", "mean_t", "time_avg_n", "peak_n", "little_gap"});
    write_csv_row(std::cout, {st.policy, st.fingerprint, std::to_string(st.num_jobs), csv_number(st.mean_t),
                              csv_number(st.time_avg_n()), std::to_string(st.peak_n),
                              csv_number(little_law_gap(st, st.lambda))});
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"M/G/k scheduling simulator: SEK, SMOD and SEK-SMOD against SRPT-k"};
    app.require_subcommand(1);

    Overrides o;
    auto* sweep = app.add_subcommand("sweep", "improvement ratios over a policy x load x eps grid");
    add_common(sweep, o);
    sweep->add_option("--policies", o.policies, "policy families or specs, space separated");
    sweep->add_option("--n", o.n, "SEK-n grid")->delimiter(',');
    sweep->add_option("--sigma", o.sigma, "estimate error grid")->delimiter(',');

    auto* estimates = app.add_subcommand("estimates", "SEK-Estimate vs SRPT-Estimate over a sigma grid");
    add_common(estimates, o);
    estimates->add_option("--sigma", o.sigma, "estimate error grid")->delimiter(',');

    auto* table3 = app.add_subcommand("table3", "best SEK improvement per hyperexponential");
    add_common(table3, o);
    table3->add_option("--csq", o.csq, "squared coefficients of variation")->delimiter(',');
    table3->add_option("--rho-high", o.rho_high, "high-branch load fractions")->delimiter(',');

    auto* coupled = app.add_subcommand("coupled", "SEK-SMOD vs SRPT-k on coupled paths with invariant checks");
    add_common(coupled, o);
    coupled->add_option("--regime", o.regime, "practical or proof")->check(CLI::IsMember({"practical", "proof"}));
    coupled->add_option("--x", o.x, "large-job threshold x");
    coupled->add_flag("--inject-fault", o.inject_fault, "make SMOD serve its largest jobs (checker self-test)")
        ->group("");

    auto* batch = app.add_subcommand("batch-oracle", "SRPT-k against exhaustive search on small batches");
    add_common(batch, o);

    RunArgs ra;
    auto* run = app.add_subcommand("run", "one run, optionally with an event trace");
    run->add_option("--policy", ra.policy, "policy spec, e.g. sek:eps=1");
    run->add_option("--dist", ra.dist, "job-size distribution");
    run->add_option("--rho", ra.rho, "load");
    run->add_option("--k", ra.k, "servers");
    run->add_option("--arrivals", ra.arrivals, "arrivals");
    run->add_option("--seed", ra.seed, "run seed");
    run->add_option("--sigma", ra.sigma, "estimate error; omit for exact sizes");
    run->add_option("--trace", ra.trace, "NDJSON event trace path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return do_run(ra);
        if (sweep->parsed()) return do_sweep(build_config(ExperimentKind::Sweep, o));
        if (estimates->parsed()) return do_sweep(build_config(ExperimentKind::Estimates, o));
        if (table3->parsed()) return do_table3(build_config(ExperimentKind::Table3, o));
        if (coupled->parsed()) return do_coupled(build_config(ExperimentKind::Coupled, o));
        if (batch->parsed()) return do_batch(build_config(ExperimentKind::BatchOracle, o));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
