#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include "sekq/sekq.hpp"

using namespace sekq;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = SEKQ_CONFIG_DIR;

fs::path scratch() {
    auto p = fs::temp_directory_path() / ("sekq_test_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
}

int cli(const std::string& args) {
    const std::string cmd = std::string(SEKQ_CLI_PATH) + " " + args + " 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::string sweep_csv(const ExperimentConfig& cfg) {
    std::ostringstream os;
    write_stats_csv(os, cmd_sweep(cfg));
    return os.str();
}

ExperimentConfig small_sweep() {
    ExperimentConfig cfg;
    cfg.policies = {"srpt", "sek", "psjf"};
    cfg.rho = {0.8, 0.9};
    cfg.eps = {0.5, 1};
    cfg.seeds = {1, 2, 3};
    cfg.num_arrivals = 5000;
    return cfg;
}

}  // namespace

TEST(Config, LoadsShippedConfigs) {
    for (const auto& entry : fs::directory_iterator(kConfigs)) {
        auto cfg = load_config(entry.path().string());
        EXPECT_NO_THROW(cfg.validate()) << entry.path();
    }
    auto fig4a = load_config((kConfigs / "fig4a.json").string());
    EXPECT_EQ(fig4a.kind, ExperimentKind::Sweep);
    EXPECT_EQ(fig4a.num_arrivals, 10'000'000u);
    EXPECT_EQ(fig4a.eps, std::vector<double>({0.5, 1, 1.5}));
    EXPECT_EQ(fig4a.k, std::vector<int>({2}));
}

TEST(Config, RejectsBadInput) {
    ExperimentConfig cfg;
    EXPECT_THROW(apply_json(cfg, nlohmann::json{{"rhos", 0.5}}), ConfigError);
    EXPECT_THROW(apply_json(cfg, nlohmann::json{{"rho", "high"}}), ConfigError);
    EXPECT_THROW(apply_json(cfg, nlohmann::json{{"experiment", "fig9"}}), ConfigError);
    EXPECT_THROW(apply_json(cfg, nlohmann::json::array()), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
    apply_json(cfg, nlohmann::json{{"rho", 1.2}});
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, Seeds) {
    EXPECT_EQ(parse_seeds("1..3,9"), std::vector<std::uint64_t>({1, 2, 3, 9}));
    EXPECT_EQ(parse_seeds("7"), std::vector<std::uint64_t>({7}));
    EXPECT_THROW(parse_seeds("3..1"), ConfigError);
    EXPECT_THROW(parse_seeds("a"), ConfigError);
    EXPECT_THROW(parse_seeds(""), ConfigError);
}

TEST(Sweep, RowCountsAndBaselineRows) {
    auto cfg = small_sweep();
    auto rows = cmd_sweep(cfg);
    // series: srpt, sek x 2 eps, psjf = 4; per (rho, series): 3 seed rows + 1 aggregate
    EXPECT_EQ(rows.size(), 2u * 4 * (3 + 1));
    for (const auto& r : rows) {
        if (r.policy == "srpt") {
            EXPECT_EQ(r.improvement_ratio, 0.0);
        }
        if (!r.seed) {
            EXPECT_TRUE(std::isfinite(r.ci_halfwidth));
        }
    }
}

TEST(Sweep, ByteIdenticalAcrossRunsAndThreadCounts) {
    auto cfg = small_sweep();
    const auto a = sweep_csv(cfg);
    cfg.threads = 1;
    const auto b = sweep_csv(cfg);
    cfg.threads = 3;
    const auto c = sweep_csv(cfg);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
    EXPECT_EQ(a.substr(0, a.find('\n')),
              "policy,k,dist,rho,eps,n,sigma,seed,num_arrivals,mean_t,time_avg_n,improvement_ratio,ci_halfwidth");
}

TEST(Sweep, EmptyPolicyListIsAConfigError) {
    auto cfg = small_sweep();
    cfg.policies.clear();
    EXPECT_THROW(cmd_sweep(cfg), ConfigError);
}

TEST(Sweep, SinglePointSmokeIsFast) {
    ExperimentConfig cfg;
    cfg.rho = {0.8};
    cfg.num_arrivals = 10'000;
    cfg.seeds = {1};
    const auto t0 = std::chrono::steady_clock::now();
    auto rows = cmd_sweep(cfg);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    EXPECT_FALSE(rows.empty());
    EXPECT_LT(dt.count(), 5.0);
}

TEST(Estimates, SigmaRowsAgainstEstimateBaseline) {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Estimates;
    cfg.dist = "hyperexp:csq=10,rho_high=0.5,mean=1";
    cfg.eps = {2};
    cfg.sigma = {0.1, 0.001};
    cfg.rho = {0.9};
    cfg.seeds = {1, 2};
    cfg.num_arrivals = 5000;
    auto rows = cmd_estimates(cfg);
    std::size_t est = 0, perfect = 0;
    for (const auto& r : rows) {
        if (r.policy == "sek-est:eps=2") {
            ++est;
            ASSERT_TRUE(r.sigma.has_value());
        }
        if (r.policy == "sek:eps=2") {
            ++perfect;
            EXPECT_FALSE(r.sigma.has_value());
        }
    }
    EXPECT_EQ(est, 2u * 3);
    EXPECT_EQ(perfect, 3u);
    cfg.sigma.clear();
    EXPECT_THROW(cmd_estimates(cfg), ConfigError);
}

TEST(Table3, UnitCsqIsInfeasible) {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Table3;
    cfg.csq = {1};
    cfg.rho_high = {0.5};
    EXPECT_THROW(cmd_table3(cfg), InfeasibleParameters);
}

TEST(Table3, BestPerGroup) {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Table3;
    cfg.csq = {2, 10};
    cfg.rho_high = {0.3};
    cfg.rho = {0.9, 0.95};
    cfg.eps = {1, 2};
    cfg.seeds = {1, 2};
    cfg.num_arrivals = 5000;
    auto res = cmd_table3(cfg);
    ASSERT_EQ(res.best.size(), 2u);
    for (const auto& b : res.best) {
        double best = -1;
        for (const auto& r : res.rows)
            if (!r.seed && r.dist == hyperexp_label(b.csq, b.rho_high)) best = std::max(best, r.improvement_ratio);
        EXPECT_EQ(b.best_improvement, best);
    }
}

TEST(Coupled, PracticalLedger) {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Coupled;
    cfg.rho = {0.8};
    cfg.eps = {0.1};
    cfg.seeds = {1};
    cfg.num_arrivals = 1'000'000;
    auto ex = cmd_coupled(cfg);
    EXPECT_EQ(ex.violations, 0u);
    ASSERT_EQ(ex.summaries.size(), 1u);
    EXPECT_GE(ex.summaries[0].divergences, 1000u);
    std::ostringstream os;
    write_divergence_ledger(os, ex);
    const auto csv = os.str();
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "k,rho,eps,seed,t_div,b1,b2,b3,scenario,delta,t_dom_minus_t_div,t_merge_minus_t_div,arrivals_before_dom");
    EXPECT_EQ(lines(csv), ex.summaries[0].divergences + 1);
}

TEST(Coupled, ProofRegimeEchoesDerivedConstants) {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Coupled;
    cfg.regime = "proof";
    cfg.rho = {0.5};
    cfg.seeds = {1};
    cfg.num_arrivals = 20'000;
    auto ex = cmd_coupled(cfg);
    auto p = derive_parameters(0.5, JobSizeModel(Exponential{1.0}), 2, 1.0);
    const auto& s = ex.summaries.at(0).params;
    EXPECT_EQ(s.eps, p.eps);
    EXPECT_EQ(s.c1, p.c1);
    EXPECT_EQ(s.c2, p.c2);
    EXPECT_EQ(s.c3, p.c3);
    EXPECT_EQ(s.c4, p.c4);
}

TEST(Coupled, EmptyBandGivesNoDivergences) {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Coupled;
    cfg.rho = {0.8};
    cfg.eps = {0.1};
    cfg.eps_prime = 0.1;
    cfg.seeds = {1, 2};
    cfg.num_arrivals = 100'000;
    auto ex = cmd_coupled(cfg);
    EXPECT_EQ(ex.summaries.at(0).divergences, 0u);
    EXPECT_EQ(ex.violations, 0u);
}

TEST(BatchOracle, AllInstancesMatch) {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::BatchOracle;
    cfg.k = {2, 3};
    auto cases = cmd_batch_oracle(cfg);
    EXPECT_EQ(cases.size(), 2u * (4 + 16 + 64 + 256 + 1024));
    for (const auto& c : cases) EXPECT_EQ(c.simulated, c.oracle);
    cfg.max_jobs = 9;
    EXPECT_THROW(cmd_batch_oracle(cfg), ConfigError);
}

TEST(Cli, ExitCodesAndOutputs) {
    const auto dir = scratch();
    const auto out1 = dir / "a.csv", out2 = dir / "b.csv";
    const std::string smoke = (kConfigs / "smoke.json").string();
    EXPECT_EQ(cli("sweep --config " + smoke + " --out " + out1.string()), 0);
    EXPECT_EQ(cli("sweep --config " + smoke + " --threads 1 --out " + out2.string()), 0);
    const auto a = slurp(out1);
    EXPECT_EQ(a, slurp(out2));
    EXPECT_EQ(lines(a), 1u + 4 * 4);

    EXPECT_EQ(cli("sweep --config " + smoke + " --policies gittins"), 1);
    EXPECT_EQ(cli("sweep --rho 1.5 --arrivals 100"), 1);
    EXPECT_EQ(cli("table3 --csq 1 --rho-high 0.5 --arrivals 100 --seeds 1"), 1);
    EXPECT_EQ(cli("coupled --config " + smoke), 1);  // config for another experiment
    EXPECT_NE(cli("frobnicate"), 0);

    const auto ledger = dir / "ledger.csv";
    EXPECT_EQ(cli("coupled --arrivals 20000 --seeds 1 --out " + ledger.string()), 0);
    EXPECT_TRUE(fs::exists(dir / "ledger.summary.csv"));
    EXPECT_EQ(cli("coupled --arrivals 20000 --seeds 1 --inject-fault --out " + ledger.string()), 2);
    const auto report = slurp(dir / "ledger.violations.ndjson");
    ASSERT_FALSE(report.empty());
    auto first = nlohmann::json::parse(report.substr(0, report.find('\n')));
    EXPECT_TRUE(first.contains("check"));
    EXPECT_TRUE(first.contains("bA"));
    EXPECT_EQ(first["seed"], 1);

    const auto batch = dir / "batch.csv";
    EXPECT_EQ(cli("batch-oracle --config " + (kConfigs / "batch.json").string() + " --out " + batch.string()), 0);
    EXPECT_EQ(lines(slurp(batch)), 1u + 2 * 1364);

    const auto trace = dir / "trace.ndjson";
    EXPECT_EQ(cli("run --policy sek:eps=1 --arrivals 100 --trace " + trace.string()), 0);
    EXPECT_GE(lines(slurp(trace)), 200u);
    fs::remove_all(dir);
}
