#include <algorithm>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "sekq/engine.hpp"
#include "sekq/policies.hpp"
#include "sekq/stats.hpp"

using namespace sekq;

namespace {

// Jobs with ids 0..n-1 and the given remaining sizes; size = remaining unless given.
std::vector<Job> jobs_from(const std::vector<double>& rem, std::vector<double> sizes = {}) {
    std::vector<Job> out;
    for (std::size_t i = 0; i < rem.size(); ++i) {
        double s = sizes.empty() ? rem[i] : sizes[i];
        out.push_back(Job{i, s, rem[i], 0.0});
    }
    return out;
}

std::vector<double> remaining_of(const std::vector<Job>& jobs, const std::vector<JobId>& ids) {
    std::vector<double> r;
    for (auto id : ids)
        for (const auto& j : jobs)
            if (j.id == id) r.push_back(j.remaining);
    std::sort(r.begin(), r.end());
    return r;
}

std::vector<Job> random_state(RngStream& rng, std::size_t n, double scale) {
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < n; ++i) {
        double size = rng.exponential(1.0 / scale);
        double rem = size * rng.uniform_open();
        double est = std::max(0.0, size + (rng.uniform_open() - 0.5));
        jobs.push_back(Job{i * 7 + 3, size, rem, 0.0, est});
    }
    std::shuffle(jobs.begin(), jobs.end(), rng.engine());
    return jobs;
}

using V = std::vector<double>;

}  // namespace

TEST(Srpt, ServesTwoSmallest) {
    auto jobs = jobs_from({4, 1, 5, 2, 5});
    EXPECT_EQ(remaining_of(jobs, select_srpt_k(jobs, 2)), V({1, 2}));
}

TEST(Srpt, FewerJobsThanServers) {
    auto jobs = jobs_from({3.5});
    EXPECT_EQ(select_srpt_k(jobs, 2), std::vector<JobId>({0}));
}

TEST(Srpt, TiesBrokenById) {
    std::vector<Job> jobs{{4, 2, 2, 0}, {7, 2, 2, 0}, {9, 2, 2, 0}, {1, 9, 9, 0}};
    auto ids = select_srpt_k(jobs, 3);
    EXPECT_EQ(std::set<JobId>(ids.begin(), ids.end()), std::set<JobId>({4, 7, 9}));
    std::vector<Job> tied{{5, 2, 2, 0}, {2, 2, 2, 0}, {8, 2, 2, 0}};
    EXPECT_EQ(select_srpt_k(tied, 2), std::vector<JobId>({2, 5}));
}

TEST(Psjf, IgnoresRemaining) {
    auto jobs = jobs_from({0.1, 1, 2}, {3, 1, 2});
    auto ids = select_psjf_k(jobs, 2);
    EXPECT_EQ(std::set<JobId>(ids.begin(), ids.end()), std::set<JobId>({1, 2}));
}

TEST(Rs, ProductOrder) {
    auto jobs = jobs_from({1, 2.5}, {4, 2});
    EXPECT_EQ(select_rs_k(jobs, 1), std::vector<JobId>({0}));
}

TEST(PracticalSek, Examples) {
    auto a = jobs_from({0.3, 0.5, 7});
    EXPECT_EQ(remaining_of(a, select_practical_sek(a, 2, 1.0)), V({0.3, 7}));
    auto b = jobs_from({0.3, 0.5, 0.7, 7});
    EXPECT_EQ(remaining_of(b, select_practical_sek(b, 2, 1.0)), V({0.3, 0.5}));
    auto c = jobs_from({0.3, 1.4, 7});
    EXPECT_EQ(remaining_of(c, select_practical_sek(c, 2, 1.0)), V({0.3, 1.4}));
}

TEST(PracticalSek, OnTheLevelCountsAsBelow) {
    // A served key at exactly eps is about to drop under it.
    auto on = jobs_from({0.3, 1.0, 7});
    EXPECT_EQ(remaining_of(on, select_practical_sek(on, 2, 1.0)), V({0.3, 7}));
    auto big = jobs_from({0.3, 0.5, 1.0});
    EXPECT_EQ(remaining_of(big, select_practical_sek(big, 2, 1.0)), V({0.3, 0.5}));
}

TEST(SekN, Examples) {
    auto a = jobs_from({0.2, 0.4, 0.9, 3, 8});
    EXPECT_EQ(remaining_of(a, select_sek_n(a, 3, 1.0, 2)), V({0.2, 0.4, 3}));
    auto b = jobs_from({0.2, 0.4, 0.9, 3, 8, 9});
    EXPECT_EQ(remaining_of(b, select_sek_n(b, 3, 1.0, 2)), V({0.2, 0.4, 0.9}));
}

TEST(FullSek, Examples) {
    auto a = jobs_from({0.06, 0.09, 1.5});
    EXPECT_EQ(remaining_of(a, select_full_sek(a, 2, 0.05, 0.1, 1, 2)), V({0.06, 1.5}));
    auto b = jobs_from({0.06, 0.09, 2.5});
    EXPECT_EQ(remaining_of(b, select_full_sek(b, 2, 0.05, 0.1, 1, 2)), V({0.06, 0.09}));
    auto c = jobs_from({0.01, 0.09, 1.5});
    EXPECT_EQ(remaining_of(c, select_full_sek(c, 2, 0.05, 0.1, 1, 2)), V({0.01, 0.09}));
}

TEST(FullSek, ParameterOrdering) {
    EXPECT_THROW(FullSek(0.1, 0.1, 1, 2), ConfigError);
    EXPECT_NO_THROW(FullSek(0.1, 0.1, 1, 2, true));
    EXPECT_THROW(FullSek(0.05, 0.1, 1, 1), ConfigError);
    EXPECT_THROW(FullSek(0.05, 2, 1, 3), ConfigError);
    EXPECT_THROW(FullSek(-0.01, 0.1, 1, 2), ConfigError);
    // An empty band admits no state.
    auto a = jobs_from({0.1, 0.1, 1.5});
    FullSek empty(0.1, 0.1, 1, 2, true);
    std::vector<Job> sorted = a;
    sort_by_key(empty, sorted);
    EXPECT_FALSE(empty.clauses(sorted, 2));
}

TEST(Estimates, ExactEstimatesMatchExactPolicies) {
    RngStream rng(21, Stream::Fuzz);
    for (int trial = 0; trial < 2000; ++trial) {
        auto jobs = random_state(rng, 1 + trial % 6, 1.0);
        for (auto& j : jobs) j.estimate = j.size;
        for (int k : {1, 2, 3}) {
            EXPECT_EQ(select_estimate(jobs, k, EstimateVariant::Srpt), select_srpt_k(jobs, k));
            EXPECT_EQ(select_estimate(jobs, k, EstimateVariant::Sek, 0.5), select_practical_sek(jobs, k, 0.5));
        }
    }
}

TEST(Estimates, KeyIsTheEstimate) {
    // true remaining 1 with estimated remaining 3; true remaining 2 with estimated remaining 0.5
    std::vector<Job> jobs{{0, 4, 1, 0, 6}, {1, 2, 2, 0, 0.5}};
    EXPECT_EQ(select_estimate(jobs, 1, EstimateVariant::Srpt), std::vector<JobId>({1}));
}

TEST(Estimates, ExhaustedEstimateHasTopPriority) {
    std::vector<Job> jobs{{0, 5, 4, 0, 0.2}, {1, 0.3, 0.3, 0, 0.3}};
    EXPECT_EQ(jobs[0].estimated_remaining(), 0.0);
    EXPECT_EQ(select_estimate(jobs, 1, EstimateVariant::Srpt), std::vector<JobId>({0}));
}

TEST(Estimates, MissingEstimateIsAConfigError) {
    auto jobs = jobs_from({1, 2});
    EXPECT_THROW(select_estimate(jobs, 1, EstimateVariant::Srpt), ConfigError);
}

TEST(Estimates, NoStarvationWithLargeErrors) {
    for (auto policy : {parse_policy("srpt-est"), parse_policy("sek-est:eps=2")}) {
        auto st = run_single(policy, JobSizeModel(Exponential{1.0}), 0.8, 2, 10'000, 4, EstimateModel(3.0));
        EXPECT_EQ(st.num_jobs, 10'000u) << to_string(policy);
    }
}

TEST(SelectorProperties, ServeMinKDistinctAndArePure) {
    RngStream rng(33, Stream::Fuzz);
    std::vector<PolicySpec> policies{Srpt{},         Psjf{},          Rs{},          PracticalSek(0.7),
                                     SekN(0.7, 2),   SekN(0.7, 1),    SrptEstimate{}, SekEstimate(0.7),
                                     FullSek(0.2, 0.7, 1, 2)};
    for (int trial = 0; trial < 3000; ++trial) {
        const std::size_t n = trial % 9;
        auto jobs = random_state(rng, n, trial % 2 ? 0.6 : 2.0);
        for (int k : {1, 2, 3, 4}) {
            for (const auto& p : policies) {
                auto ids = std::visit([&](const auto& pol) { return select_ids(pol, jobs, k); }, p);
                EXPECT_EQ(ids.size(), std::min<std::size_t>(n, static_cast<std::size_t>(k))) << to_string(p);
                EXPECT_EQ(std::set<JobId>(ids.begin(), ids.end()).size(), ids.size());
                for (auto id : ids)
                    EXPECT_TRUE(std::any_of(jobs.begin(), jobs.end(), [&](const Job& j) { return j.id == id; }));
                auto again = std::visit([&](const auto& pol) { return select_ids(pol, jobs, k); }, p);
                EXPECT_EQ(ids, again);
            }
        }
    }
}

TEST(SelectorProperties, SekDiffersFromSrptOnlyBySwap) {
    RngStream rng(34, Stream::Fuzz);
    int swaps = 0;
    for (int trial = 0; trial < 20000; ++trial) {
        const int k = 1 + trial % 3;
        auto jobs = random_state(rng, trial % 2 ? k + 1 : 1 + (trial / 2) % 6, 0.8);
        const double eps = 0.5;
        auto srpt = select_srpt_k(jobs, k);
        auto sek = select_practical_sek(jobs, k, eps);
        auto sorted = jobs;
        sort_by_key(Srpt{}, sorted);
        const bool clauses = sorted.size() == static_cast<std::size_t>(k) + 1 &&
                             sorted[k - 1].remaining < eps && sorted[k].remaining > eps;
        if (!clauses) {
            EXPECT_EQ(sek, srpt);
            continue;
        }
        ++swaps;
        auto expect = srpt;
        expect.back() = sorted[k].id;  // k-th smallest replaced by the largest
        EXPECT_EQ(sek, expect);
    }
    EXPECT_GT(swaps, 100);
}

TEST(SelectorProperties, SekOneEqualsPracticalSek) {
    RngStream rng(35, Stream::Fuzz);
    for (int trial = 0; trial < 5000; ++trial) {
        auto jobs = random_state(rng, trial % 8, 0.7);
        for (int k : {1, 2, 3})
            EXPECT_EQ(select_sek_n(jobs, k, 0.5, 1), select_practical_sek(jobs, k, 0.5));
    }
}

TEST(SelectorProperties, RsWithFreshJobsIsPsjf) {
    RngStream rng(36, Stream::Fuzz);
    for (int trial = 0; trial < 2000; ++trial) {
        auto jobs = random_state(rng, trial % 8, 1.0);
        for (auto& j : jobs) j.remaining = j.size;
        for (int k : {1, 2, 3}) EXPECT_EQ(select_rs_k(jobs, k), select_psjf_k(jobs, k));
    }
}

// Batch setting: SRPT-k total response time is the minimum over every implemented policy,
// and equals the exhaustive optimum.
TEST(SelectorProperties, SrptIsBatchOptimal) {
    RngStream rng(37, Stream::Fuzz);
    std::vector<PolicySpec> others{Psjf{}, Rs{}, PracticalSek(0.5), PracticalSek(2), SekN(1, 2), FullSek(0.1, 0.5, 1, 3)};
    for (int trial = 0; trial < 400; ++trial) {
        const int k = 1 + trial % 3;
        std::vector<double> sizes;
        for (int i = 0; i < 1 + trial % 6; ++i) sizes.push_back(0.05 + rng.exponential(1.0));
        auto total = [&](const PolicySpec& p) {
            auto st = run_batch(p, sizes, k);
            return st.total_response();
        };
        const double srpt = total(Srpt{});
        const double opt = batch_oracle(sizes, k);
        EXPECT_NEAR(srpt, opt, 1e-9 * opt);
        for (const auto& p : others) EXPECT_GE(total(p), srpt - 1e-9 * srpt) << to_string(p);
    }
}

TEST(PolicySpecs, ParseRoundTrip) {
    for (const char* s : {"srpt", "psjf", "rs", "sek:eps=1", "sekn:eps=1,n=2", "fullsek:epsp=0.05,eps=0.1,x=1,y=2",
                          "srpt-est", "sek-est:eps=2"}) {
        auto p = parse_policy(s);
        EXPECT_EQ(to_string(p), s);
        EXPECT_EQ(to_string(parse_policy(to_string(p))), s);
    }
    EXPECT_EQ(policy_family(parse_policy("sek:eps=1.5")), "sek");
    EXPECT_EQ(policy_eps(parse_policy("sek-est:eps=2")), 2.0);
    EXPECT_EQ(policy_n(parse_policy("sekn:eps=1,n=3")), 3);
    EXPECT_TRUE(uses_estimates(parse_policy("srpt-est")));
    EXPECT_FALSE(uses_estimates(parse_policy("sek:eps=1")));
}

TEST(PolicySpecs, ParseErrors) {
    EXPECT_THROW(parse_policy("gittins"), ConfigError);
    EXPECT_THROW(parse_policy("sek"), ConfigError);
    EXPECT_THROW(parse_policy("sek:eps=0"), ConfigError);
    EXPECT_THROW(parse_policy("sekn:eps=1,n=0"), ConfigError);
    EXPECT_THROW(parse_policy("sekn:eps=1,n=1.5"), ConfigError);
    EXPECT_THROW(parse_policy("srpt:eps=1"), ConfigError);
    EXPECT_THROW(parse_policy("fullsek:epsp=0.2,eps=0.1,x=1,y=2"), ConfigError);
}
