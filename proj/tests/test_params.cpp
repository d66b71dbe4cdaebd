#include <cmath>

#include <gtest/gtest.h>

#include "sekq/coupled.hpp"
#include "sekq/params.hpp"

using namespace sekq;

// Reference values computed separately at 30 significant digits.
TEST(DeriveParameters, WorkedExample) {
    auto p = derive_parameters(0.5, JobSizeModel(Exponential{1.0}), 2, 1.0);
    EXPECT_EQ(p.x, 1.0);
    EXPECT_EQ(p.y, 2.0);
    EXPECT_NEAR(p.rho_le_y, 0.296997075145080962, 1e-15);
    EXPECT_NEAR(p.c1, 2.0, 1e-15);
    EXPECT_NEAR(p.c2, 17.0089715268828556, 1e-12);
    EXPECT_NEAR(p.c3, 2.82508018886146839e-5, 1e-17);
    EXPECT_NEAR(p.c4, 1.0, 1e-15);
    EXPECT_NEAR(p.eps, 4.15233834743682167e-7, 1e-19);
    EXPECT_NEAR(p.eps_prime, p.eps / 2, 1e-22);
    EXPECT_NEAR(p.improvement_bound, 5.86534440139676685e-12, 1e-23);
    EXPECT_GT(p.improvement_bound, 0.0);
}

TEST(DeriveParameters, Ordering) {
    for (double lambda : {0.1, 0.5, 0.9})
        for (double x : {0.1, 1.0, 3.0})
            for (int k : {2, 3}) {
                auto p = derive_parameters(lambda, JobSizeModel(Exponential{1.0}), k, x);
                EXPECT_LE(p.eps, x / 6);
                EXPECT_EQ(p.eps_prime, p.eps / 2);
                EXPECT_NO_THROW(p.policy());
                EXPECT_GT(p.improvement_bound, 0.0);
            }
}

TEST(DeriveParameters, InvalidX) {
    EXPECT_THROW(derive_parameters(0.5, JobSizeModel(Uniform{0, 2}), 2, 3.0), ConfigError);
    EXPECT_THROW(derive_parameters(0.5, JobSizeModel(Exponential{1.0}), 2, 0.0), ConfigError);
    EXPECT_THROW(derive_parameters(0.5, JobSizeModel(Exponential{1.0}), 1, 1.0), ConfigError);
}

TEST(DeriveParameters, C1IsLinearInLambda) {
    JobSizeModel m(Exponential{1.0});
    for (int k : {2, 3, 4}) {
        auto a = derive_parameters(0.3, m, k, 1.0), b = derive_parameters(0.6, m, k, 1.0);
        EXPECT_NEAR(b.c1, 2 * a.c1, 1e-15);
        EXPECT_EQ(a.c4, k / 2.0);
        EXPECT_GT(a.c2, 0.0);
        EXPECT_GT(a.c3, 0.0);
    }
}

TEST(PracticalParameters, EchoesThresholds) {
    auto p = practical_parameters(0.8, JobSizeModel(Exponential{1.0}), 2, 1.0, 0.1, 0.05);
    EXPECT_EQ(p.eps, 0.1);
    EXPECT_EQ(p.eps_prime, 0.05);
    EXPECT_EQ(p.y, 2.0);
    EXPECT_NEAR(p.c1, 3.2, 1e-15);
    EXPECT_NEAR(p.c2, 27.3087709084748814, 1e-12);
    EXPECT_NEAR(p.c3, 4.39790856207176932e-6, 1e-18);
    EXPECT_THROW(practical_parameters(0.8, JobSizeModel(Exponential{1.0}), 2, 1.0, 0.1, 0.2), ConfigError);
    EXPECT_NO_THROW(practical_parameters(0.8, JobSizeModel(Exponential{1.0}), 2, 1.0, 0.1, 0.1));
}

TEST(ClassifyScenario, Examples) {
    auto p = practical_parameters(0.8, JobSizeModel(Exponential{1.0}), 2, 1.0, 0.1, 0.05);
    const double t = 10.0;
    std::vector<Arrival> bad{{t + 0.3, 5.0}};
    EXPECT_EQ(classify_scenario(t, 1.5, bad, p, 2), Scenario::Bad);

    std::vector<Arrival> good{{t + 1.8, 1.2}, {t + 2.2, 1.8}, {t + 7.5, 0.1}};
    EXPECT_EQ(classify_scenario(t, 1.5, good, p, 2), Scenario::Good);

    EXPECT_EQ(classify_scenario(t, 1.5, {}, p, 2), Scenario::Neutral);
}

TEST(ClassifyScenario, WindowEdges) {
    auto p = practical_parameters(0.8, JobSizeModel(Exponential{1.0}), 2, 1.0, 0.1, 0.05);
    // Bad window closes at t + 2k eps = 0.4.
    EXPECT_EQ(classify_scenario(0, 1.5, std::vector<Arrival>{{0.4, 1}}, p, 2), Scenario::Bad);
    EXPECT_EQ(classify_scenario(0, 1.5, std::vector<Arrival>{{0.41, 1}}, p, 2), Scenario::Neutral);
    // Burst arrivals must land in (k(b - 2x/3), k(b - x/3)] = (1.667, 2.333] with sizes in [x, 2x].
    EXPECT_EQ(classify_scenario(0, 1.5, std::vector<Arrival>{{1.6, 1.2}, {2.2, 1.8}}, p, 2), Scenario::Neutral);
    EXPECT_EQ(classify_scenario(0, 1.5, std::vector<Arrival>{{1.8, 1.2}, {2.4, 1.8}}, p, 2), Scenario::Neutral);
    EXPECT_EQ(classify_scenario(0, 1.5, std::vector<Arrival>{{1.8, 0.9}, {2.2, 1.8}}, p, 2), Scenario::Neutral);
    EXPECT_EQ(classify_scenario(0, 1.5, std::vector<Arrival>{{1.8, 1.2}}, p, 2), Scenario::Neutral);
    // A third arrival before k(b + 2x) = 7 spoils it.
    EXPECT_EQ(classify_scenario(0, 1.5, std::vector<Arrival>{{1.8, 1.2}, {2.2, 1.8}, {6.9, 0.1}}, p, 2),
              Scenario::Neutral);
    EXPECT_EQ(classify_scenario(0, 1.5, std::vector<Arrival>{{1.8, 1.2}, {2.0, 1.0}, {2.2, 1.8}}, p, 2),
              Scenario::Neutral);
}
