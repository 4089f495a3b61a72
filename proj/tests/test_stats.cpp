#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>

#include "trussfa/stats.hpp"

using namespace trussfa;

TEST(StudentT, MatchesBoost)
{
    for (double df : {1.0, 2.0, 3.0, 5.0, 10.0, 30.0, 72.0, 120.0, 1000.0}) {
        boost::math::students_t dist(df);
        for (double t : {-12.0, -4.0, -2.0, -1.0, -0.64, -0.1, 0.0, 0.3, 0.64, 1.5, 2.5, 6.0, 25.0}) {
            EXPECT_NEAR(t_cdf(t, df), boost::math::cdf(dist, t), 1e-10) << "t=" << t << " df=" << df;
            const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
            EXPECT_NEAR(t_two_sided_p(t, df), p, 1e-10);
        }
        for (double q : {0.6, 0.9, 0.975, 0.995})
            EXPECT_NEAR(t_quantile(q, df), boost::math::quantile(dist, q), 1e-9 * std::max(1.0, std::abs(boost::math::quantile(dist, q))));
    }
}

TEST(StudentT, Examples)
{
    EXPECT_DOUBLE_EQ(t_cdf(0.0, 7.0), 0.5);
    const double p = t_two_sided_p(0.64, 72.0);
    EXPECT_NEAR(p, 0.524, 0.001);
    EXPECT_NEAR(p, 0.526, 0.02);
    EXPECT_NEAR(t_two_sided_p(1.96, 1e6), 0.05, 1e-3);
    EXPECT_NEAR(t_quantile(0.975, 72.0), 1.993464, 1e-6);
}

TEST(StudentT, PMonotoneInAbsT)
{
    double prev = 1.0;
    for (double t = 0.0; t < 8.0; t += 0.25) {
        const double p = t_two_sided_p(t, 72.0);
        EXPECT_LE(p, prev);
        EXPECT_GE(p, 0.0);
        prev = p;
    }
}

TEST(IncompleteBeta, Endpoints)
{
    EXPECT_EQ(incomplete_beta(2.0, 3.0, 0.0), 0.0);
    EXPECT_EQ(incomplete_beta(2.0, 3.0, 1.0), 1.0);
    EXPECT_NEAR(incomplete_beta(1.0, 1.0, 0.3), 0.3, 1e-14);
    EXPECT_NEAR(incomplete_beta(2.0, 2.0, 0.5), 0.5, 1e-14);
}
