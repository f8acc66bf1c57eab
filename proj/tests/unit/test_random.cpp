#include <gtest/gtest.h>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>

#include "abcmix/random.hpp"
#include "support.hpp"

using namespace abcmix;
using abcmix::testing::ks_pvalue;
using abcmix::testing::std_normal_cdf;

TEST(Streams, KeyedStreamsDifferAndRepeat) {
    Rng a = make_stream(1, 2, 3);
    Rng b = make_stream(1, 2, 3);
    Rng c = make_stream(1, 2, 4);
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
}

TEST(NormalFunctions, QuantileInvertsCdf) {
    for (double p : {1e-12, 1e-4, 0.025, 0.5, 0.9, 1 - 1e-9}) {
        EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-12 + 1e-9 * p);
    }
    EXPECT_NEAR(normal_cdf(1.0), std_normal_cdf(1.0), 1e-15);
    EXPECT_NEAR(log_normal_cdf(-40.0), -804.6084420137538, 1e-6);
}

TEST(LogSumExp, StableAndEmpty) {
    const std::vector<double> v = {1000.0, 1000.0};
    EXPECT_NEAR(log_sum_exp(v), 1000.0 + std::log(2.0), 1e-12);
    EXPECT_EQ(log_sum_exp(std::vector<double>{}), -std::numeric_limits<double>::infinity());
    const auto w = normalize_log_weights(std::vector<double>{-1000.0, -1000.0 + std::log(3.0)});
    EXPECT_NEAR(w[0], 0.25, 1e-13);
    EXPECT_NEAR(w[1], 0.75, 1e-13);
}

class GammaShape : public ::testing::TestWithParam<double> {};

TEST_P(GammaShape, MatchesGammaCdf) {
    const double shape = GetParam();
    const boost::math::gamma_distribution<double> law(shape, 1.0);
    Rng rng = make_stream(23, static_cast<std::uint64_t>(shape * 1000));
    std::vector<double> x(20000);
    for (double& v : x) v = sample_gamma(rng, shape);
    EXPECT_GT(ks_pvalue(x, [&](double v) { return v <= 0 ? 0.0 : boost::math::cdf(law, v); }),
              0.01);
}

INSTANTIATE_TEST_SUITE_P(Shapes, GammaShape, ::testing::Values(0.05, 0.5, 1.0, 2.0, 30.0));

TEST(Gamma, SmallShapeLogDrawIsFinite) {
    Rng rng = make_stream(4);
    for (int i = 0; i < 1000; ++i) {
        EXPECT_TRUE(std::isfinite(sample_log_gamma(rng, 1e-3)));
    }
    EXPECT_EQ(sample_gamma(rng, 0.0), 0.0);
}

TEST(Beta, MatchesBetaCdfAndDegenerateEnds) {
    const boost::math::beta_distribution<double> law(0.7, 2.5);
    Rng rng = make_stream(5);
    std::vector<double> x(20000);
    for (double& v : x) v = sample_beta(rng, 0.7, 2.5);
    EXPECT_GT(ks_pvalue(x, [&](double v) { return boost::math::cdf(law, std::clamp(v, 0.0, 1.0)); }),
              0.01);
    EXPECT_EQ(sample_beta(rng, 2.0, 0.0), 1.0);
    EXPECT_EQ(sample_beta(rng, 0.0, 2.0), 0.0);
}

TEST(Dirichlet, SimplexAndMarginals) {
    const std::vector<double> alpha = {0.3, 1.0, 4.0};
    const double total = 5.3;
    Rng rng = make_stream(6);
    std::vector<std::vector<double>> marg(3);
    for (int i = 0; i < 20000; ++i) {
        const auto d = sample_dirichlet(rng, alpha);
        double s = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            ASSERT_GT(d[k], 0.0);
            ASSERT_LT(d[k], 1.0);
            s += d[k];
            marg[k].push_back(d[k]);
        }
        ASSERT_NEAR(s, 1.0, 1e-12);
    }
    for (std::size_t k = 0; k < 3; ++k) {
        const boost::math::beta_distribution<double> law(alpha[k], total - alpha[k]);
        EXPECT_GT(ks_pvalue(marg[k], [&](double v) { return boost::math::cdf(law, v); }), 0.01)
            << "coordinate " << k;
    }
}

namespace {

// CDF of N(mean, sd^2) conditioned on (0, inf).
double truncated_cdf(double x, double mean, double sd) {
    if (x <= 0) return 0.0;
    const double lo = std_normal_cdf(-mean / sd);
    return (std_normal_cdf((x - mean) / sd) - lo) / (1.0 - lo);
}

}  // namespace

TEST(TruncatedNormal, MatchesAnalyticCdf) {
    for (auto [mean, sd] : {std::pair{0.1, 1.0}, std::pair{-3.0, 0.5}, std::pair{2.0, 0.7}}) {
        Rng rng = make_stream(7, static_cast<std::uint64_t>(mean * 100 + 500));
        std::vector<double> x(20000);
        for (double& v : x) {
            v = sample_positive_truncated_normal(rng, mean, sd);
            ASSERT_GT(v, 0.0);
        }
        EXPECT_GT(ks_pvalue(x, [&](double v) { return truncated_cdf(v, mean, sd); }), 0.01)
            << "mean " << mean << " sd " << sd;
    }
}

TEST(TruncatedNormal, DensityIntegratesToOne) {
    for (auto [mean, sd] : {std::pair{0.1, 1.0}, std::pair{-4.0, 0.5}}) {
        double sum = 0.0;
        const double dx = 1e-4;
        for (double x = dx / 2; x < 20.0; x += dx) {
            sum += std::exp(positive_truncated_normal_log_density(x, mean, sd)) * dx;
        }
        EXPECT_NEAR(sum, 1.0, 1e-6);
    }
}
