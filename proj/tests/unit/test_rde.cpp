#include <gtest/gtest.h>

#include <cmath>

#include "dcmlab/rde.hpp"

using namespace dcmlab;

namespace {

DegreeModel m23() {
    DegreeModel m;
    m.entries = {{{2, 3}, Fraction::make(1, 2)}, {{3, 2}, Fraction::make(1, 2)}};
    m.linear_types = {{2, 3}, {3, 2}};
    return m;
}

DegreeModel regular(Degree d) {
    DegreeModel m;
    m.entries = {{{d, d}, Fraction::make(1, 1)}};
    m.linear_types = {{d, d}};
    return m;
}

}  // namespace

TEST(Kernel, TailBiasedLaw) {
    const RdeKernel k(m23());
    ASSERT_EQ(k.types().size(), 2u);
    // Owner of a uniform tail: (2,3) with weight 3/2, (3,2) with weight 2/2.
    EXPECT_NEAR(k.tail_probability(0), 3.0 / 5.0, 1e-15);
    EXPECT_EQ(k.types()[0], (DegreeType{2, 3}));
    EXPECT_NEAR(k.tail_probability(1), 2.0 / 5.0, 1e-15);
    EXPECT_NEAR(k.n_over_m(), 2.0 / 5.0, 1e-15);
    EXPECT_FALSE(k.degenerate());
    EXPECT_TRUE(RdeKernel(regular(3)).degenerate());
}

TEST(Kernel, DrawFrequencies) {
    const RdeKernel k(m23());
    Philox rng(3, 0);
    int out_two = 0;
    constexpr int kDraws = 100000;
    for (int i = 0; i < kDraws; ++i) out_two += k.draw_tail_type(rng).out_deg == 2;
    EXPECT_NEAR(out_two / double(kDraws), 0.4, 0.006);  // 4 sd
}

TEST(Population, MeanStaysNearOne) {
    const auto pop = iterate(make_population(m23(), 200000, 1), 20);
    ASSERT_EQ(pop.raw_means.size(), 20u);
    for (const double m : pop.raw_means) EXPECT_NEAR(m, 1.0, 5e-3);
    EXPECT_NEAR(pairwise_sum(pop.pool) / pop.pool.size(), 1.0, 1e-12);
}

TEST(Population, RegularPoolCollapses) {
    const auto pop = iterate(make_population(regular(3), 100000, 2), 60);
    EXPECT_LT(pool_variance(pop.pool), 1e-8);
}

TEST(Population, ThreadCountDoesNotChangeResults) {
    const auto a = iterate(make_population(m23(), 50000, 9), 5, 1);
    const auto b = iterate(make_population(m23(), 50000, 9), 5, 4);
    EXPECT_EQ(a.pool, b.pool);
    EXPECT_EQ(sample_x(a, 1000, 3, 1), sample_x(b, 1000, 3, 3));
}

TEST(Population, RejectsTinyPool) {
    EXPECT_THROW(iterate(make_population(m23(), 1, 1), 1), InputError);
}

TEST(SampleX, MeanIsOne) {
    const auto pop = iterate(make_population(m23(), 200000, 4), 30);
    const auto xs = sample_x(pop, 1000000, 5);
    EXPECT_NEAR(pairwise_sum(xs) / xs.size(), 1.0, 1e-2);
}

TEST(SampleX, RegularFixedPointIsOne) {
    const auto pop = iterate(make_population(regular(2), 100000, 2), 60);
    for (const double x : sample_x(pop, 1000, 1)) EXPECT_NEAR(x, 1.0, 1e-3);
}

TEST(TailFit, RecoversSyntheticLeftExponent) {
    // Inverse transform for F(x) = exp(-x^-alpha): x = (-log U)^(-1/alpha).
    const double alpha = 1.7095;
    Philox rng(77, 0);
    std::vector<double> xs(1000000);
    for (double& x : xs) x = std::pow(-std::log(rng.uniform_open0()), -1.0 / alpha);
    const auto fit = fit_left_tail(xs);
    EXPECT_NEAR(fit.exponent, alpha, 0.10 * alpha);
    EXPECT_GT(fit.r2, 0.99);
    EXPECT_GE(fit.points, 4u);
}

TEST(TailFit, RecoversSyntheticRightExponent) {
    // 1 - F(x) = exp(-x^k): x = (-log U)^(1/k).
    const double k = 1.5;
    Philox rng(78, 0);
    std::vector<double> xs(1000000);
    for (double& x : xs) x = std::pow(-std::log(rng.uniform_open0()), 1.0 / k);
    const auto fit = fit_right_tail(xs);
    EXPECT_NEAR(fit.exponent, k, 0.10 * k);
}

TEST(TailFit, RefusesDegenerateSamples) {
    const std::vector<double> ones(100000, 1.0);
    EXPECT_THROW(fit_left_tail(ones), FitRefused);
    EXPECT_THROW(fit_right_tail(ones), FitRefused);
    EXPECT_THROW(fit_left_tail(std::vector<double>(10, 0.5)), FitRefused);
}

TEST(TailFit, ExplicitWindowAndBins) {
    Philox rng(5, 0);
    std::vector<double> xs(200000);
    for (double& x : xs) x = std::pow(-std::log(rng.uniform_open0()), -1.0 / 2.0);
    TailFitOptions opt;
    opt.window = std::make_pair(0.4, 0.9);
    const auto fit = fit_left_tail(xs, opt);
    EXPECT_DOUBLE_EQ(fit.window_lo, 0.4);
    EXPECT_DOUBLE_EQ(fit.window_hi, 0.9);
    EXPECT_EQ(fit.bin_counts.size(), 10u);
    EXPECT_NEAR(fit.exponent, 2.0, 0.2);
}
