#include <gtest/gtest.h>

#include <map>

#include "dcmlab/dcm.hpp"
#include "oracles.hpp"

using namespace dcmlab;

namespace {

DegreeSequence half_half(std::uint32_t n) {
    DegreeModel m;
    m.entries = {{{2, 3}, Fraction::make(1, 2)}, {{3, 2}, Fraction::make(1, 2)}};
    m.linear_types = {{2, 3}, {3, 2}};
    return materialize(m, n).sequence;
}

}  // namespace

TEST(Generate, DegreesAreConserved) {
    const auto seq = half_half(10);
    const auto g = generate(seq, 3);
    ASSERT_EQ(g.n(), 10u);
    EXPECT_EQ(g.m(), 25u);
    for (Vertex x = 0; x < g.n(); ++x) {
        EXPECT_EQ(g.out_degree(x), seq.out_degree(x));
        EXPECT_EQ(g.in_degree(x), seq.in_degree(x));
    }
    EXPECT_EQ(g.degree_sequence(), DegreeSequence(std::vector<Degree>(seq.d_minus().begin(), seq.d_minus().end()),
                                                  std::vector<Degree>(seq.d_plus().begin(), seq.d_plus().end()), false));
}

TEST(Generate, TransposeMatchesRebuild) {
    const auto g = generate(half_half(1000), 11);
    const auto rebuilt = MultiDigraph::from_edges(g.n(), std::span<const Edge>(g.edges()), g.seed());
    EXPECT_TRUE(std::equal(g.in_offsets().begin(), g.in_offsets().end(), rebuilt.in_offsets().begin()));
    EXPECT_TRUE(std::equal(g.in_sources().begin(), g.in_sources().end(), rebuilt.in_sources().begin()));
    // Every in-edge appears as an out-edge with the same multiplicity.
    for (Vertex y = 0; y < g.n(); ++y)
        for (const Vertex x : g.in_neighbors(y))
            EXPECT_EQ(std::count(g.in_neighbors(y).begin(), g.in_neighbors(y).end(), x), g.multiplicity(x, y));
}

TEST(Generate, SameSeedSameGraph) {
    const auto seq = half_half(500);
    EXPECT_TRUE(generate(seq, 7).same_structure(generate(seq, 7)));
    EXPECT_FALSE(generate(seq, 7).same_structure(generate(seq, 8)));
    EXPECT_FALSE(generate(seq, 7, 0).same_structure(generate(seq, 7, 1)));
}

TEST(Generate, SingleVertexGetsTwoSelfLoops) {
    const DegreeSequence seq({2}, {2});
    const auto g = generate(seq, 1);
    EXPECT_EQ(g.multiplicity(0, 0), 2u);
}

TEST(Generate, TwoUnitVerticesSplitEvenly) {
    const DegreeSequence seq({1, 1}, {1, 1}, false);
    int loops = 0;
    constexpr int kSeeds = 4000;
    for (int s = 0; s < kSeeds; ++s) loops += generate(seq, s).multiplicity(0, 0) == 1;
    // Binomial(4000, 1/2): sd ~ 31.6, so 4 sd ~ 126.
    EXPECT_NEAR(loops, kSeeds / 2, 126);
}

TEST(Generate, MatchesExhaustiveMatchingLaw) {
    const std::vector<int> din{2, 1, 2}, dout{1, 2, 2};
    const auto law = oracle::matching_law(din, dout);
    const DegreeSequence seq({2, 1, 2}, {1, 2, 2}, false);
    std::map<std::vector<std::pair<Vertex, Vertex>>, int> count;
    constexpr int kSeeds = 30000;
    for (int s = 0; s < kSeeds; ++s) {
        auto e = generate(seq, 99, s).edges();
        std::sort(e.begin(), e.end());
        ++count[e];
    }
    for (const auto& [e, c] : count) ASSERT_TRUE(law.count(e)) << "outcome outside the matching law";
    double chi2 = 0.0;
    for (const auto& [e, p] : law) {
        const double expect = p * kSeeds;
        const double got = count.count(e) ? count.at(e) : 0;
        chi2 += (got - expect) * (got - expect) / expect;
    }
    // law.size() - 1 degrees of freedom; chi-square 0.999 quantile is below dof + 6 sqrt(2 dof) for these sizes.
    const double dof = static_cast<double>(law.size() - 1);
    EXPECT_LT(chi2, dof + 6.0 * std::sqrt(2.0 * dof)) << law.size() << " outcomes";
}

TEST(GenerateSimple, AcceptsHalfHalf) {
    const auto seq = half_half(1000);
    std::uint64_t total = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto g = generate_simple(seq, s);
        EXPECT_TRUE(g.simple());
        total += g.attempts();
    }
    // Self-loops ~ Poisson(2.4) and double edges ~ Poisson(1.28): acceptance ~ e^-3.68.
    EXPECT_LT(total / 20.0, 200.0);
}

TEST(GenerateSimple, ImpossibleSequencesFail) {
    EXPECT_THROW(generate_simple(DegreeSequence({2}, {2}), 1, 50), SimpleGenerationError);
    EXPECT_THROW(generate_simple(DegreeSequence({2, 2}, {2, 2}), 1, 50), SimpleGenerationError);
}
